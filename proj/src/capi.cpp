#include "perfhom/perfhom.h"

#include <cstring>
#include <new>
#include <string>

#include "perfhom/config.hpp"
#include "perfhom/corrector.hpp"
#include "perfhom/error.hpp"
#include "perfhom/homogenize.hpp"
#include "perfhom/pipeline.hpp"

struct ph_config {
  perfhom::ExperimentConfig value;
};

struct ph_report {
  perfhom::RunReport value;
  std::string summary;
};

struct ph_corrector {
  perfhom::PeriodicCorrector value;
};

namespace {

thread_local std::string g_last_error;

ph_status status_of(perfhom::ErrorKind k) {
  using perfhom::ErrorKind;
  switch (k) {
    case ErrorKind::Argument: return PH_ERR_ARGUMENT;
    case ErrorKind::Geometry: return PH_ERR_GEOMETRY;
    case ErrorKind::UnderResolved: return PH_ERR_UNDER_RESOLVED;
    case ErrorKind::Singular: return PH_ERR_SINGULAR;
    case ErrorKind::NoConvergence: return PH_ERR_NO_CONVERGENCE;
    case ErrorKind::Breakdown: return PH_ERR_BREAKDOWN;
    case ErrorKind::Config: return PH_ERR_CONFIG;
    case ErrorKind::Io: return PH_ERR_IO;
  }
  return PH_ERR_INTERNAL;
}

template <class F>
ph_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return PH_OK;
  } catch (const perfhom::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PH_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PH_ERR_INTERNAL;
  }
}

ph_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return PH_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* ph_last_error(void) { return g_last_error.c_str(); }

const char* ph_status_string(ph_status s) {
  switch (s) {
    case PH_OK: return "ok";
    case PH_ERR_ARGUMENT: return "argument error";
    case PH_ERR_CONFIG: return "configuration error";
    case PH_ERR_GEOMETRY: return "geometry error";
    case PH_ERR_UNDER_RESOLVED: return "under-resolved geometry";
    case PH_ERR_SINGULAR: return "singular system";
    case PH_ERR_NO_CONVERGENCE: return "no convergence";
    case PH_ERR_BREAKDOWN: return "solver breakdown";
    case PH_ERR_IO: return "i/o error";
    case PH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int ph_status_exit_code(ph_status s) {
  switch (s) {
    case PH_OK: return 0;
    case PH_ERR_SINGULAR:
    case PH_ERR_NO_CONVERGENCE:
    case PH_ERR_BREAKDOWN: return 3;
    default: return 2;
  }
}

ph_status ph_command_parse(const char* name, ph_command* out) {
  if (!name || !out) return null_arg("name/out");
  const auto c = perfhom::parse_command(name);
  if (!c) {
    g_last_error = std::string("unknown command '") + name + "'";
    return PH_ERR_ARGUMENT;
  }
  *out = static_cast<ph_command>(*c);
  return PH_OK;
}

ph_status ph_config_default(ph_config** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new ph_config{}; });
}

ph_status ph_config_load(const char* path, ph_config** out) {
  if (!path || !out) return null_arg("path/out");
  *out = nullptr;
  return guarded([&] { *out = new ph_config{perfhom::load_config(path)}; });
}

ph_status ph_config_parse(const char* text, ph_config** out) {
  if (!text || !out) return null_arg("text/out");
  *out = nullptr;
  return guarded([&] { *out = new ph_config{perfhom::parse_config(text)}; });
}

ph_status ph_config_serialize(const ph_config* c, char* buf, size_t capacity, size_t* needed) {
  if (!c || !needed) return null_arg("config/needed");
  return guarded([&] {
    const std::string s = perfhom::serialize_config(c->value);
    *needed = s.size() + 1;
    if (buf && capacity >= s.size() + 1) std::memcpy(buf, s.c_str(), s.size() + 1);
    else if (buf || capacity) perfhom::fail(perfhom::ErrorKind::Argument, "serialize: buffer too small");
  });
}

ph_status ph_config_set(ph_config* c, const char* section, const char* key, const char* value) {
  if (!c || !section || !key || !value) return null_arg("config/section/key/value");
  return guarded([&] {
    perfhom::ExperimentConfig copy = c->value;
    perfhom::set_config_value(copy, section, key, value);
    perfhom::validate_config(copy);
    c->value = std::move(copy);
  });
}

int ph_config_equal(const ph_config* a, const ph_config* b) {
  return a && b && a->value == b->value ? 1 : 0;
}

void ph_config_free(ph_config* c) { delete c; }

ph_status ph_run(ph_command command, const ph_config* c, const char* out_dir, int jobs, int self_test,
                 ph_report** out) {
  if (!c || !out) return null_arg("config/out");
  *out = nullptr;
  if (command < PH_CMD_GEOMETRY_CHECK || command > PH_CMD_ALL) {
    g_last_error = "unknown command";
    return PH_ERR_ARGUMENT;
  }
  return guarded([&] {
    perfhom::RunOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    opt.jobs = jobs;
    opt.self_test = self_test != 0;
    auto rep = perfhom::run(static_cast<perfhom::Command>(command), c->value, opt);
    auto* r = new ph_report{std::move(rep), {}};
    r->summary = r->value.summary();
    *out = r;
  });
}

int ph_report_exit_code(const ph_report* r) { return r ? r->value.exit_code() : 2; }

size_t ph_report_verdict_count(const ph_report* r) { return r ? r->value.verdicts.size() : 0; }

ph_status ph_report_verdict(const ph_report* r, size_t index, const char** name, int* pass,
                            const char** measured, const char** expected) {
  if (!r) return null_arg("report");
  if (index >= r->value.verdicts.size()) {
    g_last_error = "verdict index out of range";
    return PH_ERR_ARGUMENT;
  }
  const auto& v = r->value.verdicts[index];
  if (name) *name = v.name.c_str();
  if (pass) *pass = v.pass ? 1 : 0;
  if (measured) *measured = v.measured.c_str();
  if (expected) *expected = v.expected.c_str();
  return PH_OK;
}

const char* ph_report_summary(const ph_report* r) { return r ? r->summary.c_str() : ""; }

const char* ph_report_log(const ph_report* r) { return r ? r->value.log.c_str() : ""; }

void ph_report_free(ph_report* r) { delete r; }

ph_status ph_periodic_corrector_solve(double cx, double cy, double r, int n, ph_corrector** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new ph_corrector{perfhom::solve_periodic_corrector(perfhom::HoleShape::disk({cx, cy}, r), n)};
  });
}

ph_status ph_corrector_sample(const ph_corrector* w, double y1, double y2, double* value) {
  if (!w || !value) return null_arg("corrector/value");
  return guarded([&] { *value = w->value.sample({y1, y2}); });
}

ph_status ph_corrector_max(const ph_corrector* w, double* value) {
  if (!w || !value) return null_arg("corrector/value");
  return guarded([&] { *value = w->value.max_value(); });
}

void ph_corrector_free(ph_corrector* w) { delete w; }

ph_status ph_fit_rate(const double* eps, const double* err, size_t count, double* slope, double* intercept,
                      double* max_residual) {
  if (!eps || !err) return null_arg("eps/err");
  return guarded([&] {
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < count; ++i) pts.push_back({eps[i], err[i]});
    const auto fit = perfhom::fit_rate(pts);
    if (slope) *slope = fit.slope;
    if (intercept) *intercept = fit.intercept;
    if (max_residual) *max_residual = fit.max_residual;
  });
}

}  // extern "C"
