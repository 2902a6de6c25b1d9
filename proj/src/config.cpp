#include "perfhom/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "perfhom/error.hpp"
#include "perfhom/io.hpp"

namespace perfhom {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  fail(ErrorKind::Config, key + ": " + why);
}

double to_double(const std::string& key, const std::string& w) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || p != w.data() + w.size() || !std::isfinite(v)) bad(key, "not a number: '" + w + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& w) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || p != w.data() + w.size()) bad(key, "not an integer: '" + w + "'");
  return v;
}

std::vector<double> doubles(const std::string& key, const std::string& value, std::size_t count = 0) {
  std::vector<double> out;
  for (const auto& w : words(value)) out.push_back(to_double(key, w));
  if (count && out.size() != count) bad(key, "expected " + std::to_string(count) + " values");
  if (out.empty()) bad(key, "missing value");
  return out;
}

double one_double(const std::string& key, const std::string& value, double lo, double hi) {
  const double v = doubles(key, value, 1)[0];
  if (!(v >= lo && v <= hi)) bad(key, "value " + value + " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
  return v;
}

int one_int(const std::string& key, const std::string& value, long long lo, long long hi) {
  const auto w = words(value);
  if (w.size() != 1) bad(key, "expected one integer");
  const long long v = to_int(key, w[0]);
  if (v < lo || v > hi) bad(key, "value " + value + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return int(v);
}

Point point(const std::string& key, const std::string& value) {
  const auto v = doubles(key, value, 2);
  return {v[0], v[1]};
}

ShapeKind shape_kind(const std::string& key, const std::string& w) {
  if (w == "disk") return ShapeKind::Disk;
  if (w == "ellipse") return ShapeKind::Ellipse;
  bad(key, "unknown shape '" + w + "' (disk, ellipse)");
}

std::string pt(Point p) { return format_double(p.x) + " " + format_double(p.y); }

const char* kind_name(ShapeKind k) { return k == ShapeKind::Disk ? "disk" : "ellipse"; }

const char* choice_name(CorrectorChoice c) {
  switch (c) {
    case CorrectorChoice::Full: return "full";
    case CorrectorChoice::PeriodicOnly: return "periodic";
    case CorrectorChoice::Both: return "both";
  }
  return "both";
}

bool integer_ratio(double a, double b) {
  const double r = a / b;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace

PerforationField ExperimentConfig::field() const {
  if (!geometry.perforated) return PerforationField::empty();
  DefectFamily fam;
  fam.overrides = geometry.overrides;
  if (geometry.decay_amplitude > 0) fam.decay = DecayRule{geometry.decay_amplitude, geometry.decay_ratio};
  return PerforationField(geometry.pattern, fam);
}

MacroProblem ExperimentConfig::macro_problem(double eps) const {
  MacroProblem p;
  p.lo = macro.lo;
  p.hi = macro.hi;
  p.source = macro.source;
  p.anchor = macro.anchor;
  p.eps = eps;
  return p;
}

StudySpec ExperimentConfig::study_spec() const {
  StudySpec s;
  s.problem = macro_problem(macro.eps.empty() ? 0.125 : macro.eps.front());
  s.field = field();
  s.eps = macro.eps;
  s.n = macro.cell_resolution;
  s.truncation = corrector.truncation;
  s.defect_cell = macro.defect_cell;
  s.choice = macro.choice;
  s.jobs = run.jobs;
  return s;
}

void set_config_value(ExperimentConfig& c, const std::string& section, const std::string& key,
                      const std::string& value) {
  const std::string k = section + "." + key;
  auto& g = c.geometry;
  if (section == "geometry") {
    if (key == "pattern") {
      const auto w = trim(value);
      if (w == "none") {
        g.perforated = false;
      } else {
        g.perforated = true;
        g.pattern.kind = shape_kind(k, w);
      }
    } else if (key == "center") {
      g.pattern.center = point(k, value);
    } else if (key == "radii") {
      const auto v = doubles(k, value, 2);
      for (double r : v)
        if (!(r > 0 && r < 0.5)) bad(k, "radii must lie in (0, 0.5)");
      g.pattern.r1 = v[0];
      g.pattern.r2 = v[1];
    } else if (key == "rotation") {
      g.pattern.rotation = one_double(k, value, -10, 10);
    } else if (key == "override") {
      // i j kind cx cy r1 r2 rotation, local cell coordinates
      const auto w = words(value);
      if (w.size() != 8) bad(k, "expected: i j kind cx cy r1 r2 rotation");
      const CellIndex cell{int(to_int(k, w[0])), int(to_int(k, w[1]))};
      if (inf_norm(cell) > 1000) bad(k, "cell index out of range");
      HoleShape s{shape_kind(k, w[2]), {to_double(k, w[3]), to_double(k, w[4])}, to_double(k, w[5]),
                  to_double(k, w[6]), to_double(k, w[7])};
      if (!(s.r1 > 0 && s.r1 < 0.5 && s.r2 > 0 && s.r2 < 0.5)) bad(k, "radii must lie in (0, 0.5)");
      g.overrides[cell] = s;
    } else if (key == "decay_amplitude") {
      g.decay_amplitude = one_double(k, value, 0, 0.5);
    } else if (key == "decay_ratio") {
      g.decay_ratio = one_double(k, value, 0, 0.999);
    } else if (key == "window") {
      g.window = one_int(k, value, 1, 200);
    } else if (key == "a2_samples") {
      g.a2_samples = one_int(k, value, 0, 100000);
    } else {
      bad(k, "unknown key");
    }
  } else if (section == "corrector") {
    if (key == "resolution")
      c.corrector.resolution = one_int(k, value, 64, 1024);
    else if (key == "truncation")
      c.corrector.truncation = one_int(k, value, 1, 16);
    else if (key == "growth_truncation")
      c.corrector.growth_truncation = one_int(k, value, 1, 16);
    else if (key == "trials")
      c.corrector.trials = one_int(k, value, 1, 100000);
    else
      bad(k, "unknown key");
  } else if (section == "macro") {
    auto& m = c.macro;
    if (key == "domain") {
      const auto v = doubles(k, value, 4);
      m.lo = {v[0], v[1]};
      m.hi = {v[2], v[3]};
      if (!(m.hi.x > m.lo.x && m.hi.y > m.lo.y)) bad(k, "empty rectangle");
    } else if (key == "source") {
      const auto w = trim(value);
      if (w == "bump")
        m.source.kind = Source::Kind::Bump;
      else if (w == "constant")
        m.source.kind = Source::Kind::Constant;
      else
        bad(k, "unknown source '" + w + "' (bump, constant)");
    } else if (key == "bump_center") {
      m.source.center = point(k, value);
    } else if (key == "bump_radius") {
      m.source.radius = one_double(k, value, 1e-6, 1e3);
    } else if (key == "bump_amplitude") {
      m.source.amplitude = one_double(k, value, -1e6, 1e6);
    } else if (key == "constant_value") {
      m.source.value = one_double(k, value, -1e6, 1e6);
    } else if (key == "anchor") {
      m.anchor = point(k, value);
    } else if (key == "eps") {
      m.eps = doubles(k, value);
      for (double e : m.eps)
        if (!(e > 0 && e < 1) || !integer_ratio(1.0, e)) bad(k, "each eps must be 1/m for an integer m > 1");
    } else if (key == "cell_resolution") {
      m.cell_resolution.clear();
      for (const auto& w : words(value)) m.cell_resolution.push_back(one_int(k, w, 16, 1024));
      if (m.cell_resolution.empty()) bad(k, "missing value");
    } else if (key == "corrector_choice") {
      const auto w = trim(value);
      if (w == "full")
        m.choice = CorrectorChoice::Full;
      else if (w == "periodic")
        m.choice = CorrectorChoice::PeriodicOnly;
      else if (w == "both")
        m.choice = CorrectorChoice::Both;
      else
        bad(k, "unknown corrector choice '" + w + "' (full, periodic, both)");
    } else if (key == "defect_cell") {
      const auto w = words(value);
      if (w.size() != 2) bad(k, "expected two integers");
      m.defect_cell = {int(to_int(k, w[0])), int(to_int(k, w[1]))};
    } else {
      bad(k, "unknown key");
    }
  } else if (section == "poincare") {
    auto& p = c.poincare;
    if (key == "eps") {
      p.eps = doubles(k, value);
      for (double e : p.eps)
        if (!(e > 0 && e < 1) || !integer_ratio(1.0, e)) bad(k, "each eps must be 1/m for an integer m > 1");
    } else if (key == "cell_resolution") {
      p.cell_resolution = one_int(k, value, 16, 1024);
    } else if (key == "box_cell_resolution") {
      p.box_cell_resolution = one_int(k, value, 16, 4096);
    } else if (key == "coupling_resolution") {
      p.coupling_resolution = one_int(k, value, 64, 1024);
    } else {
      bad(k, "unknown key");
    }
  } else if (section == "run") {
    if (key == "output") {
      c.run.output = trim(value);
      if (c.run.output.empty()) bad(k, "empty path");
    } else if (key == "seed") {
      const auto w = words(value);
      if (w.size() != 1) bad(k, "expected one integer");
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(w[0].data(), w[0].data() + w[0].size(), v);
      if (ec != std::errc() || p != w[0].data() + w[0].size()) bad(k, "not an unsigned integer");
      c.run.seed = v;
    } else if (key == "jobs") {
      c.run.jobs = one_int(k, value, 1, 64);
    } else {
      bad(k, "unknown key");
    }
  } else {
    fail(ErrorKind::Config, "unknown section [" + section + "]");
  }
}

void validate_config(const ExperimentConfig& c) {
  if (c.geometry.perforated) {
    try {
      validate_shape(c.geometry.pattern);
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("geometry: ") + e.what());
    }
  }
  if (c.macro.cell_resolution.size() != c.macro.eps.size())
    fail(ErrorKind::Config, "macro.cell_resolution needs one entry per macro.eps value");
  if (c.corrector.growth_truncation < c.corrector.truncation)
    fail(ErrorKind::Config, "corrector.growth_truncation must be >= corrector.truncation");
  const Point ext = c.macro.hi - c.macro.lo;
  for (double e : c.macro.eps)
    if (!integer_ratio(ext.x, e) || !integer_ratio(ext.y, e))
      fail(ErrorKind::Config, "macro.eps " + format_double(e) + " does not tile the domain");
  for (double e : c.poincare.eps)
    if (!integer_ratio(ext.x, e) || !integer_ratio(ext.y, e))
      fail(ErrorKind::Config, "poincare.eps " + format_double(e) + " does not tile the domain");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  bool overrides_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') fail(ErrorKind::Config, "malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section != "geometry" && section != "corrector" && section != "macro" && section != "poincare" &&
            section != "run")
          fail(ErrorKind::Config, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorKind::Config, "expected key = value");
      if (section.empty()) fail(ErrorKind::Config, "key outside any section");
      const std::string key = trim(line.substr(0, eq));
      if (section == "geometry" && key == "override" && !overrides_seen) {
        c.geometry.overrides.clear();
        overrides_seen = true;
      }
      set_config_value(c, section, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) fail(ErrorKind::Config, e.what());
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& g = c.geometry;
  o << "[geometry]\n";
  o << "pattern = " << (g.perforated ? kind_name(g.pattern.kind) : "none") << '\n';
  o << "center = " << pt(g.pattern.center) << '\n';
  o << "radii = " << format_double(g.pattern.r1) << ' ' << format_double(g.pattern.r2) << '\n';
  o << "rotation = " << format_double(g.pattern.rotation) << '\n';
  for (const auto& [k, s] : g.overrides)
    o << "override = " << k.i << ' ' << k.j << ' ' << kind_name(s.kind) << ' ' << pt(s.center) << ' '
      << format_double(s.r1) << ' ' << format_double(s.r2) << ' ' << format_double(s.rotation) << '\n';
  o << "decay_amplitude = " << format_double(g.decay_amplitude) << '\n';
  o << "decay_ratio = " << format_double(g.decay_ratio) << '\n';
  o << "window = " << g.window << '\n';
  o << "a2_samples = " << g.a2_samples << '\n';
  o << "\n[corrector]\n";
  o << "resolution = " << c.corrector.resolution << '\n';
  o << "truncation = " << c.corrector.truncation << '\n';
  o << "growth_truncation = " << c.corrector.growth_truncation << '\n';
  o << "trials = " << c.corrector.trials << '\n';
  const auto& m = c.macro;
  o << "\n[macro]\n";
  o << "domain = " << pt(m.lo) << ' ' << pt(m.hi) << '\n';
  o << "source = " << (m.source.kind == Source::Kind::Bump ? "bump" : "constant") << '\n';
  o << "bump_center = " << pt(m.source.center) << '\n';
  o << "bump_radius = " << format_double(m.source.radius) << '\n';
  o << "bump_amplitude = " << format_double(m.source.amplitude) << '\n';
  o << "constant_value = " << format_double(m.source.value) << '\n';
  o << "anchor = " << pt(m.anchor) << '\n';
  o << "eps =";
  for (double e : m.eps) o << ' ' << format_double(e);
  o << "\ncell_resolution =";
  for (int n : m.cell_resolution) o << ' ' << n;
  o << "\ncorrector_choice = " << choice_name(m.choice) << '\n';
  o << "defect_cell = " << m.defect_cell.i << ' ' << m.defect_cell.j << '\n';
  o << "\n[poincare]\n";
  o << "eps =";
  for (double e : c.poincare.eps) o << ' ' << format_double(e);
  o << "\ncell_resolution = " << c.poincare.cell_resolution << '\n';
  o << "box_cell_resolution = " << c.poincare.box_cell_resolution << '\n';
  o << "coupling_resolution = " << c.poincare.coupling_resolution << '\n';
  o << "\n[run]\n";
  o << "output = " << c.run.output << '\n';
  o << "seed = " << c.run.seed << '\n';
  o << "jobs = " << c.run.jobs << '\n';
  return o.str();
}

}  // namespace perfhom
