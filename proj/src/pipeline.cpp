#include "perfhom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "perfhom/corrector.hpp"
#include "perfhom/homogenize.hpp"
#include "perfhom/io.hpp"
#include "perfhom/poincare.hpp"

namespace perfhom {

namespace {

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

std::string range(double lo, double hi) { return "[" + num(lo) + "," + num(hi) + "]"; }

struct Context {
  const ExperimentConfig& cfg;
  std::filesystem::path out;
  int jobs;
  bool self_test;
  RunReport& report;

  void log(const std::string& line) { report.log += line + "\n"; }
  void verdict(std::string name, bool pass, std::string measured, std::string expected, std::string what) {
    report.verdicts.push_back({std::move(name), pass, std::move(measured), std::move(expected), std::move(what)});
  }
  void in_range(const std::string& name, double v, double lo, double hi, const std::string& what) {
    verdict(name, v >= lo && v <= hi, num(v), range(lo, hi), what);
  }
  void write(const std::string& file, const std::string& content) {
    const auto p = (out / file).string();
    write_file_atomic(p, content);
    report.artifacts.push_back(p);
  }
  void field(const std::string& file, const CartesianGrid& g, const std::vector<double>& v) {
    const auto p = (out / file).string();
    write_field(p, g, v);
    report.artifacts.push_back(p);
  }
};

double rel_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// --- geometry-check --------------------------------------------------------------

void geometry_check(Context& ctx) {
  const auto& g = ctx.cfg.geometry;
  if (!g.perforated) {
    ctx.log("geometry-check: no perforation, nothing to check");
    ctx.write("geometry_report.txt", "pattern none\n");
    return;
  }
  const auto field = ctx.cfg.field();
  const auto rep = verify_A2(field, g.window, g.a2_samples, ctx.cfg.run.seed);
  std::ostringstream o;
  o << "window " << g.window << "\n";
  if (rep.a1_violation) o << "a1_violation " << rep.a1_violation->i << ' ' << rep.a1_violation->j << "\n";
  ctx.verdict("a1_holes_inside_cells", !rep.a1_violation,
              rep.a1_violation ? "(" + std::to_string(rep.a1_violation->i) + "," +
                                     std::to_string(rep.a1_violation->j) + ")"
                               : "none",
              "none", "every hole compactly inside its cell");
  if (rep.a1_violation) {
    ctx.write("geometry_report.txt", o.str());
    return;
  }

  double sym = 0.0, ball_min = std::numeric_limits<double>::infinity();
  int empty_cells = 0;
  o << "# cell alpha inclusion symdiff inscribed_radius\n";
  const auto perturbed = field.perturbed_cells(g.window);
  for (const auto& c : rep.cells) {
    if (!field.is_perturbed(c.k)) continue;
    const double sd = symmetric_difference_area(field, c.k);
    const auto ball = inscribed_ball(field, c.k);
    sym += sd;
    if (ball)
      ball_min = std::min(ball_min, ball->radius);
    else
      ++empty_cells;
    o << "cell " << c.k.i << ' ' << c.k.j << ' ' << format_double(c.alpha) << ' '
      << (c.inclusion_ok ? "ok" : "violated") << ' ' << format_double(sd) << ' '
      << (ball ? format_double(ball->radius) : std::string("none")) << "\n";
  }
  // Every unperturbed cell carries the periodic hole itself.
  const double per_radius = inradius(*field.pattern());
  ball_min = std::min(ball_min, per_radius);
  const double d0 = delta0(field, g.window);
  o << "perturbed_cells " << perturbed.size() << "\n";
  o << "alpha_partial_sum " << format_double(rep.l1_partial_sum) << "\n";
  o << "alpha_tail_bound " << format_double(rep.tail_bound) << "\n";
  o << "symmetric_difference_sum " << format_double(sym) << "\n";
  o << "disjoint_cells " << empty_cells << "\n";
  o << "inscribed_radius_min " << format_double(ball_min) << "\n";
  o << "delta0 " << format_double(d0) << "\n";
  ctx.write("geometry_report.txt", o.str());

  ctx.verdict("a2_inclusion", rep.inclusion_ok, rep.inclusion_ok ? "ok" : "violated", "ok",
              "reduction/enlargement sandwich");
  ctx.verdict("a2_tail", rep.tail_bound < 1e-6, num(rep.tail_bound), "<1e-06",
              "tail of the alpha series beyond the window");
  ctx.verdict("symmetric_difference_finite", std::isfinite(sym), num(sym), "finite",
              "summed symmetric difference over the window");
  ctx.verdict("inscribed_ball", ball_min > 0, num(ball_min), ">0",
              "ball inside every overlapping hole pair");
  ctx.verdict("delta0", d0 > 0, num(d0), ">0", "uniform distance of holes to cell walls");
  ctx.log("geometry-check: " + std::to_string(perturbed.size()) + " perturbed cells, delta0 " + num(d0) +
          ", tail " + num(rep.tail_bound));
}

// --- corrector -------------------------------------------------------------------

void corrector(Context& ctx) {
  const auto& cc = ctx.cfg.corrector;
  require(ctx.cfg.geometry.perforated, ErrorKind::Config, "corrector: geometry.pattern is none");
  const auto field = ctx.cfg.field();
  const auto per = solve_periodic_corrector(*field.pattern(), cc.resolution);
  ctx.field("w_per.txt", per.cls->grid, per.w);
  std::ostringstream o;
  o << "resolution " << cc.resolution << "\n";
  o << "periodic_max " << format_double(per.max_value()) << "\n";
  o << "periodic_max_gradient " << format_double(per.max_gradient()) << "\n";
  o << "periodic_iterations " << per.stats.iterations << "\n";
  o << "periodic_residual " << format_double(per.max_residual) << "\n";
  ctx.verdict("periodic_cell_residual", per.stats.converged, num(per.stats.relative_residual), "converged",
              "cell problem solve");

  const auto win = make_window(field, cc.truncation, cc.resolution);
  const auto def = solve_defect_corrector(win, per);
  ctx.field("w.txt", win.cls->grid, def.w);
  ctx.field("w_tilde.txt", win.cls->grid, def.w_tilde);
  const double tsup = max_abs(def.w_tilde);
  const double tl2 = tilde_l2(def);
  o << "truncation " << cc.truncation << "\n";
  o << "tilde_sup " << format_double(tsup) << "\n";
  o << "tilde_l2 " << format_double(tl2) << "\n";

  if (field.perturbed_cells(cc.truncation).empty()) {
    ctx.verdict("tilde_vanishes_without_defect", tsup <= 1e-10, num(tsup), "<=1e-10",
                "defect corrector of a periodic field");
    ctx.write("corrector_report.txt", o.str());
    return;
  }

  const auto e = energy(win, per, def.w_tilde);
  const auto init = build_initializer(win, per);
  const auto ei = energy(win, per, init.phi);
  const auto trials = hat_trials(win, per, std::size_t(cc.trials), ctx.cfg.run.seed);
  const double wr = weak_residual(def, per, trials);
  const CompositeCorrector comp(per, &def);
  const auto sup = sup_norm_report(comp);
  o << "energy " << format_double(e.total()) << "\n";
  o << "energy_initializer " << format_double(ei.total()) << "\n";
  o << "initializer_grad_sq " << format_double(init.grad_sq) << "\n";
  o << "initializer_bound " << format_double(init.bound) << "\n";
  o << "weak_residual " << format_double(wr) << " trials " << trials.size() << "\n";
  o << "sup_w " << format_double(sup.w_max) << "\n";
  o << "sup_grad " << format_double(sup.grad_max) << "\n";
  for (int ring = 0; ring <= cc.truncation; ++ring)
    o << "ring_h1 " << ring << ' ' << format_double(ring_h1(def, per, ring)) << "\n";

  ctx.verdict("energy_ordering", e.total() <= ei.total(), num(e.total()), "<=" + num(ei.total()),
              "energy of the minimiser against the cut-off initializer");
  ctx.verdict("weak_residual", wr <= 1e-6 && !trials.empty(), num(wr), "<=1e-06",
              "weak form tested on hat functions");
  ctx.verdict("initializer_bound", init.grad_sq <= init.bound, num(init.grad_sq), "<=" + num(init.bound),
              "cut-off gradient estimate");

  if (cc.growth_truncation > cc.truncation) {
    const auto win2 = make_window(field, cc.growth_truncation, cc.resolution);
    const auto def2 = solve_defect_corrector(win2, per);
    const double tl2b = tilde_l2(def2);
    const auto sup2 = sup_norm_report(CompositeCorrector(per, &def2));
    o << "growth_truncation " << cc.growth_truncation << "\n";
    o << "growth_tilde_l2 " << format_double(tl2b) << "\n";
    o << "growth_sup_w " << format_double(sup2.w_max) << "\n";
    o << "growth_sup_grad " << format_double(sup2.grad_max) << "\n";
    ctx.verdict("window_growth_l2", rel_change(tl2, tl2b) < 0.01, num(rel_change(tl2, tl2b)), "<0.01",
                "relative change of the defect corrector L2 norm as the window grows");
    const double sc = std::max(rel_change(sup.w_max, sup2.w_max), rel_change(sup.grad_max, sup2.grad_max));
    ctx.verdict("sup_norm_stability", sc <= 0.02, num(sc), "<=0.02",
                "sup of w and grad w under window growth");
  }
  ctx.write("corrector_report.txt", o.str());
  ctx.log("corrector: tilde_l2 " + num(tl2) + ", energy " + num(e.total()) + " vs " + num(ei.total()));
}

// --- study -----------------------------------------------------------------------

void study_verdicts(Context& ctx, const ConvergenceReport& rep, bool bump, bool defect) {
  auto slope = [&](const std::string& c) -> std::optional<double> {
    const auto it = rep.slopes.find(c);
    if (it == rep.slopes.end()) return std::nullopt;
    return it->second.slope;
  };
  auto check = [&](const std::string& name, const std::string& col, double lo, double hi, const std::string& what) {
    if (const auto s = slope(col))
      ctx.in_range(name, *s, lo, hi, what);
    else
      ctx.verdict(name, false, "missing", range(lo, hi), what + " (no data)");
  };
  const auto choice = ctx.cfg.macro.choice;
  const bool full = choice != CorrectorChoice::PeriodicOnly;
  const bool per = choice != CorrectorChoice::Full;
  if (!bump) {
    if (full) check("h1_rate_nonvanishing_source", "h1_err", 1.2, 1.8, "H1 rate when f does not vanish on the boundary");
    return;
  }
  if (full) {
    check("h1_rate", "h1_err", 1.7, 2.3, "two-scale H1 error rate");
    check("l2_rate", "l2_err", 2.6, 3.4, "two-scale L2 error rate");
    check("linf_rate", "linf_err", 2.6, 3.4, "two-scale Linf error rate");
  }
  if (defect && per) {
    check("defect_cell_linf_rate_periodic", "linf_defect_cell", 1.7, 2.3,
          "periodic-corrector Linf error on the scaled defect cell");
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rep.rows)
      if (r.h <= r.eps / 64 * (1 + 1e-12)) pts.push_back({r.eps, r.linf_defect_cell});
    ctx.verdict("defect_cell_eps2_floor", above_eps2_floor(pts, 0.2), pts.empty() ? "missing" : "checked",
                ">=0.2*c*eps^2", "periodic-corrector defect-cell error stays of order eps^2");
    if (full) {
      const auto a = slope("h1_err_per"), b = slope("h1_err");
      const double gap = (a && b) ? std::abs(*a - *b) : std::numeric_limits<double>::infinity();
      ctx.verdict("h1_rate_periodic_gap", gap <= 0.2, num(gap), "<=0.2",
                  "global H1 rate with the periodic corrector against the full one");
      check("tilde_h1_rate", "tilde_h1", 1.7, 2.3, "H1 norm of the scaled defect correction");
    }
  }
}

void study(Context& ctx) {
  if (ctx.self_test) {
    std::vector<StudyRow> rows;
    for (double e : {0.125, 0.0625, 0.03125, 0.015625}) {
      StudyRow r;
      r.eps = e;
      r.h = e / 128;
      r.l2_err = r.l2_err_per = 0.5 * e * e * e;
      r.h1_err = r.h1_err_per = r.linf_err = r.linf_err_per = r.linf_defect_cell = r.tilde_h1 = 3 * e * e;
      r.g_eps_l2 = 1.0;
      rows.push_back(r);
    }
    const auto rep = fit_report(rows);
    ctx.write("study.csv", to_csv(rep));
    const double s = rep.slopes.at("h1_err").slope;
    ctx.verdict("self_test_slope", std::abs(s - 2.0) <= 1e-12, num(s), "2", "fit of synthetic eps^2 data");
    const double s3 = rep.slopes.at("l2_err").slope;
    ctx.verdict("self_test_slope_cubic", std::abs(s3 - 3.0) <= 1e-12, num(s3), "3", "fit of synthetic eps^3 data");
    return;
  }
  auto spec = ctx.cfg.study_spec();
  spec.jobs = ctx.jobs;
  const auto rep = convergence_study(spec);
  ctx.write("study.csv", to_csv(rep));
  const bool defect = !spec.field.perturbed_cells(spec.truncation).empty();
  study_verdicts(ctx, rep, spec.problem.source.kind == Source::Kind::Bump, defect);
  std::ostringstream o;
  o << "study: " << rep.rows.size() << " rows";
  for (const auto& r : rep.rows) o << "; eps " << num(r.eps) << " g_eps " << num(r.g_eps_l2) << " |u| " << num(r.u_l2);
  ctx.log(o.str());
}

// --- poincare --------------------------------------------------------------------

void poincare(Context& ctx) {
  const auto& pc = ctx.cfg.poincare;
  const auto field = ctx.cfg.field();
  if (field.pattern()) {
    const HoleShape u = *field.pattern();
    const auto box = inscribed_square(u.center, inradius(u));
    const auto bc = check_box_constant([u](Point p) { return signed_distance(u, p); }, box, pc.box_cell_resolution);
    ctx.verdict("box_constant", bc.pass(), num(bc.constant), "<=" + num(bc.bound * 1.02),
                "Poincare constant of the cell minus the hole against d/|R|");
    ctx.write("box_check.txt", "constant " + format_double(bc.constant) + "\nbound " + format_double(bc.bound) +
                                   "\nbox " + format_double(box.lo.x) + " " + format_double(box.lo.y) + " " +
                                   format_double(box.hi.x) + " " + format_double(box.hi.y) + "\n");
  }

  const MacroProblem omega = ctx.cfg.macro_problem(pc.eps.front());
  auto scaling = [&](const PerforationField& f, const std::string& file, const std::string& name) {
    const auto s = eps_scaling_study(f, omega, pc.eps, pc.cell_resolution, ctx.jobs);
    ctx.write(file, to_csv(s));
    if (!s.applicable) {
      ctx.log("poincare: no perforation, eps scaling lemma inapplicable (ratio " + num(s.ratio) + ")");
      return;
    }
    ctx.verdict(name, s.pass(), num(s.ratio), "<=2", "spread of constant/eps^2 across eps");
  };
  scaling(field, "poincare.csv", "eps_scaling_ratio");
  if (field.pattern() && !field.perturbed_cells(ctx.cfg.corrector.truncation).empty())
    scaling(PerforationField::periodic(*field.pattern()), "poincare_periodic.csv", "eps_scaling_ratio_periodic");

  if (!field.pattern() || ctx.cfg.macro.source.kind != Source::Kind::Bump) return;
  const int n = pc.coupling_resolution;
  const auto per = solve_periodic_corrector(*field.pattern(), n);
  std::optional<DefectCorrector> def;
  if (!field.perturbed_cells(ctx.cfg.corrector.truncation).empty())
    def = solve_defect_corrector(make_window(field, ctx.cfg.corrector.truncation, n), per);
  const CompositeCorrector w(per, def ? &*def : nullptr);
  std::ostringstream csv;
  csv << "epsilon,phi_l2,phi_h1,poincare_constant,bound\n";
  bool all = true;
  double worst = 0.0;
  for (double e : pc.eps) {
    const auto d = build_domain(ctx.cfg.macro_problem(e), field, n);
    const auto c = coupling_check(d, w);
    const double bound = std::sqrt(c.poincare_constant) * c.phi_h1;
    csv << format_double(e) << ',' << format_double(c.phi_l2) << ',' << format_double(c.phi_h1) << ','
        << format_double(c.poincare_constant) << ',' << format_double(bound) << '\n';
    all = all && c.pass();
    worst = std::max(worst, c.phi_l2 / bound);
  }
  ctx.write("coupling.csv", csv.str());
  ctx.verdict("poincare_coupling", all, num(worst), "<=1.000001",
              "error L2 norm against sqrt(constant) times its H1 seminorm");
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "geometry-check") return Command::GeometryCheck;
  if (name == "corrector") return Command::Corrector;
  if (name == "study") return Command::Study;
  if (name == "poincare") return Command::Poincare;
  if (name == "all") return Command::All;
  return std::nullopt;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::GeometryCheck: return "geometry-check";
    case Command::Corrector: return "corrector";
    case Command::Study: return "study";
    case Command::Poincare: return "poincare";
    case Command::All: return "all";
  }
  return "?";
}

bool RunReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string RunReport::summary() const {
  std::string s;
  for (const auto& v : verdicts)
    s += std::string(v.pass ? "PASS " : "FAIL ") + v.name + " " + v.measured + " " + v.expected + "\n";
  return s;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::Breakdown:
    case ErrorKind::Singular:
      return 3;
    default:
      return 2;
  }
}

RunReport run(Command command, const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  RunReport report;
  Context ctx{config, options.out_dir.empty() ? config.run.output : options.out_dir,
              options.jobs > 0 ? options.jobs : config.run.jobs, options.self_test, report};
  switch (command) {
    case Command::GeometryCheck: geometry_check(ctx); break;
    case Command::Corrector: corrector(ctx); break;
    case Command::Study: study(ctx); break;
    case Command::Poincare: poincare(ctx); break;
    case Command::All:
      geometry_check(ctx);
      corrector(ctx);
      study(ctx);
      poincare(ctx);
      ctx.write("summary.txt", report.summary());
      break;
  }
  for (const auto& v : report.verdicts)
    if (!v.pass) ctx.log("FAIL " + v.name + ": " + v.what + ", measured " + v.measured + ", expected " + v.expected);
  return report;
}

}  // namespace perfhom
