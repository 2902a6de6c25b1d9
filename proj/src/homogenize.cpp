#include "perfhom/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "perfhom/error.hpp"
#include "perfhom/io.hpp"

namespace perfhom {

namespace {

constexpr int kFitGuard = 64;  // slopes only from h <= eps/64

bool near_integer(double v, long& out) {
  out = std::lround(v);
  return std::abs(v - double(out)) <= 1e-9 * std::max(1.0, std::abs(v));
}

std::vector<double> tilde_field(const MacroDomain& d, const CompositeCorrector& w) {
  const auto& g = d.cls->grid;
  const double e2 = d.problem.eps * d.problem.eps;
  std::vector<double> out(g.size(), 0.0);
  if (!w.defect()) return out;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (d.cls->kind[idx] == NodeKind::Solid) continue;
      out[idx] = e2 * d.problem.source.f(g.node(i, j)) * w.tilde_at_node(d.offset_i + i, d.offset_j + j);
    }
  return out;
}

}  // namespace

double Source::f(Point x) const {
  if (kind == Kind::Constant) return value;
  const double r2 = dot(x - center, x - center);
  const double q = 1.0 - r2 / (radius * radius);
  if (q <= 0.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / q);
}

Point Source::grad(Point x) const {
  if (kind == Kind::Constant) return {0, 0};
  const Point d = x - center;
  const double rho2 = radius * radius;
  const double q = 1.0 - dot(d, d) / rho2;
  if (q <= 0.0) return {0, 0};
  return (f(x) * -2.0 / (rho2 * q * q)) * d;
}

double Source::laplacian(Point x) const {
  if (kind == Kind::Constant) return 0.0;
  const Point d = x - center;
  const double r2 = dot(d, d), rho2 = radius * radius, rho4 = rho2 * rho2;
  const double q = 1.0 - r2 / rho2;
  if (q <= 0.0) return 0.0;
  const double q2 = q * q;
  return f(x) * (4 * r2 / (rho4 * q2 * q2) - 4 / (rho2 * q2) - 8 * r2 / (rho4 * q2 * q));
}

double MacroProblem::source_norm() const {
  constexpr int m = 512;
  const double hx = (hi.x - lo.x) / m, hy = (hi.y - lo.y) / m;
  double sup = 0.0, g2 = 0.0, l2 = 0.0;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const Point x{lo.x + (i + 0.5) * hx, lo.y + (j + 0.5) * hy};
      sup = std::max(sup, std::abs(source.f(x)));
      const Point g = source.grad(x);
      g2 += dot(g, g) * hx * hy;
      l2 += std::pow(source.laplacian(x), 2) * hx * hy;
    }
  return sup + std::sqrt(g2) + std::sqrt(l2);
}

MacroDomain build_domain(const MacroProblem& p, const PerforationField& field, int n) {
  require(p.eps > 0 && p.eps < 1, ErrorKind::Argument, "eps must lie in (0,1)");
  require(n >= 16, ErrorKind::Argument,
          "resolution guard: h = eps/" + std::to_string(n) + " is coarser than eps/16");
  long cx = 0, cy = 0, ax = 0, ay = 0;
  require(near_integer((p.hi.x - p.lo.x) / p.eps, cx) && near_integer((p.hi.y - p.lo.y) / p.eps, cy) &&
              cx > 0 && cy > 0,
          ErrorKind::Argument, "domain extents must be integer multiples of eps");
  require(near_integer((p.anchor.x - p.lo.x) / p.eps, ax) && near_integer((p.anchor.y - p.lo.y) / p.eps, ay),
          ErrorKind::Argument, "anchor must sit on the eps-lattice of the domain");
  if (p.source.kind == Source::Kind::Bump) {
    const Point c = p.source.center;
    const double r = p.source.radius;
    require(r > 0 && c.x - r > p.lo.x && c.x + r < p.hi.x && c.y - r > p.lo.y && c.y + r < p.hi.y,
            ErrorKind::Argument, "bump support must lie strictly inside the domain");
  }
  MacroDomain d;
  d.problem = p;
  d.field = field;
  d.n = n;
  d.offset_i = -ax * n;
  d.offset_j = -ay * n;
  CartesianGrid g{p.lo, p.eps / n, int(cx * n + 1), int(cy * n + 1), OuterBC::Dirichlet};
  const double eps = p.eps;
  const Point anchor = p.anchor;
  d.cls = classify_nodes(g, [field, eps, anchor](Point x) {
    return eps * field.signed_distance({(x.x - anchor.x) / eps, (x.y - anchor.y) / eps});
  });
  return d;
}

std::vector<double> solve_eps_problem(const MacroDomain& d, SolveStats* stats, double tol) {
  const auto& g = d.cls->grid;
  const auto sys = assemble_laplacian(*d.cls);
  std::vector<double> b(sys.node_of.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = d.problem.source.f(g.node(sys.node_of[k])) + sys.rhs[k];
  SolveOptions opt;
  opt.tol = tol;
  const auto x = solve(sys.a, b, opt, stats);
  std::vector<double> u(g.size(), 0.0);
  sys.scatter(x, u);
  return u;
}

std::vector<double> two_scale_approx(const MacroDomain& d, const CompositeCorrector& w) {
  const auto& g = d.cls->grid;
  const double e2 = d.problem.eps * d.problem.eps;
  const bool aligned = w.periodic().n == d.n;
  std::vector<double> out(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (d.cls->kind[idx] == NodeKind::Solid) continue;
      const Point x = g.node(i, j);
      const double f = d.problem.source.f(x);
      if (f == 0.0) continue;
      const double wy = aligned ? w.at_node(d.offset_i + i, d.offset_j + j) : w.sample(d.micro(x));
      out[idx] = e2 * wy * f;
    }
  return out;
}

Norms error_report(const MacroDomain& d, const std::vector<double>& u,
                   const std::vector<double>& approx) {
  require(u.size() == approx.size() && u.size() == d.cls->grid.size(), ErrorKind::Argument,
          "error_report: fields live on different grids");
  std::vector<double> e(u.size());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = u[k] - approx[k];
  return norms(*d.cls, e);
}

double residual_diagnostic(const MacroDomain& d, const CompositeCorrector& w) {
  const auto& cls = *d.cls;
  const auto& g = cls.grid;
  const double eps = d.problem.eps;
  const bool aligned = w.periodic().n == d.n;
  const double dy = 1.0 / d.n;  // node spacing in micro units
  auto wv = [&](int i, int j) {
    return aligned ? w.at_node(d.offset_i + i, d.offset_j + j) : w.sample(d.micro(g.node(i, j)));
  };
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (cls.kind[idx] == NodeKind::Solid) continue;
      const Point x = g.node(i, j);
      const Point gf = d.problem.source.grad(x);
      const double lf = d.problem.source.laplacian(x);
      if (gf.x == 0.0 && gf.y == 0.0 && lf == 0.0) continue;
      const double w0 = wv(i, j);
      std::array<double, 2> grad{};
      for (int axis = 0; axis < 2; ++axis) {
        const auto plus = cls.neighbor(i, j, 2 * axis), minus = cls.neighbor(i, j, 2 * axis + 1);
        const bool p_ok = plus && cls.kind[*plus] != NodeKind::Solid;
        const bool m_ok = minus && cls.kind[*minus] != NodeKind::Solid;
        const int di = kDi[2 * axis], dj = kDj[2 * axis];
        if (p_ok && m_ok)
          grad[axis] = (wv(i + di, j + dj) - wv(i - di, j - dj)) / (2 * dy);
        else if (p_ok)
          grad[axis] = (wv(i + di, j + dj) - w0) / dy;
        else if (m_ok)
          grad[axis] = (w0 - wv(i - di, j - dj)) / dy;
      }
      const double gv = 2 * (grad[0] * gf.x + grad[1] * gf.y) + eps * w0 * lf;
      s += quadrature_weight(cls, i, j) * gv * gv;
    }
  return std::sqrt(s);
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  require(pairs.size() >= 2, ErrorKind::Argument, "fit_rate needs at least two points");
  double mx = 0, my = 0;
  for (const auto& [e, v] : pairs) {
    require(e > 0 && v > 0, ErrorKind::Argument, "fit_rate needs positive eps and errors");
    mx += std::log(e);
    my += std::log(v);
  }
  mx /= pairs.size();
  my /= pairs.size();
  double sxx = 0, sxy = 0;
  for (const auto& [e, v] : pairs) {
    sxx += std::pow(std::log(e) - mx, 2);
    sxy += (std::log(e) - mx) * (std::log(v) - my);
  }
  require(sxx > 0, ErrorKind::Argument, "fit_rate needs distinct eps values");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& [e, v] : pairs)
    fit.max_residual = std::max(fit.max_residual, std::abs(std::log(v) - fit.intercept - fit.slope * std::log(e)));
  return fit;
}

double column(const StudyRow& r, const std::string& name) {
  if (name == "l2_err") return r.l2_err;
  if (name == "h1_err") return r.h1_err;
  if (name == "linf_err") return r.linf_err;
  if (name == "l2_err_per") return r.l2_err_per;
  if (name == "h1_err_per") return r.h1_err_per;
  if (name == "linf_err_per") return r.linf_err_per;
  if (name == "linf_defect_cell") return r.linf_defect_cell;
  if (name == "tilde_h1") return r.tilde_h1;
  if (name == "g_eps_l2") return r.g_eps_l2;
  if (name == "u_l2") return r.u_l2;
  fail(ErrorKind::Argument, "unknown study column " + name);
}

ConvergenceReport fit_report(std::vector<StudyRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) { return a.eps > b.eps; });
  ConvergenceReport rep;
  rep.rows = std::move(rows);
  std::vector<const StudyRow*> usable;
  for (const auto& r : rep.rows)
    if (r.h <= r.eps / kFitGuard * (1 + 1e-12)) usable.push_back(&r);
  rep.rows_in_fit = usable.size();
  require(usable.size() >= 2, ErrorKind::Argument,
          "convergence fit: fewer than two rows meet the h <= eps/64 guard");
  for (const auto& name : study_columns()) {
    if (name == "g_eps_l2") continue;  // boundedness, not a rate
    std::vector<std::pair<double, double>> pts;
    for (const auto* r : usable)
      if (column(*r, name) > 0) pts.push_back({r->eps, column(*r, name)});
    if (pts.size() >= 2) rep.slopes[name] = fit_rate(pts);
  }
  return rep;
}

bool above_eps2_floor(const std::vector<std::pair<double, double>>& pairs, double fraction) {
  double mean = 0.0;
  for (const auto& [e, v] : pairs) {
    if (v <= 0) return false;
    mean += std::log(v) - 2 * std::log(e);
  }
  const double c = std::exp(mean / pairs.size());
  return std::all_of(pairs.begin(), pairs.end(),
                     [&](const auto& p) { return p.second >= fraction * c * p.first * p.first; });
}

namespace {

StudyRow run_one(const StudySpec& spec, double eps, int n, const PeriodicCorrector& per,
                 const DefectCorrector* defect) {
  MacroProblem problem = spec.problem;
  problem.eps = eps;
  const MacroDomain d = build_domain(problem, spec.field, n);
  const CompositeCorrector full(per, defect);
  const CompositeCorrector periodic_only(per, nullptr);

  StudyRow row;
  row.eps = eps;
  row.h = d.h();
  const auto u = solve_eps_problem(d);
  row.u_l2 = norms(*d.cls, u).l2;

  if (spec.choice != CorrectorChoice::PeriodicOnly) {
    const auto nm = error_report(d, u, two_scale_approx(d, full));
    row.l2_err = nm.l2;
    row.h1_err = nm.h1;
    row.linf_err = nm.linf;
  }
  const auto approx_per = two_scale_approx(d, periodic_only);
  if (spec.choice != CorrectorChoice::Full) {
    const auto nm = error_report(d, u, approx_per);
    row.l2_err_per = nm.l2;
    row.h1_err_per = nm.h1;
    row.linf_err_per = nm.linf;
  }
  // Periodic-only error on the scaled defect cell.
  {
    const auto& g = d.cls->grid;
    const long I0 = long(spec.defect_cell.i) * n, J0 = long(spec.defect_cell.j) * n;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const long I = d.offset_i + i, J = d.offset_j + j;
        if (I < I0 || I > I0 + n || J < J0 || J > J0 + n) continue;
        const std::size_t idx = g.index(i, j);
        if (d.cls->kind[idx] == NodeKind::Solid) continue;
        row.linf_defect_cell = std::max(row.linf_defect_cell, std::abs(u[idx] - approx_per[idx]));
      }
  }
  const double e2 = eps * eps;
  const auto& src = d.problem.source;
  row.tilde_h1 = norms(*d.cls, tilde_field(d, full), [&](Point x) {
                   return -e2 * src.f(x) * (defect ? per.sample(d.micro(x)) : 0.0);
                 }).h1;
  row.g_eps_l2 = residual_diagnostic(d, spec.choice == CorrectorChoice::PeriodicOnly ? periodic_only : full);
  return row;
}

}  // namespace

ConvergenceReport convergence_study(const StudySpec& spec) {
  require(spec.eps.size() >= 3, ErrorKind::Argument, "convergence study needs at least three eps values");
  require(spec.n.size() == spec.eps.size(), ErrorKind::Argument,
          "convergence study needs one cell resolution per eps");
  require(spec.field.pattern().has_value(), ErrorKind::Argument,
          "convergence study needs a periodic pattern");
  // One cell solve and one window solve per distinct resolution.
  const bool defective = !spec.field.perturbed_cells(spec.truncation).empty();
  std::map<int, std::shared_ptr<PeriodicCorrector>> correctors;
  std::map<int, std::shared_ptr<DefectCorrector>> defects;
  for (int n : spec.n) {
    if (correctors.count(n)) continue;
    correctors[n] = std::make_shared<PeriodicCorrector>(solve_periodic_corrector(*spec.field.pattern(), n));
    if (defective)
      defects[n] = std::make_shared<DefectCorrector>(
          solve_defect_corrector(make_window(spec.field, spec.truncation, n), *correctors[n]));
  }

  std::vector<StudyRow> rows(spec.eps.size());
  const std::size_t jobs = std::max(1, spec.jobs);
  for (std::size_t start = 0; start < rows.size(); start += jobs) {
    std::vector<std::future<StudyRow>> batch;
    for (std::size_t k = start; k < std::min(rows.size(), start + jobs); ++k)
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, [&, k] {
        const auto it = defects.find(spec.n[k]);
        return run_one(spec, spec.eps[k], spec.n[k], *correctors.at(spec.n[k]),
                       it == defects.end() ? nullptr : it->second.get());
      }));
    for (std::size_t k = 0; k < batch.size(); ++k) rows[start + k] = batch[k].get();
  }
  return fit_report(std::move(rows));
}

std::string to_csv(const ConvergenceReport& rep) {
  std::ostringstream out;
  out << "epsilon,h";
  for (const auto& c : study_columns()) out << ',' << c;
  out << '\n';
  for (const auto& r : rep.rows) {
    out << format_double(r.eps) << ',' << format_double(r.h);
    for (const auto& c : study_columns()) out << ',' << format_double(column(r, c));
    out << '\n';
  }
  out << "# slopes from " << rep.rows_in_fit << " rows with h <= eps/64\n";
  for (const auto& [name, fit] : rep.slopes)
    out << "# slope " << name << ' ' << format_double(fit.slope) << " intercept "
        << format_double(fit.intercept) << " max_residual " << format_double(fit.max_residual) << '\n';
  return out.str();
}

}  // namespace perfhom
