#include "perfhom/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "perfhom/error.hpp"

namespace perfhom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGammaSamples = 720;

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long mod(long a, long b) { return a - b * floor_div(a, b); }

Point frac(Point y) { return {y.x - std::floor(y.x), y.y - std::floor(y.y)}; }

// Bilinear interpolation of a nodal field on a non-periodic grid.
double bilinear(const CartesianGrid& g, const std::vector<double>& v, Point p) {
  const double u = (p.x - g.origin.x) / g.h, s = (p.y - g.origin.y) / g.h;
  const int i = std::clamp(int(std::floor(u)), 0, g.nx - 2);
  const int j = std::clamp(int(std::floor(s)), 0, g.ny - 2);
  const double tx = std::clamp(u - i, 0.0, 1.0), ty = std::clamp(s - j, 0.0, 1.0);
  return (1 - tx) * (1 - ty) * v[g.index(i, j)] + tx * (1 - ty) * v[g.index(i + 1, j)] +
         (1 - tx) * ty * v[g.index(i, j + 1)] + tx * ty * v[g.index(i + 1, j + 1)];
}

double max_edge_gradient(const Classification& cls, const std::vector<double>& v) {
  double g = 0.0;
  visit_energy(cls, {[&](std::size_t a, std::size_t b, double) {
                       g = std::max(g, std::abs(v[a] - v[b]));
                     },
                     {}});
  return g / cls.grid.h;
}

struct GammaSample {
  Point p;
  double dn = 0.0;  // normal derivative of w_per, normal pointing into the periodic hole
  double ds = 0.0;
};

// Quadrature of the part of the periodic hole boundaries left outside the
// actual holes, for every perturbed cell of the window.
std::vector<GammaSample> gamma1_samples(const WindowDomain& win, const PeriodicCorrector& per) {
  std::vector<GammaSample> out;
  const double h = 1.0 / win.n;
  for (const CellIndex k : win.field.perturbed_cells(win.radius)) {
    if (inf_norm(k) > win.radius) continue;
    const auto per_k = win.field.periodic_hole_at(k);
    const auto hole_k = win.field.hole_at(k);
    if (!per_k) continue;
    for (int m = 0; m < kGammaSamples; ++m) {
      const double t = 2 * kPi * m / kGammaSamples;
      const Point p = boundary_point(*per_k, t);
      if (hole_k && classify_interface(win.field, k, p) != InterfaceTag::Gamma1) continue;
      const Point nu = outward_normal(*per_k, t);
      const double w1 = per.sample(p + h * nu), w2 = per.sample(p + 2 * h * nu);
      out.push_back({p, -(4 * w1 - w2) / (2 * h), boundary_speed(*per_k, t) * 2 * kPi / kGammaSamples});
    }
  }
  return out;
}

bool inside_periodic_hole(const WindowDomain& win, Point p) {
  return win.field.periodic_signed_distance(p) < 0.0;
}

}  // namespace

// --- periodic ---------------------------------------------------------------

double PeriodicCorrector::at_node(long I, long J) const {
  return w[std::size_t(mod(J, n)) * (n + 1) + std::size_t(mod(I, n))];
}

double PeriodicCorrector::sample(Point y) const {
  const Point f = frac(y);
  // Exact zero on the hole boundary itself: bilinear weights would leak
  // neighbouring fluid values into the trace.
  if (signed_distance(pattern, f) < 1e-9) return 0.0;
  return bilinear(cls->grid, w, f);
}

double PeriodicCorrector::max_value() const { return *std::max_element(w.begin(), w.end()); }

double PeriodicCorrector::max_gradient() const { return max_edge_gradient(*cls, w); }

PeriodicCorrector solve_periodic_corrector(const HoleShape& pattern, int n) {
  require(n >= 64, ErrorKind::Argument, "periodic corrector needs n >= 64");
  validate_shape(pattern);
  {
    const Point e = half_extents(pattern);
    const Point c = pattern.center;
    require(std::min({c.x - e.x, 1 - c.x - e.x, c.y - e.y, 1 - c.y - e.y}) > 0,
            ErrorKind::Geometry, "periodic hole must sit strictly inside the unit cell");
  }
  PeriodicCorrector out;
  out.pattern = pattern;
  out.n = n;
  out.cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Periodic),
                           [pattern](Point p) { return signed_distance(pattern, frac(p)); });
  const auto sys = assemble_laplacian(*out.cls);
  std::vector<double> b(sys.node_of.size(), 1.0);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += sys.rhs[k];
  SolveOptions opt;
  opt.tol = 1e-10;
  const auto x = solve(sys.a, b, opt, &out.stats);
  std::vector<double> r;
  sys.a.multiply(x, r);
  for (std::size_t k = 0; k < r.size(); ++k) out.max_residual = std::max(out.max_residual, std::abs(r[k] - b[k]));
  out.w.assign(out.cls->grid.size(), 0.0);
  sys.scatter(x, out.w);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) out.w[std::size_t(j) * (n + 1) + i] = out.w[out.cls->canonical_index(i, j)];
  return out;
}

// --- window -----------------------------------------------------------------

WindowDomain make_window(const PerforationField& field, int radius, int n) {
  require(radius >= 1, ErrorKind::Argument, "window radius must be >= 1");
  require(n >= 4, ErrorKind::Argument, "window needs at least 4 nodes per cell");
  const auto report = verify_A2(field, radius);
  if (report.a1_violation)
    fail(ErrorKind::Geometry, "hole of cell (" + std::to_string(report.a1_violation->i) + "," +
                                  std::to_string(report.a1_violation->j) +
                                  ") touches its cell boundary");
  WindowDomain win{field, radius, n, nullptr};
  win.cls = classify_nodes(
      CartesianGrid::square({-double(radius), -double(radius)}, 1.0 / n, (2 * radius + 1) * n,
                            OuterBC::Dirichlet),
      [field](Point p) { return field.signed_distance(p); });
  return win;
}

std::vector<double> periodic_on_window(const WindowDomain& win, const PeriodicCorrector& per) {
  const auto& g = win.cls->grid;
  std::vector<double> out(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out[g.index(i, j)] = per.at_node(win.lo() + i, win.lo() + j);
  return out;
}

DefectCorrector solve_defect_corrector(const WindowDomain& win, const PeriodicCorrector& per,
                                       WarmStart start, double tol) {
  require(per.n == win.n, ErrorKind::Argument,
          "defect corrector: window and periodic resolutions differ");
  require(win.field.pattern() && *win.field.pattern() == per.pattern, ErrorKind::Argument,
          "defect corrector: periodic pattern mismatch");
  const auto wper = periodic_on_window(win, per);
  const auto sys = assemble_laplacian(*win.cls, {{}, [&](std::size_t node) { return wper[node]; }});
  std::vector<double> b(sys.node_of.size(), 1.0);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += sys.rhs[k];
  SolveOptions opt;
  opt.tol = tol;
  std::vector<double> x0;
  if (start == WarmStart::Periodic) {
    x0 = sys.gather(wper);
    opt.x0 = &x0;
  }
  DefectCorrector out{win, {}, {}, {}};
  const auto x = solve(sys.a, b, opt, &out.stats);
  out.w.assign(win.cls->grid.size(), 0.0);
  for (std::size_t node = 0; node < out.w.size(); ++node)
    if (win.cls->kind[node] == NodeKind::Boundary) out.w[node] = wper[node];
  sys.scatter(x, out.w);
  out.w_tilde.resize(out.w.size());
  for (std::size_t node = 0; node < out.w.size(); ++node) out.w_tilde[node] = out.w[node] - wper[node];
  return out;
}

// --- composite ----------------------------------------------------------------

double CompositeCorrector::sample(Point y) const {
  if (!defect_) return per_->sample(y);
  const auto& win = defect_->window;
  if (win.field.in_hole(y)) return 0.0;
  const double lo = -win.radius, hi = win.radius + 1;
  if (y.x >= lo && y.x <= hi && y.y >= lo && y.y <= hi)
    return bilinear(win.cls->grid, defect_->w, y);
  return per_->sample(y);
}

double CompositeCorrector::at_node(long I, long J) const {
  if (defect_ && defect_->window.contains_node(I, J)) return defect_->w[defect_->window.index(I, J)];
  return per_->at_node(I, J);
}

double CompositeCorrector::tilde_at_node(long I, long J) const {
  if (defect_ && defect_->window.contains_node(I, J))
    return defect_->w_tilde[defect_->window.index(I, J)];
  return 0.0;
}

double CompositeCorrector::seam_discrepancy(int samples_per_side) const {
  if (!defect_) return 0.0;
  const auto& win = defect_->window;
  const double lo = -win.radius, hi = win.radius + 1, d = 1e-7;
  double worst = 0.0;
  for (int s = 0; s < samples_per_side; ++s) {
    const double t = lo + (hi - lo) * (s + 0.5) / samples_per_side;
    const std::array<std::pair<Point, Point>, 4> pairs{{
        {{lo + d, t}, {lo - d, t}},
        {{hi - d, t}, {hi + d, t}},
        {{t, lo + d}, {t, lo - d}},
        {{t, hi - d}, {t, hi + d}},
    }};
    for (const auto& [in, out] : pairs) {
      if (win.field.in_hole(in) || win.field.in_hole(out)) continue;
      worst = std::max(worst, std::abs(bilinear(win.cls->grid, defect_->w, in) - per_->sample(out)));
    }
  }
  return worst;
}

// --- energy and weak form ----------------------------------------------------

EnergyTerms energy(const WindowDomain& win, const PeriodicCorrector& per,
                   const std::vector<double>& psi) {
  const auto& cls = *win.cls;
  require(psi.size() == cls.grid.size(), ErrorKind::Argument, "energy: field size mismatch");
  const auto trace = [&](Point p) { return -per.sample(p); };
  EnergyTerms e;
  e.volume = 0.5 * energy_form(cls, psi, psi, trace, trace);
  for (const auto& s : gamma1_samples(win, per))
    e.boundary += s.dn * bilinear(cls.grid, psi, s.p) * s.ds;
  const auto& g = cls.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (cls.kind[idx] == NodeKind::Solid || !inside_periodic_hole(win, g.node(i, j))) continue;
      e.source += quadrature_weight(cls, i, j) * psi[idx];
    }
  return e;
}

std::vector<Trial> hat_trials(const WindowDomain& win, const PeriodicCorrector& per,
                              std::size_t count, std::uint64_t seed) {
  const auto& cls = *win.cls;
  const auto& g = cls.grid;
  const auto& pcls = *per.cls;
  const double h = g.h;
  std::vector<std::size_t> eligible;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      if (!cls.regular(i, j)) continue;
      const Point p = g.node(i, j);
      if (std::abs(win.field.signed_distance(p)) <= 2 * h) continue;
      if (std::abs(win.field.periodic_signed_distance(p)) <= 2 * h) continue;
      const int pi = int(mod(win.lo() + i, per.n)), pj = int(mod(win.lo() + j, per.n));
      const bool deep = pcls.kind[pcls.grid.index(pi, pj)] == NodeKind::Solid;
      if (!deep && !pcls.regular(pi, pj)) continue;
      eligible.push_back(g.index(i, j));
    }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  if (eligible.size() > count) eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());
  std::vector<Trial> out;
  for (std::size_t node : eligible) out.push_back({{{node, 1.0}}});
  return out;
}

double weak_residual(const DefectCorrector& defect, const PeriodicCorrector& per,
                     const std::vector<Trial>& trials) {
  const auto& win = defect.window;
  const auto& cls = *win.cls;
  const auto& g = cls.grid;
  const auto& wt = defect.w_tilde;
  std::vector<GammaSample> gamma;
  bool gamma_ready = false;
  double worst = 0.0;
  for (const Trial& trial : trials) {
    std::unordered_map<std::size_t, double> v;
    for (const auto& [node, value] : trial.entries) {
      require(node < g.size(), ErrorKind::Argument, "weak_residual: trial node out of range");
      if (value == 0.0) continue;
      const NodeKind k = cls.kind[node];
      require(k != NodeKind::Solid && k != NodeKind::Boundary, ErrorKind::Argument,
              "weak_residual: trial does not vanish on the holes and the window edge");
      v[node] += value;
    }
    if (v.empty()) continue;
    const auto val = [&](std::size_t node) {
      auto it = v.find(node);
      return it == v.end() ? 0.0 : it->second;
    };
    double a = 0.0, vv = 0.0, mass = 0.0, src = 0.0;
    for (const auto& [node, value] : v) {
      const int i = int(node % g.nx), j = int(node / g.nx);
      const Arms arms = cls.arms_at(node);
      const double weight = quadrature_weight(cls, i, j);
      mass += weight * value * value;
      if (inside_periodic_hole(win, g.node(i, j))) src += weight * value;
      for (int d = 0; d < 4; ++d) {
        const auto nb = cls.neighbor(i, j, d);
        if (!nb) continue;
        const double ew = 1.0;  // trial nodes never sit on the window edge
        if (arms[d] < 1.0) {
          const Point p{g.node(i, j).x + kDi[d] * arms[d] * g.h, g.node(i, j).y + kDj[d] * arms[d] * g.h};
          a += ew / arms[d] * (wt[node] + per.sample(p)) * value;
          vv += ew / arms[d] * value * value;
          continue;
        }
        if (cls.kind[*nb] == NodeKind::Solid) continue;
        if (v.count(*nb) && *nb < node) continue;  // counted from the other end
        const double dv = value - val(*nb);
        a += ew * (wt[node] - wt[*nb]) * dv;
        vv += ew * dv * dv;
      }
    }
    double bnd = 0.0;
    if (!gamma_ready) {
      gamma = gamma1_samples(win, per);
      gamma_ready = true;
    }
    for (const auto& s : gamma) {
      const double u = (s.p.x - g.origin.x) / g.h, t = (s.p.y - g.origin.y) / g.h;
      const int i = int(std::floor(u)), j = int(std::floor(t));
      if (i < 0 || j < 0 || i >= g.nx - 1 || j >= g.ny - 1) continue;
      const double tx = u - i, ty = t - j;
      const double vp = (1 - tx) * (1 - ty) * val(g.index(i, j)) + tx * (1 - ty) * val(g.index(i + 1, j)) +
                        (1 - tx) * ty * val(g.index(i, j + 1)) + tx * ty * val(g.index(i + 1, j + 1));
      bnd += s.dn * vp * s.ds;
    }
    const double norm = std::sqrt(mass + vv);
    if (norm > 0) worst = std::max(worst, std::abs(a + bnd - src) / norm);
  }
  return worst;
}

// --- initializer ---------------------------------------------------------------

Initializer build_initializer(const WindowDomain& win, const PeriodicCorrector& per) {
  const auto& cls = *win.cls;
  const auto& g = cls.grid;
  Initializer out;
  out.phi.assign(g.size(), 0.0);
  const double d0 = delta0(win.field, win.radius);
  const double gmax = per.max_gradient();
  for (const CellIndex k : win.field.perturbed_cells(win.radius)) {
    if (inf_norm(k) > win.radius) continue;
    const auto per_k = win.field.periodic_hole_at(k);
    const auto hole_k = win.field.hole_at(k);
    if (!per_k || !hole_k) continue;
    const double eps = std::min(minimal_alpha(*per_k, *hole_k), 0.5 * d0);
    if (eps < 2 * g.h)
      fail(ErrorKind::UnderResolved, "initializer ramp of cell (" + std::to_string(k.i) + "," +
                                         std::to_string(k.j) + ") is narrower than 2h");
    out.ramp_width.push_back({k, eps});
    double sup_w = 0.0;
    const int i0 = int(long(k.i) * win.n - win.lo());
    const int j0 = int(long(k.j) * win.n - win.lo());
    for (int j = j0; j <= j0 + win.n; ++j)
      for (int i = i0; i <= i0 + win.n; ++i) {
        const Point p = g.node(i, j);
        const double sd = signed_distance(*hole_k, p);
        if (sd >= eps) continue;
        const double t = std::clamp(1.0 - sd / eps, 0.0, 1.0);
        const double chi = t * t * t * (10 + t * (-15 + 6 * t));
        const double wp = per.at_node(win.lo() + i, win.lo() + j);
        out.phi[g.index(i, j)] = -chi * wp;
        if (sd >= 0) sup_w = std::max(sup_w, wp);
      }
    const double ring = perimeter(*hole_k) * eps + kPi * eps * eps;
    const double slope = 15.0 / 8.0 / eps;
    out.bound += 2 * gmax * gmax * ring + 2 * sup_w * sup_w * slope * slope * ring;
  }
  const auto trace = [&](Point p) { return -per.sample(p); };
  out.grad_sq = energy_form(cls, out.phi, out.phi, trace, trace);
  return out;
}

// --- reports -------------------------------------------------------------------

SupNormReport sup_norm_report(const CompositeCorrector& w) {
  SupNormReport r{w.periodic().max_value(), w.periodic().max_gradient()};
  if (const auto* d = w.defect()) {
    r.w_max = std::max(r.w_max, *std::max_element(d->w.begin(), d->w.end()));
    r.grad_max = std::max(r.grad_max, max_edge_gradient(*d->window.cls, d->w));
  }
  return r;
}

double ring_h1(const DefectCorrector& defect, const PeriodicCorrector& per, int ring) {
  const auto& cls = *defect.window.cls;
  const auto& g = cls.grid;
  const auto& wt = defect.w_tilde;
  double s = 0.0;
  visit_energy(cls, {[&](std::size_t a, std::size_t b, double w) {
                       const Point m = 0.5 * (g.node(a) + g.node(b));
                       if (inf_norm(cell_of(m)) == ring) s += w * std::pow(wt[a] - wt[b], 2);
                     },
                     [&](std::size_t a, Point p, double, double w) {
                       const Point m = 0.5 * (g.node(a) + p);
                       if (inf_norm(cell_of(m)) == ring) s += w * std::pow(wt[a] + per.sample(p), 2);
                     }});
  return std::sqrt(s);
}

double tilde_l2(const DefectCorrector& defect) {
  const auto& cls = *defect.window.cls;
  const auto w = quadrature_weights(cls);
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * defect.w_tilde[k] * defect.w_tilde[k];
  return std::sqrt(s);
}

}  // namespace perfhom
