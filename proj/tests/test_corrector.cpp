#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "perfhom/corrector.hpp"
#include "perfhom/error.hpp"
#include "test_support.hpp"

using namespace perfhom;
using testsupport::golden;
using testsupport::rel_diff;

namespace {

const HoleShape kPattern = HoleShape::disk({0.5, 0.5}, 0.25);

PerforationField single_defect(double r) {
  DefectFamily fam;
  fam.overrides[{0, 0}] = HoleShape::disk({0.5, 0.5}, r);
  return PerforationField(kPattern, fam);
}

const PeriodicCorrector& per64() {
  static const auto p = solve_periodic_corrector(kPattern, 64);
  return p;
}

const PeriodicCorrector& per128() {
  static const auto p = solve_periodic_corrector(kPattern, 128);
  return p;
}

// golden defect, R = 4, n = 128
struct GoldenRun {
  WindowDomain win;
  DefectCorrector def;
};

const GoldenRun& golden_run() {
  static const GoldenRun run = [] {
    auto win = make_window(single_defect(0.32), 4, 128);
    auto def = solve_defect_corrector(win, per128());
    return GoldenRun{win, def};
  }();
  return run;
}

// sum over free nodes of w_i (K w)_i, K the energy stencil including edges to fixed nodes
double interior_energy(const Classification& cls, const std::vector<double>& w) {
  std::vector<double> flux(w.size(), 0.0);
  visit_energy(cls, {[&](std::size_t a, std::size_t b, double wt) {
                       flux[a] += wt * (w[a] - w[b]);
                       flux[b] += wt * (w[b] - w[a]);
                     },
                     [&](std::size_t a, Point, double, double wt) { flux[a] += wt * w[a]; }});
  double s = 0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (cls.at(k) != NodeKind::Boundary) s += w[k] * flux[k];
  return s;
}

}  // namespace

TEST_CASE("periodic corrector symmetry") {
  const int n = 256;
  const auto p = solve_periodic_corrector(kPattern, n);
  double worst = 0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double w = p.at_node(i, j);
      worst = std::max({worst, std::abs(w - p.at_node(n - i, j)), std::abs(w - p.at_node(j, i))});
    }
  CHECK(worst <= 1e-9);
  CHECK(p.max_residual <= 1e-8);
  CHECK(p.sample({0.5, 0.5}) == 0.0);
}

TEST_CASE("periodic corrector maximum against the reference") {
  const auto p = solve_periodic_corrector(kPattern, 512);
  CHECK(std::abs(p.max_value() - golden("w_per_max")) <= 1e-4);
}

TEST_CASE("periodic corrector Green identity") {
  const auto& p = per128();
  const auto& cls = *p.cls;
  const auto w = quadrature_weights(cls);
  double mass = 0;
  for (std::size_t k = 0; k < w.size(); ++k) mass += w[k] * p.w[k];
  // discrete: the assembled equation tested against w itself
  const auto lap = apply_laplacian(cls, p.w);
  const double h2 = cls.grid.h * cls.grid.h;
  double lhs = 0, rhs = 0;
  for (int j = 0; j < cls.grid.ny; ++j)
    for (int i = 0; i < cls.grid.nx; ++i) {
      const auto idx = cls.grid.index(i, j);
      if (!cls.grid.canonical(i, j) || cls.solid(idx)) continue;
      lhs += h2 * p.w[idx] * lap[idx];
      rhs += h2 * p.w[idx];
    }
  CHECK(rel_diff(lhs, rhs) <= 1e-6);
  // through the energy form and the lumped mass
  const double grad2 = norms(cls, p.w).h1 * norms(cls, p.w).h1;
  CHECK(rel_diff(grad2, mass) <= 1e-2);
}

TEST_CASE("periodic corrector errors") {
  CHECK_THROWS_AS(solve_periodic_corrector(kPattern, 32), Error);
  try {
    solve_periodic_corrector(HoleShape::disk({0.503, 0.503}, 1e-4), 64);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
  }
  try {
    solve_periodic_corrector(HoleShape::disk({0.8, 0.5}, 0.25), 64);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }
}

TEST_CASE("no defect gives a vanishing defect part") {
  const auto win = make_window(PerforationField::periodic(kPattern), 2, 64);
  const auto def = solve_defect_corrector(win, per64());
  CHECK(max_abs(def.w_tilde) <= 1e-10);
  CHECK(std::abs(energy(win, per64(), def.w_tilde).total()) <= 1e-12);
  CHECK(weak_residual(def, per64(), hat_trials(win, per64(), 200, 5)) <= 1e-6);
  const auto init = build_initializer(win, per64());
  CHECK(max_abs(init.phi) == 0.0);
  CHECK(init.ramp_width.empty());

  const CompositeCorrector w(per64(), &def);
  const auto sup = sup_norm_report(w);
  const CompositeCorrector bare(per64(), nullptr);
  CHECK(std::abs(sup.w_max - sup_norm_report(bare).w_max) <= 1e-10);
  CHECK(std::abs(sup.grad_max - sup_norm_report(bare).grad_max) <= 1e-8);
}

TEST_CASE("golden defect corrector") {
  const auto& run = golden_run();
  const auto& per = per128();
  CHECK(rel_diff(tilde_l2(run.def), golden("tilde_l2")) <= 0.02);

  const double j = energy(run.win, per, run.def.w_tilde).total();
  CHECK(rel_diff(j, golden("energy_min")) <= 0.05);

  const auto init = build_initializer(run.win, per);
  CHECK(init.ramp_width.size() == 1);
  CHECK(j <= energy(run.win, per, init.phi).total());
  CHECK(init.grad_sq <= 10 * init.bound);

  CHECK(weak_residual(run.def, per, hat_trials(run.win, per, 200, 1)) <= 1e-6);
  CHECK(weak_residual(run.def, per, {Trial{}}) == 0.0);
}

TEST_CASE("defect part equals minus the cell corrector on the defect boundary") {
  const auto& run = golden_run();
  const auto& cls = *run.win.cls;
  const auto& g = cls.grid;
  const double bound = 2 * g.h * per128().max_gradient();
  const auto hole = *run.win.field.hole_at({0, 0});
  int checked = 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (cls.at(idx) != NodeKind::Cut) continue;
    const Point p = g.node(idx);
    if (signed_distance(hole, p) > g.h) continue;
    const long I = long(idx % g.nx) + run.win.lo(), J = long(idx / g.nx) + run.win.lo();
    // w = w_tilde + w_per vanishes on the hole, so one cell away it is O(h)
    CHECK(std::abs(run.def.w_tilde[idx] + per128().at_node(I, J)) <= bound);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("defect corrector with a reduced hole") {
  const auto win = make_window(single_defect(0.18), 3, 64);
  const auto def = solve_defect_corrector(win, per64());
  const auto e = energy(win, per64(), def.w_tilde);
  CHECK(e.boundary != 0.0);
  CHECK(e.total() < 0.0);
  CHECK(weak_residual(def, per64(), hat_trials(win, per64(), 200, 2)) <= 1e-6);
  const auto init = build_initializer(win, per64());
  CHECK(e.total() <= energy(win, per64(), init.phi).total());
  for (std::size_t k = 0; k < def.w.size(); ++k) CHECK(def.w[k] >= -1e-12);
}

TEST_CASE("initializer takes the trace on the defect hole") {
  const auto win = make_window(single_defect(0.32), 2, 64);
  const auto init = build_initializer(win, per64());
  const auto& g = win.cls->grid;
  const auto hole = *win.field.hole_at({0, 0});
  int inside = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (signed_distance(hole, g.node(i, j)) > 0) continue;
      CHECK(init.phi[g.index(i, j)] == doctest::Approx(-per64().at_node(win.lo() + i, win.lo() + j)).epsilon(1e-14));
      ++inside;
    }
  CHECK(inside > 0);
  CHECK_THROWS_AS(build_initializer(make_window(single_defect(0.252), 2, 64), per64()), Error);
}

TEST_CASE("uniqueness under a different initial iterate") {
  const auto win = make_window(single_defect(0.32), 2, 64);
  const auto a = solve_defect_corrector(win, per64(), WarmStart::Periodic);
  const auto b = solve_defect_corrector(win, per64(), WarmStart::Zero);
  double d = 0;
  for (std::size_t k = 0; k < a.w.size(); ++k) d = std::max(d, std::abs(a.w[k] - b.w[k]));
  CHECK(d <= 1e-9);
}

TEST_CASE("window growth") {
  const auto per = per64();
  const auto w6 = solve_defect_corrector(make_window(single_defect(0.32), 6, 64), per);
  const auto w8 = solve_defect_corrector(make_window(single_defect(0.32), 8, 64), per);
  CHECK(rel_diff(tilde_l2(w6), tilde_l2(w8)) < 0.01);
  double prev = ring_h1(w8, per, 2);
  for (int r : {4, 6, 8}) {
    const double v = ring_h1(w8, per, r);
    CHECK(v <= prev);
    prev = v;
  }
  for (const auto* d : {&w6, &w8}) CHECK(CompositeCorrector(per, d).seam_discrepancy() <= 1e-3);

  const auto w3 = solve_defect_corrector(make_window(single_defect(0.32), 3, 64), per);
  const auto s3 = sup_norm_report(CompositeCorrector(per, &w3));
  const auto s6 = sup_norm_report(CompositeCorrector(per, &w6));
  CHECK(rel_diff(s6.w_max, s3.w_max) <= 0.02);
  CHECK(rel_diff(s6.grad_max, s3.grad_max) <= 0.02);
  CHECK(s6.w_max >= per.max_value());
}

TEST_CASE("window Green identity") {
  const auto win = make_window(single_defect(0.32), 2, 64);
  const auto def = solve_defect_corrector(win, per64());
  const auto& cls = *win.cls;
  const auto& w = def.w;
  // the assembled equation tested against w, trace taken from the window edge
  const auto lap = apply_laplacian(cls, w, {{}, [&](std::size_t k) { return w[k]; }});
  const double h2 = cls.grid.h * cls.grid.h;
  double lhs = 0, rhs = 0;
  for (int j = 0; j < cls.grid.ny; ++j)
    for (int i = 0; i < cls.grid.nx; ++i) {
      const auto idx = cls.grid.index(i, j);
      if (cls.solid(idx) || cls.at(idx) == NodeKind::Boundary) continue;
      lhs += h2 * w[idx] * lap[idx];
      rhs += h2 * w[idx];
    }
  CHECK(rel_diff(lhs, rhs) <= 1e-5);

  // energy form over the whole window = interior part + trace term on the edge
  const double grad2 = energy_form(cls, w, w);
  const double inner = interior_energy(cls, w);
  const double edge_term = grad2 - inner;
  const auto wts = quadrature_weights(cls);
  double mass = 0;
  for (std::size_t k = 0; k < wts.size(); ++k)
    if (cls.at(k) != NodeKind::Boundary) mass += wts[k] * w[k];
  MESSAGE("grad^2 " << grad2 << " edge term " << edge_term << " mass " << mass);
  CHECK(edge_term != 0.0);
  CHECK(rel_diff(grad2 - edge_term, mass) <= 1e-2);  // cut-cell gap between the two stencils
}

TEST_CASE("composite sampling") {
  const auto win = make_window(single_defect(0.32), 2, 64);
  const auto def = solve_defect_corrector(win, per64());
  const CompositeCorrector w(per64(), &def);
  CHECK(w.sample({0.5, 0.5}) == 0.0);
  CHECK(w.sample({0.5 + 0.3, 0.5}) == 0.0);  // inside the enlarged hole only
  CHECK(w.sample({7.5, -3.5}) == 0.0);
  for (const Point y0 : {Point{10.13, 4.71}, Point{-9.9, 12.05}, Point{20.02, -20.5}}) {
    CHECK(w.sample(y0 + Point{1, 0}) == doctest::Approx(w.sample(y0)).epsilon(1e-12));
    CHECK(w.sample(y0) == doctest::Approx(per64().sample(y0)).epsilon(1e-15));
  }
  for (double v : def.w) CHECK(v >= -1e-12);
}
