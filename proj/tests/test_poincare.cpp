#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "perfhom/error.hpp"
#include "perfhom/poincare.hpp"
#include "test_support.hpp"

using namespace perfhom;
using testsupport::golden;
using testsupport::rel_diff;

namespace {

constexpr double kPi = 3.14159265358979323846;
const HoleShape kPattern = HoleShape::disk({0.5, 0.5}, 0.25);

PerforationField golden_field() {
  DefectFamily fam;
  fam.overrides[{0, 0}] = HoleShape::disk({0.5, 0.5}, 0.32);
  return PerforationField(kPattern, fam);
}

MacroProblem unit_square(double eps) {
  MacroProblem p;
  p.eps = eps;
  return p;
}

LevelFunction disk_level(Point c, double r) {
  return [c, r](Point p) { return norm(p - c) - r; };
}

}  // namespace

TEST_CASE("unit square eigenvalue") {
  const int n = 256;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Dirichlet),
                                  [](Point) { return 1.0; });
  const auto r = rayleigh_min(*cls);
  MESSAGE("lambda " << r.lambda_min);
  CHECK(rel_diff(r.lambda_min, 2 * kPi * kPi) <= 0.005);
  CHECK(r.residual <= 1e-8);
  CHECK(r.poincare_constant == doctest::Approx(1 / r.lambda_min).epsilon(1e-15));
  for (double v : r.eigenvector) CHECK(v >= 0.0);
}

TEST_CASE("cell eigenvalue against the reference") {
  const int n = 256;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Periodic), [](Point y) {
    return signed_distance(kPattern, {y.x - std::floor(y.x), y.y - std::floor(y.y)});
  });
  const auto r = rayleigh_min(*cls);
  CHECK(r.lambda_min > 0);
  CHECK(r.residual <= 1e-8);
  CHECK(rel_diff(r.lambda_min, golden("cell_lambda_min")) <= 0.01);
}

TEST_CASE("degenerate constraints") {
  const auto all = classify_nodes(CartesianGrid::square({0, 0}, 0.125, 8, OuterBC::Periodic),
                                  [](Point) { return -1.0; });
  CHECK_THROWS_AS(rayleigh_min(*all), Error);
  const auto none = classify_nodes(CartesianGrid::square({0, 0}, 0.125, 8, OuterBC::Neumann),
                                   [](Point) { return 1.0; });
  try {
    rayleigh_min(*none);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
  }
}

TEST_CASE("box constant") {
  const auto u = disk_level({0.5, 0.5}, 0.3);
  const Box r = inscribed_square({0.5, 0.5}, 0.3);
  CHECK(r.hi.x - r.lo.x == doctest::Approx(0.3 * std::sqrt(2.0)));
  const auto check = check_box_constant(u, r, 256);
  MESSAGE("box constant " << check.constant << " bound " << check.bound);
  CHECK(check.bound == doctest::Approx(2 / 0.18));
  CHECK(check.constant <= 11.33);
  CHECK(check.pass());

  const Point c{0.5, 0.5};
  const double q = (r.hi.x - r.lo.x) / 4;
  const auto half = check_box_constant(u, Box{{c.x - q, c.y - q}, {c.x + q, c.y + q}}, 256);
  CHECK(half.bound == doctest::Approx(4 * check.bound));
  CHECK(half.constant == check.constant);
  CHECK(half.pass());

  const auto full = check_box_constant([](Point) { return -1.0; }, Box{{0, 0}, {1, 1}}, 64);
  CHECK(full.constant == 0.0);
  CHECK(full.pass());

  CHECK_THROWS_AS(check_box_constant(u, Box{{0.1, 0.1}, {0.9, 0.9}}, 64), Error);
}

TEST_CASE("eps scaling") {
  const std::vector<double> eps{0.25, 0.125, 0.0625};
  const auto per = eps_scaling_study(PerforationField::periodic(kPattern), unit_square(0.25), eps);
  MESSAGE("periodic ratio " << per.ratio);
  CHECK(per.applicable);
  CHECK(per.rows.size() == 3);
  CHECK(per.pass());
  const auto gold = eps_scaling_study(golden_field(), unit_square(0.25), eps);
  MESSAGE("golden ratio " << gold.ratio);
  CHECK(gold.pass());
  for (const auto& r : gold.rows) CHECK(r.c_eps == doctest::Approx(r.poincare_constant / (r.eps * r.eps)));

  const auto csv = to_csv(per);
  CHECK(csv.rfind("epsilon,lambda_min,poincare_constant,c_eps\n", 0) == 0);
  CHECK(csv.find("# verdict") != std::string::npos);
}

TEST_CASE("no perforation is flagged") {
  const auto s = eps_scaling_study(PerforationField::empty(), unit_square(0.25), {0.25, 0.125}, 16);
  CHECK_FALSE(s.applicable);
  CHECK_FALSE(s.pass());
  CHECK(to_csv(s).find("inapplicable") != std::string::npos);
}

TEST_CASE("Rayleigh quotient certificate") {
  const auto d = build_domain(unit_square(0.25), golden_field(), 16);
  const auto& cls = *d.cls;
  const auto r = rayleigh_min(cls);
  const auto es = assemble_energy(cls);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  std::vector<double> kv;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(es.node_of.size());
    // mix smooth and rough fields
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point p = cls.grid.node(es.node_of[k]);
      v[k] = (t % 2 ? std::sin((t + 1) * p.x) * std::cos(3 * p.y) : 0.0) + nd(rng);
    }
    es.k.multiply(v, kv);
    double mass = 0;
    for (std::size_t k = 0; k < v.size(); ++k) mass += es.m[k] * v[k] * v[k];
    CHECK(mass <= r.poincare_constant * dot(v, kv) * (1 + 1e-9));
  }
}

TEST_CASE("larger holes never raise the constant") {
  auto field = [](double radius) { return PerforationField::periodic(HoleShape::disk({0.5, 0.5}, radius)); };
  const auto small = rayleigh_min(*build_domain(unit_square(0.25), field(0.2), 32).cls);
  const auto mid = rayleigh_min(*build_domain(unit_square(0.25), field(0.25), 32).cls);
  const auto big = rayleigh_min(*build_domain(unit_square(0.25), field(0.3), 32).cls);
  CHECK(mid.poincare_constant <= small.poincare_constant);
  CHECK(big.poincare_constant <= mid.poincare_constant);
}

TEST_CASE("coupling of the two-scale error") {
  const auto per = solve_periodic_corrector(kPattern, 64);
  const auto def = solve_defect_corrector(make_window(golden_field(), 3, 64), per);
  const CompositeCorrector w(per, &def);
  for (double eps : {0.25, 0.125}) {
    const auto c = coupling_check(build_domain(unit_square(eps), golden_field(), 64), w);
    CHECK(c.phi_h1 > 0);
    CHECK(c.pass());
  }
}
