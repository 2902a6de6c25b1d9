#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "perfhom/error.hpp"
#include "perfhom/grid.hpp"

using namespace perfhom;

namespace {

constexpr double kPi = 3.14159265358979323846;

LevelFunction disk_level(Point c, double r) {
  return [c, r](Point p) { return norm(p - c) - r; };
}

LevelFunction no_holes() {
  return [](Point) { return 1.0; };
}

std::vector<double> sample(const CartesianGrid& g, const std::function<double(Point)>& u) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = u(g.node(k));
  return v;
}

// -lap of each quadratic test function, applied at every free node
void check_consistency(const Classification& cls, double tol) {
  const std::vector<std::pair<std::function<double(Point)>, double>> cases = {
      {[](Point) { return 1.0; }, 0.0},        {[](Point p) { return p.x; }, 0.0},
      {[](Point p) { return p.y; }, 0.0},      {[](Point p) { return p.x * p.x; }, -2.0},
      {[](Point p) { return p.y * p.y; }, -2.0}, {[](Point p) { return p.x * p.y; }, 0.0}};
  const auto& g = cls.grid;
  for (const auto& [u, expected] : cases) {
    const auto vals = sample(g, u);
    BoundaryData bd{u, [&](std::size_t k) { return vals[k]; }};
    const auto lap = apply_laplacian(cls, vals, bd);
    double worst = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const auto idx = g.index(i, j);
        const auto k = cls.at(idx);
        if (k == NodeKind::Solid || k == NodeKind::Boundary || !g.canonical(i, j)) continue;
        worst = std::max(worst, std::abs(lap[idx] - expected));
      }
    CHECK(worst <= tol);
  }
}

}  // namespace

TEST_CASE("grid extents") {
  const auto g = CartesianGrid::square({-1, 2}, 0.125, 24, OuterBC::Dirichlet);
  CHECK(g.nx == 25);
  CHECK(g.ny == 25);
  CHECK(std::abs(g.h * (g.nx - 1) - 3.0) <= 1e-12 * 3.0);
  CHECK(g.node(24, 24) == Point{2, 5});
}

TEST_CASE("classification basics") {
  const auto g = CartesianGrid::square({0, 0}, 0.05, 20, OuterBC::Dirichlet);
  const auto empty = classify_nodes(g, no_holes());
  CHECK(empty->count(NodeKind::Solid) == 0);
  CHECK(empty->count(NodeKind::Cut) == 0);

  const auto disk = classify_nodes(g, disk_level({0.5, 0.5}, 0.3));
  CHECK(disk->solid(g.index(10, 10)));
  CHECK(disk->count(NodeKind::Cut) > 0);
}

TEST_CASE("arm fraction against a straight boundary") {
  // half plane x > 0.3 is the hole, node at x = 0.28
  const auto g = CartesianGrid::square({0.08, 0.08}, 0.05, 8, OuterBC::Dirichlet);
  const auto cls = classify_nodes(g, [](Point p) { return 0.3 - p.x; });
  REQUIRE(std::abs(g.node(4, 3).x - 0.28) < 1e-14);
  const auto arms = cls->arms_at(g.index(4, 3));
  CHECK(std::abs(arms[East] - 0.4) <= 1e-10);
  CHECK(arms[West] == 1.0);
  CHECK(cls->at(g.index(4, 3)) == NodeKind::Cut);
  CHECK(cls->solid(g.index(5, 3)));
}

TEST_CASE("isolated fluid node is under-resolved") {
  const auto g = CartesianGrid::square({0, 0}, 0.1, 10, OuterBC::Dirichlet);
  // ring hole: everything within 0.25 of the centre except a tiny dot at the centre
  const auto cls = [&] {
    return classify_nodes(g, [](Point p) {
      const double r = norm(p - Point{0.5, 0.5});
      return std::max(0.01 - r, r - 0.25);
    });
  };
  try {
    cls();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnderResolved);
  }
}

TEST_CASE("three by three row") {
  const double h = 0.5;
  const auto g = CartesianGrid::square({0, 0}, h, 2, OuterBC::Dirichlet);
  const auto cls = classify_nodes(g, no_holes());
  const auto sys = assemble_laplacian(*cls);
  REQUIRE(sys.a.n == 1);
  CHECK(sys.a.val[0] == doctest::Approx(4 / (h * h)));
  CHECK(sys.rhs[0] == 0.0);
  CHECK(sys.constrained);
  // the eliminated neighbours carry -1/h^2 each
  const auto withone = assemble_laplacian(*cls, {{}, [](std::size_t) { return 1.0; }});
  CHECK(withone.rhs[0] == doctest::Approx(4 / (h * h)));
}

TEST_CASE("regular rows are the five point stencil") {
  const double h = 0.1;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, h, 10, OuterBC::Dirichlet), no_holes());
  const auto sys = assemble_laplacian(*cls);
  CHECK(sys.a.well_formed());
  const std::size_t row = sys.unknown[cls->grid.index(5, 5)];
  int offdiag = 0;
  for (std::size_t p = sys.a.row_ptr[row]; p < sys.a.row_ptr[row + 1]; ++p) {
    if (std::size_t(sys.a.col[p]) == row) CHECK(sys.a.val[p] == doctest::Approx(4 / (h * h)));
    else {
      CHECK(sys.a.val[p] == doctest::Approx(-1 / (h * h)));
      ++offdiag;
    }
  }
  CHECK(offdiag == 4);
}

TEST_CASE("scheme is exact on quadratics") {
  SUBCASE("no holes") {
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / 16, 16, OuterBC::Dirichlet), no_holes());
    check_consistency(*cls, 1e-9);
  }
  SUBCASE("cut node with a half arm") {
    const double h = 0.05;
    // boundary half a cell east of the node at x = 0.28
    const auto cls = classify_nodes(CartesianGrid::square({0.08, 0.08}, h, 8, OuterBC::Dirichlet),
                                    [](Point p) { return 0.305 - p.x; });
    REQUIRE(std::abs(cls->arms_at(cls->grid.index(4, 3))[East] - 0.5) < 1e-9);
    check_consistency(*cls, 1e-9 / (h * h));
  }
  SUBCASE("disk hole") {
    const double h = 1.0 / 64;
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, h, 64, OuterBC::Dirichlet),
                                    disk_level({0.5, 0.47}, 0.29));
    check_consistency(*cls, 1e-9 / (h * h));
  }
  SUBCASE("ellipse hole") {
    const double h = 1.0 / 50;
    const auto e = HoleShape::ellipse({0.52, 0.5}, 0.3, 0.18, 0.7);
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, h, 50, OuterBC::Dirichlet),
                                    [e](Point p) { return signed_distance(e, p); });
    check_consistency(*cls, 1e-9 / (h * h));
  }
}

TEST_CASE("periodic grid without a hole is singular") {
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / 8, 8, OuterBC::Periodic), no_holes());
  try {
    assemble_laplacian(*cls);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
  }
}

TEST_CASE("quadrature weights") {
  {
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / 32, 32, OuterBC::Dirichlet), no_holes());
    double s = 0;
    for (double w : quadrature_weights(*cls)) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  double prev_err = 1;
  for (int n : {128, 256, 512}) {
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Periodic),
                                    disk_level({0.5, 0.5}, 0.25));
    double s = 0;
    for (double w : quadrature_weights(*cls)) s += w;
    const double err = std::abs(s - (1 - kPi / 16));
    if (n == 512) CHECK(err <= 2e-3);
    CHECK(err <= prev_err);
    prev_err = err;
  }
  {
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 0.1, 10, OuterBC::Dirichlet),
                                    [](Point) { return -1.0; });
    double s = 0;
    for (double w : quadrature_weights(*cls)) s += w;
    CHECK(s == 0.0);
  }
}

TEST_CASE("norms on the unit square") {
  const int n = 256;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Dirichlet), no_holes());
  const auto& g = cls->grid;
  const auto one = norms(*cls, std::vector<double>(g.size(), 1.0));
  CHECK(one.l2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.h1 == 0.0);
  CHECK(one.linf == 1.0);

  const auto ss = norms(*cls, sample(g, [](Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }));
  CHECK(std::abs(ss.l2 - 0.5) <= 1e-3);

  const auto x = norms(*cls, sample(g, [](Point p) { return p.x; }));
  CHECK(std::abs(x.h1 - 1.0) <= 1e-6);
}

TEST_CASE("discrete maximum principle") {
  const int n = 96;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Dirichlet), [](Point p) {
    const Point q{p.x * 4 - std::floor(p.x * 4), p.y * 4 - std::floor(p.y * 4)};
    return (norm(q - Point{0.5, 0.5}) - 0.3) / 4;
  });
  const auto sys = assemble_laplacian(*cls);
  std::vector<double> b(sys.node_of.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Point p = cls->grid.node(sys.node_of[k]);
    b[k] = std::exp(-10 * (p.x - 0.4) * (p.x - 0.4));
  }
  const auto x = solve(sys.a, b);
  for (double v : x) CHECK(v >= -1e-12);
}

TEST_CASE("energy form matches the stiffness matrix") {
  const int n = 40;
  const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Dirichlet),
                                  disk_level({0.5, 0.5}, 0.27));
  const auto es = assemble_energy(*cls);
  std::vector<double> u(cls->grid.size(), 0.0), x(es.node_of.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Point p = cls->grid.node(es.node_of[k]);
    x[k] = std::sin(3 * p.x) * p.y * p.y;
    u[es.node_of[k]] = x[k];
  }
  std::vector<double> kx;
  es.k.multiply(x, kx);
  CHECK(dot(x, kx) == doctest::Approx(energy_form(*cls, u, u)).epsilon(1e-12));
}

TEST_CASE("field dump round trip header") {
  const auto g = CartesianGrid::square({0, 0}, 0.5, 2, OuterBC::Dirichlet);
  const std::string path = "grid_dump_test.txt";
  write_field(path, g, std::vector<double>(g.size(), 0.25));
  std::FILE* f = std::fopen(path.c_str(), "r");
  REQUIRE(f);
  int lines = 0;
  for (int c; (c = std::fgetc(f)) != EOF;) lines += c == '\n';
  std::fclose(f);
  std::remove(path.c_str());
  CHECK(lines == 4 + 9);
}
