// Regenerates tests/golden/golden.txt from fine-grid reference runs.
// Usage: make_golden [output path]   (about half an hour on one core)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "perfhom/corrector.hpp"
#include "perfhom/homogenize.hpp"
#include "perfhom/io.hpp"
#include "perfhom/poincare.hpp"

using namespace perfhom;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PerforationField golden_field() {
  DefectFamily fam;
  fam.overrides[{0, 0}] = HoleShape::disk({0.5, 0.5}, 0.32);
  return PerforationField(HoleShape::disk({0.5, 0.5}, 0.25), fam);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "tests/golden/golden.txt";
  const auto pattern = HoleShape::disk({0.5, 0.5}, 0.25);
  std::ostringstream out;
  out << "# Reference values for the test suite, written by tools/make_golden.cpp.\n";
  out << "# Geometry: centred disk r=0.25 per cell; golden defect r=0.32 in cell (0,0).\n";

  auto t0 = std::chrono::steady_clock::now();
  const double m512 = solve_periodic_corrector(pattern, 512).max_value();
  std::fprintf(stderr, "w_per max n=512: %.12g (%.0fs)\n", m512, seconds_since(t0));
  const auto p1024 = solve_periodic_corrector(pattern, 1024);
  const double m1024 = p1024.max_value();
  std::fprintf(stderr, "n=1024 residual %.3g after %zu iterations\n", p1024.max_residual, p1024.stats.iterations);
  const double rich = m1024 + (m1024 - m512) / 3.0;
  std::fprintf(stderr, "w_per max: %.12g %.12g -> %.12g (%.0fs)\n", m512, m1024, rich, seconds_since(t0));
  out << "# max of the cell corrector: Richardson extrapolation of n=512 (" << format_double(m512)
      << ") and n=1024 (" << format_double(m1024) << "), second order\n";
  out << "w_per_max " << format_double(rich) << "\n";

  t0 = std::chrono::steady_clock::now();
  {
    const auto per = solve_periodic_corrector(pattern, 256);
    const auto win = make_window(golden_field(), 6, 256);
    const auto def = solve_defect_corrector(win, per);
    const double l2 = tilde_l2(def);
    const double j = energy(win, per, def.w_tilde).total();
    std::fprintf(stderr, "defect: l2 %.12g J %.12g (%.0fs)\n", l2, j, seconds_since(t0));
    out << "# golden defect corrector, window radius 6, n=256 per cell\n";
    out << "tilde_l2 " << format_double(l2) << "\n";
    out << "energy_min " << format_double(j) << "\n";
  }

  t0 = std::chrono::steady_clock::now();
  {
    const int n = 256;
    const auto per = solve_periodic_corrector(pattern, n);
    const auto def = solve_defect_corrector(make_window(golden_field(), 4, n), per);
    const CompositeCorrector w(per, &def);
    MacroProblem p;
    p.eps = 0.125;
    const auto d = build_domain(p, golden_field(), n);
    const auto nm = error_report(d, solve_eps_problem(d), two_scale_approx(d, w));
    std::fprintf(stderr, "error triple: %.12g %.12g %.12g (%.0fs)\n", nm.l2, nm.h1, nm.linf, seconds_since(t0));
    out << "# two-scale error, golden defect, bump source, eps=1/8, h=eps/256, window radius 4\n";
    out << "error_l2 " << format_double(nm.l2) << "\n";
    out << "error_h1 " << format_double(nm.h1) << "\n";
    out << "error_linf " << format_double(nm.linf) << "\n";
  }

  t0 = std::chrono::steady_clock::now();
  {
    const int n = 1024;
    const auto cls = classify_nodes(CartesianGrid::square({0, 0}, 1.0 / n, n, OuterBC::Periodic), [pattern](Point y) {
      return signed_distance(pattern, {y.x - std::floor(y.x), y.y - std::floor(y.y)});
    });
    const auto r = rayleigh_min(*cls);
    std::fprintf(stderr, "cell lambda %.12g (%.0fs)\n", r.lambda_min, seconds_since(t0));
    out << "# smallest eigenvalue, periodic cell minus the disk, zero on the hole, h=1/1024\n";
    out << "cell_lambda_min " << format_double(r.lambda_min) << "\n";
  }

  write_file_atomic(path, out.str());
  std::fprintf(stderr, "wrote %s\n", path.c_str());
  return 0;
}
