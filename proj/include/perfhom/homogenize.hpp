#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "perfhom/corrector.hpp"
#include "perfhom/geometry.hpp"
#include "perfhom/grid.hpp"

namespace perfhom {

struct Source {
  enum class Kind { Bump, Constant };
  Kind kind = Kind::Bump;
  Point center{0.5, 0.5};
  double radius = 0.35;
  double amplitude = 1.0;
  double value = 1.0;  // constant source

  static Source bump(Point c, double rho, double a) { return {Kind::Bump, c, rho, a, 1.0}; }
  static Source constant(double v) { return {Kind::Constant, {}, 0.35, 1.0, v}; }

  double f(Point x) const;
  Point grad(Point x) const;
  double laplacian(Point x) const;

  friend bool operator==(const Source&, const Source&) = default;
};

struct MacroProblem {
  Point lo{0, 0};
  Point hi{1, 1};
  Source source;
  double eps = 0.125;
  Point anchor{0.5, 0.5};  // micro coordinate y = (x - anchor) / eps

  /// ||f||_inf + ||grad f||_L2 + ||lap f||_L2 over the rectangle.
  double source_norm() const;
};

struct MacroDomain {
  MacroProblem problem;
  PerforationField field;
  int n = 0;  // nodes per cell, h = eps / n
  long offset_i = 0, offset_j = 0;  // lattice index of grid node (0, 0)
  std::shared_ptr<const Classification> cls;

  double h() const { return cls->grid.h; }
  Point micro(Point x) const {
    return {(x.x - problem.anchor.x) / problem.eps, (x.y - problem.anchor.y) / problem.eps};
  }
};

/// Classifies Omega_eps. Needs integer cell counts, anchor on the cell
/// lattice and h <= eps/16.
MacroDomain build_domain(const MacroProblem& problem, const PerforationField& field, int n);

std::vector<double> solve_eps_problem(const MacroDomain& domain, SolveStats* stats = nullptr,
                                      double tol = 1e-10);

/// eps^2 w(x/eps) f(x) at every node, 0 on solid nodes.
std::vector<double> two_scale_approx(const MacroDomain& domain, const CompositeCorrector& w);

Norms error_report(const MacroDomain& domain, const std::vector<double>& u,
                   const std::vector<double>& approx);

/// ||2 grad_y w(x/eps) . grad f + eps w(x/eps) lap f||_L2.
double residual_diagnostic(const MacroDomain& domain, const CompositeCorrector& w);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Least squares on (log eps, log e).
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

enum class CorrectorChoice { Full, PeriodicOnly, Both };

struct StudySpec {
  MacroProblem problem;  // eps is overwritten per row
  PerforationField field;
  std::vector<double> eps;
  std::vector<int> n;  // nodes per cell, one per eps
  int truncation = 4;
  CellIndex defect_cell{0, 0};
  CorrectorChoice choice = CorrectorChoice::Both;
  int jobs = 1;
};

struct StudyRow {
  double eps = 0.0, h = 0.0;
  double l2_err = 0.0, h1_err = 0.0, linf_err = 0.0;
  double l2_err_per = 0.0, h1_err_per = 0.0, linf_err_per = 0.0;
  double linf_defect_cell = 0.0;
  double tilde_h1 = 0.0;
  double g_eps_l2 = 0.0;
  double u_l2 = 0.0;
};

inline const std::vector<std::string>& study_columns() {
  static const std::vector<std::string> cols{
      "l2_err",     "h1_err",           "linf_err", "l2_err_per", "h1_err_per",
      "linf_err_per", "linf_defect_cell", "tilde_h1", "g_eps_l2"};
  return cols;
}

double column(const StudyRow& row, const std::string& name);

struct ConvergenceReport {
  std::vector<StudyRow> rows;  // sorted by decreasing eps
  std::map<std::string, RateFit> slopes;
  std::size_t rows_in_fit = 0;
};

/// Rows with h > eps/64 stay in the table but are kept out of the fits.
ConvergenceReport fit_report(std::vector<StudyRow> rows);

ConvergenceReport convergence_study(const StudySpec& spec);

/// Every e_i >= fraction * c eps_i^2 with c the geometric-mean fit of e/eps^2.
bool above_eps2_floor(const std::vector<std::pair<double, double>>& pairs, double fraction);

std::string to_csv(const ConvergenceReport& report);

}  // namespace perfhom
