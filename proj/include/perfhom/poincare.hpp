#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "perfhom/geometry.hpp"
#include "perfhom/grid.hpp"
#include "perfhom/homogenize.hpp"

namespace perfhom {

struct RayleighResult {
  double lambda_min = 0.0;
  double poincare_constant = 0.0;  // 1 / lambda_min
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
  double residual = 0.0;  // |K v - lambda M v| / (lambda |M v|)
  std::vector<double> eigenvector;  // nodal, zero off the free nodes
};

/// Smallest eigenvalue of K v = lambda M v for the energy form of cls: zero on
/// holes, zero on the outer ring for Dirichlet grids, free otherwise.
/// Shifted inverse iteration with a positive iterate.
RayleighResult rayleigh_min(const Classification& cls, double tol = 1e-8, int max_outer = 200);

struct Box {
  Point lo, hi;
  double area() const { return (hi.x - lo.x) * (hi.y - lo.y); }
};

/// Square inscribed in the largest disk centred at c with radius r.
Box inscribed_square(Point c, double r);

struct BoxCheck {
  double constant = 0.0;  // measured Poincare constant of Q minus U
  double bound = 0.0;     // d / |R|
  double slack = 0.02;
  bool pass() const { return constant <= bound * (1 + slack); }
};

/// Functions vanishing on U, free elsewhere on the unit cell with a natural
/// outer closure, n cells per side. U is given by a level function negative
/// inside it. Throws Geometry when the box is not inside U.
BoxCheck check_box_constant(const LevelFunction& u, const Box& r, int n);

struct ScalingRow {
  double eps = 0.0;
  double lambda_min = 0.0;
  double poincare_constant = 0.0;
  double c_eps = 0.0;  // poincare_constant / eps^2
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  bool applicable = true;  // false when the field carries no holes
  double ratio = 0.0;      // max / min of c_eps
  bool pass() const { return applicable && ratio <= 2.0; }
};

/// Dirichlet on the outer boundary of omega and on every hole, h = eps / n.
ScalingStudy eps_scaling_study(const PerforationField& field, const MacroProblem& omega,
                               const std::vector<double>& eps, int n = 32, int jobs = 1);

std::string to_csv(const ScalingStudy& study);

struct CouplingCheck {
  double eps = 0.0;
  double phi_l2 = 0.0;
  double phi_h1 = 0.0;
  double poincare_constant = 0.0;
  bool pass() const { return phi_l2 <= std::sqrt(poincare_constant) * phi_h1 * (1 + 1e-6); }
};

/// Error of the two-scale approximation against the Poincare constant of the
/// same grid.
CouplingCheck coupling_check(const MacroDomain& domain, const CompositeCorrector& w);

}  // namespace perfhom
