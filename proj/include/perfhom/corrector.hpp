#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "perfhom/geometry.hpp"
#include "perfhom/grid.hpp"
#include "perfhom/sparse.hpp"

namespace perfhom {

/// Cell problem -lap w = 1 on the unit cell, zero in the hole, periodic sides.
class PeriodicCorrector {
 public:
  HoleShape pattern;
  int n = 0;
  std::shared_ptr<const Classification> cls;  // (n+1)^2 nodes on [0,1]^2
  std::vector<double> w;
  double max_residual = 0.0;
  SolveStats stats;

  /// Value at lattice node (I, J) of the periodically extended field, y = (I, J)/n.
  double at_node(long I, long J) const;
  /// Bilinear interpolation of the extension, 0 inside holes.
  double sample(Point y) const;
  double max_value() const;
  /// Largest |difference quotient| over fluid-fluid edges.
  double max_gradient() const;
};

PeriodicCorrector solve_periodic_corrector(const HoleShape& pattern, int n);

/// Window [-R, R+1]^2 of cells around the defects, n nodes per cell.
struct WindowDomain {
  PerforationField field;
  int radius = 0;
  int n = 0;
  std::shared_ptr<const Classification> cls;

  long lo() const { return -long(radius) * n; }  // lattice index of the first node
  long hi() const { return long(radius + 1) * n; }
  bool contains_node(long I, long J) const { return I >= lo() && I <= hi() && J >= lo() && J <= hi(); }
  std::size_t index(long I, long J) const { return cls->grid.index(int(I - lo()), int(J - lo())); }
};

WindowDomain make_window(const PerforationField& field, int radius, int n);

enum class WarmStart { Periodic, Zero };

struct DefectCorrector {
  WindowDomain window;
  std::vector<double> w;        // zero at solid nodes
  std::vector<double> w_tilde;  // w - periodic extension, at every node
  SolveStats stats;
};

/// -lap w = 1 in the window fluid, w = 0 on every hole, w = w_per on the
/// outer window edge.
DefectCorrector solve_defect_corrector(const WindowDomain& window, const PeriodicCorrector& per,
                                       WarmStart start = WarmStart::Periodic, double tol = 1e-12);

/// Periodic extension of w_per sampled on the window nodes.
std::vector<double> periodic_on_window(const WindowDomain& window, const PeriodicCorrector& per);

/// w = w_per + w_tilde; falls back to w_per beyond the window.
class CompositeCorrector {
 public:
  CompositeCorrector(const PeriodicCorrector& per, const DefectCorrector* defect)
      : per_(&per), defect_(defect) {}

  const PeriodicCorrector& periodic() const { return *per_; }
  const DefectCorrector* defect() const { return defect_; }

  double sample(Point y) const;
  double at_node(long I, long J) const;
  double tilde_at_node(long I, long J) const;
  /// |sample(y)| at a window-edge seam: max over edge points of the gap between
  /// samples just inside and just outside.
  double seam_discrepancy(int samples_per_side = 400) const;

 private:
  const PeriodicCorrector* per_;
  const DefectCorrector* defect_;
};

struct EnergyTerms {
  double volume = 0.0;    // 1/2 |psi|_H1^2
  double boundary = 0.0;  // integral over Gamma1 of d_n w_per psi
  double source = 0.0;    // integral of g_tilde psi
  double total() const { return volume + boundary - source; }
};

/// Energy of an admissible window field psi (values at every window node; at
/// hole boundary points psi = -w_per is imposed).
EnergyTerms energy(const WindowDomain& window, const PeriodicCorrector& per,
                   const std::vector<double>& psi);

/// Sparse trial field on window nodes.
struct Trial {
  std::vector<std::pair<std::size_t, double>> entries;
};

/// Hat functions at nodes regular in both geometries and at least two nodes
/// away from every hole boundary and from the window edge.
std::vector<Trial> hat_trials(const WindowDomain& window, const PeriodicCorrector& per,
                              std::size_t count, std::uint64_t seed);

/// max over trials of |a(w_tilde, v) + Gamma1 term - source| / ||v||_H1.
double weak_residual(const DefectCorrector& defect, const PeriodicCorrector& per,
                     const std::vector<Trial>& trials);

struct Initializer {
  std::vector<double> phi;
  std::vector<std::pair<CellIndex, double>> ramp_width;  // eps_k per perturbed cell
  double grad_sq = 0.0;      // |phi|_H1^2
  double bound = 0.0;        // assembled cut-off estimate
};

Initializer build_initializer(const WindowDomain& window, const PeriodicCorrector& per);

struct SupNormReport {
  double w_max = 0.0;
  double grad_max = 0.0;
};

SupNormReport sup_norm_report(const CompositeCorrector& w);

/// |w_tilde|_H1 restricted to the ring of cells with |k|_inf == ring.
double ring_h1(const DefectCorrector& defect, const PeriodicCorrector& per, int ring);

double tilde_l2(const DefectCorrector& defect);

}  // namespace perfhom
