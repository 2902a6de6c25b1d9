#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace perfhom {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Index of the unit cell Q_k = k + [0,1)^2.
struct CellIndex {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
  Point origin() const { return {double(i), double(j)}; }
};

inline int inf_norm(CellIndex k) { return std::max(std::abs(k.i), std::abs(k.j)); }
inline CellIndex cell_of(Point p) { return {int(std::floor(p.x)), int(std::floor(p.y))}; }

enum class ShapeKind { Disk, Ellipse };

/// A disk or a rotated ellipse. Coordinates are whatever frame the owner uses:
/// local cell coordinates inside a DefectFamily, global ones from hole_at().
struct HoleShape {
  ShapeKind kind = ShapeKind::Disk;
  Point center{0.5, 0.5};
  double r1 = 0.25;
  double r2 = 0.25;
  double rotation = 0.0;

  static HoleShape disk(Point c, double r) { return {ShapeKind::Disk, c, r, r, 0.0}; }
  static HoleShape ellipse(Point c, double a, double b, double rot) {
    return {ShapeKind::Ellipse, c, a, b, rot};
  }

  friend bool operator==(const HoleShape&, const HoleShape&) = default;
};

/// Negative inside, zero on the boundary, positive outside. Exact Euclidean
/// distance for disks; for ellipses the first-order surrogate G/|grad G| of
/// G = |Aq| - 1, which has the exact sign but only approximates the distance.
double signed_distance(const HoleShape& shape, Point p);

double inradius(const HoleShape& shape);
double area(const HoleShape& shape);
double perimeter(const HoleShape& shape);
HoleShape translated(const HoleShape& shape, Point offset);
void validate_shape(const HoleShape& shape);

// Parametrisation of the boundary, t in [0, 2*pi).
Point boundary_point(const HoleShape& shape, double t);
Point outward_normal(const HoleShape& shape, double t);
double boundary_speed(const HoleShape& shape, double t);

/// Half extents of the axis-aligned bounding box.
Point half_extents(const HoleShape& shape);

/// {p : signed_distance(shape, p) < offset}. Positive offsets give the
/// enlargement, negative ones the reduction.
struct OffsetRegion {
  HoleShape shape;
  double offset = 0.0;
  bool contains(Point p) const { return signed_distance(shape, p) < offset; }
};

OffsetRegion enlarge(const HoleShape& shape, double alpha);
OffsetRegion reduce(const HoleShape& shape, double alpha);

/// alpha_k = amplitude * ratio^{|k|_inf}; perturbed holes are the pattern with
/// both radii increased by alpha_k.
struct DecayRule {
  double amplitude = 0.0;
  double ratio = 0.5;

  double alpha(CellIndex k) const { return amplitude * std::pow(ratio, inf_norm(k)); }
  friend bool operator==(const DecayRule&, const DecayRule&) = default;
};

struct DefectFamily {
  std::map<CellIndex, HoleShape> overrides;  // local cell coordinates
  std::optional<DecayRule> decay;

  friend bool operator==(const DefectFamily&, const DefectFamily&) = default;
};

class PerforationField {
 public:
  PerforationField() = default;
  explicit PerforationField(std::optional<HoleShape> pattern, DefectFamily defects = {});

  static PerforationField periodic(const HoleShape& pattern) { return PerforationField(pattern); }
  static PerforationField empty() { return PerforationField(std::nullopt); }

  const std::optional<HoleShape>& pattern() const { return pattern_; }
  const DefectFamily& defects() const { return defects_; }

  /// O_k in global coordinates, or nothing if the cell is not perforated.
  std::optional<HoleShape> hole_at(CellIndex k) const;
  /// O_k^per = O_0^per + k in global coordinates.
  std::optional<HoleShape> periodic_hole_at(CellIndex k) const;
  bool is_perturbed(CellIndex k) const;

  /// Signed distance to the hole of the cell containing p; +inf when that
  /// cell carries no hole. Holes are compactly contained in their cell, so
  /// the sign is exact everywhere.
  double signed_distance(Point p) const;
  double periodic_signed_distance(Point p) const;
  bool in_hole(Point p) const { return signed_distance(p) < 0.0; }

  /// Cells whose hole differs from the periodic one; overrides plus the decay
  /// support truncated to |k|_inf <= radius.
  std::vector<CellIndex> perturbed_cells(int radius) const;

  friend bool operator==(const PerforationField&, const PerforationField&) = default;

 private:
  std::optional<HoleShape> pattern_;
  DefectFamily defects_;
};

/// Smallest alpha with O^{per,-}(alpha) subset O_k subset O^{per,+}(alpha).
double minimal_alpha(const HoleShape& periodic_hole, const HoleShape& hole);

struct CellA2 {
  CellIndex k;
  double alpha = 0.0;
  bool inclusion_ok = true;
};

struct A2Report {
  std::vector<CellA2> cells;     // |k|_inf <= window, row-major
  double l1_partial_sum = 0.0;   // sum of alpha_k over the window
  double tail_bound = 0.0;       // sum of alpha_k outside the window
  bool summable = true;
  bool inclusion_ok = true;
  std::optional<CellIndex> a1_violation;
};

/// Checks cell containment and the reduction/enlargement sandwich on |k|_inf <= window. When samples_per_cell > 0 the
/// inclusion chain is also checked on that many random points per cell.
A2Report verify_A2(const PerforationField& field, int window, int samples_per_cell = 0,
                   std::uint64_t seed = 0);

/// Closed-form sum over all of Z^2 of A theta^{|k|_inf} restricted to |k|_inf > window.
double decay_tail(const DecayRule& rule, int window);

double symmetric_difference_area(const PerforationField& field, CellIndex k);

struct Ball {
  Point center;
  double radius = 0.0;
};

/// A largest ball inside O_k cap O_k^per, or nothing when the intersection is empty.
std::optional<Ball> inscribed_ball(const PerforationField& field, CellIndex k);

/// dist(O_k, boundary of Q_k); throws a Geometry error when it is not positive.
double dist_to_cell_boundary(const PerforationField& field, CellIndex k);

/// min over |k|_inf <= window of dist_to_cell_boundary.
double delta0(const PerforationField& field, int window);

enum class InterfaceTag { Gamma1, Gamma2, Gamma3, None };
const char* to_string(InterfaceTag tag);

inline constexpr double kInterfaceTolerance = 1e-9;

InterfaceTag classify_interface(const PerforationField& field, CellIndex k, Point p);

/// Area of {p in k + [0,1]^2 : inside(p)} by midpoint sampling on a
/// resolution^2 grid with 8x8 supersampling of cells the boundary may cross.
template <class Inside, class Distance>
double cell_area_quadrature(CellIndex k, int resolution, Inside inside, Distance distance) {
  const double h = 1.0 / resolution;
  const double reach = 1.5 * h;  // generous: ellipse distances are only first-order
  double total = 0.0;
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      const Point mid{k.i + (i + 0.5) * h, k.j + (j + 0.5) * h};
      if (std::abs(distance(mid)) > reach) {
        total += inside(mid) ? h * h : 0.0;
        continue;
      }
      constexpr int sub = 8;
      int hits = 0;
      for (int b = 0; b < sub; ++b)
        for (int a = 0; a < sub; ++a)
          hits += inside(Point{k.i + (i + (a + 0.5) / sub) * h, k.j + (j + (b + 0.5) / sub) * h});
      total += h * h * hits / (sub * sub);
    }
  }
  return total;
}

}  // namespace perfhom
