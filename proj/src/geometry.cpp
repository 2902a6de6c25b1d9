#include "perfhom/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>

#include "perfhom/error.hpp"

namespace perfhom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

Point to_local_frame(const HoleShape& s, Point p) {
  const Point d = p - s.center;
  const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
  return {c * d.x + sn * d.y, -sn * d.x + c * d.y};
}

double disk_intersection_area(const HoleShape& a, const HoleShape& b) {
  const double d = norm(a.center - b.center);
  const double r1 = a.r1, r2 = b.r1;
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) return kPi * std::pow(std::min(r1, r2), 2);
  const double t1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2 * d * r1), -1.0, 1.0);
  const double t2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2 * d * r2), -1.0, 1.0);
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * std::acos(t1) + r2 * r2 * std::acos(t2) - 0.5 * std::sqrt(std::max(k, 0.0));
}

bool is_disk(const HoleShape& s) { return s.kind == ShapeKind::Disk || s.r1 == s.r2; }

}  // namespace

double signed_distance(const HoleShape& s, Point p) {
  if (s.kind == ShapeKind::Disk) return norm(p - s.center) - s.r1;
  const Point q = to_local_frame(s, p);
  const double a = s.r1, b = s.r2;
  const double rho = std::hypot(q.x / a, q.y / b);
  const double g = std::hypot(q.x / (a * a), q.y / (b * b));
  if (rho == 0.0 || g == 0.0) return -std::min(a, b);
  return (rho - 1.0) * rho / g;
}

double inradius(const HoleShape& s) { return std::min(s.r1, s.r2); }
double area(const HoleShape& s) { return kPi * s.r1 * s.r2; }

double perimeter(const HoleShape& s) {
  if (is_disk(s)) return 2 * kPi * s.r1;
  const double a = s.r1, b = s.r2;
  const double h = std::pow(a - b, 2) / std::pow(a + b, 2);
  return kPi * (a + b) * (1 + 3 * h / (10 + std::sqrt(4 - 3 * h)));
}

HoleShape translated(const HoleShape& s, Point offset) {
  HoleShape out = s;
  out.center = s.center + offset;
  return out;
}

void validate_shape(const HoleShape& s) {
  require(s.r1 > 0 && s.r2 > 0 && std::isfinite(s.r1) && std::isfinite(s.r2),
          ErrorKind::Argument, "hole radii must be positive");
  if (s.kind == ShapeKind::Disk)
    require(s.r1 == s.r2, ErrorKind::Argument, "a disk needs equal radii");
}

Point boundary_point(const HoleShape& s, double t) {
  const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
  const double u = s.r1 * std::cos(t), v = s.r2 * std::sin(t);
  return {s.center.x + c * u - sn * v, s.center.y + sn * u + c * v};
}

Point outward_normal(const HoleShape& s, double t) {
  const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
  // Gradient of (u/a)^2 + (v/b)^2 in the body frame, rotated back.
  const double u = std::cos(t) / s.r1, v = std::sin(t) / s.r2;
  const Point n{c * u - sn * v, sn * u + c * v};
  return (1.0 / norm(n)) * n;
}

double boundary_speed(const HoleShape& s, double t) {
  return std::hypot(s.r1 * std::sin(t), s.r2 * std::cos(t));
}

Point half_extents(const HoleShape& s) {
  const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
  return {std::sqrt(std::pow(s.r1 * c, 2) + std::pow(s.r2 * sn, 2)),
          std::sqrt(std::pow(s.r1 * sn, 2) + std::pow(s.r2 * c, 2))};
}

OffsetRegion enlarge(const HoleShape& shape, double alpha) {
  require(alpha >= 0, ErrorKind::Argument, "enlargement radius must be >= 0");
  return {shape, alpha};
}

OffsetRegion reduce(const HoleShape& shape, double alpha) {
  require(alpha >= 0, ErrorKind::Argument, "reduction depth must be >= 0");
  return {shape, -alpha};
}

// --- PerforationField ------------------------------------------------------

PerforationField::PerforationField(std::optional<HoleShape> pattern, DefectFamily defects)
    : pattern_(std::move(pattern)), defects_(std::move(defects)) {
  if (pattern_) validate_shape(*pattern_);
  for (const auto& [k, s] : defects_.overrides) validate_shape(s);
  if (defects_.decay) {
    require(defects_.decay->amplitude >= 0, ErrorKind::Argument, "decay amplitude must be >= 0");
    require(defects_.decay->ratio > 0 && defects_.decay->ratio < 1, ErrorKind::Argument,
            "decay ratio must lie in (0,1)");
  }
}

std::optional<HoleShape> PerforationField::periodic_hole_at(CellIndex k) const {
  if (!pattern_) return std::nullopt;
  return translated(*pattern_, k.origin());
}

std::optional<HoleShape> PerforationField::hole_at(CellIndex k) const {
  if (auto it = defects_.overrides.find(k); it != defects_.overrides.end())
    return translated(it->second, k.origin());
  if (!pattern_) return std::nullopt;
  HoleShape s = translated(*pattern_, k.origin());
  if (defects_.decay) {
    const double a = defects_.decay->alpha(k);
    s.r1 += a;
    s.r2 += a;
  }
  return s;
}

bool PerforationField::is_perturbed(CellIndex k) const {
  return hole_at(k) != periodic_hole_at(k);
}

double PerforationField::signed_distance(Point p) const {
  const CellIndex k = cell_of(p);
  if (defects_.overrides.empty() && !defects_.decay) {
    if (!pattern_) return kInf;
    return perfhom::signed_distance(*pattern_, p - k.origin());
  }
  const auto hole = hole_at(k);
  return hole ? perfhom::signed_distance(*hole, p) : kInf;
}

double PerforationField::periodic_signed_distance(Point p) const {
  if (!pattern_) return kInf;
  const CellIndex k = cell_of(p);
  return perfhom::signed_distance(*pattern_, p - k.origin());
}

std::vector<CellIndex> PerforationField::perturbed_cells(int radius) const {
  std::vector<CellIndex> out;
  for (int j = -radius; j <= radius; ++j)
    for (int i = -radius; i <= radius; ++i)
      if (is_perturbed({i, j})) out.push_back({i, j});
  for (const auto& [k, s] : defects_.overrides)
    if (inf_norm(k) > radius && is_perturbed(k)) out.push_back(k);
  return out;
}

// --- defect bookkeeping -----------------------------------------------------

double minimal_alpha(const HoleShape& per, const HoleShape& hole) {
  if (per.kind == ShapeKind::Disk && hole.kind == ShapeKind::Disk) {
    const double d = norm(hole.center - per.center);
    const double enl = std::max(0.0, d + hole.r1 - per.r1);
    double red = std::max(0.0, d + per.r1 - hole.r1);
    if (d >= hole.r1) red = per.r1;  // the periodic centre is outside O_k
    return std::max(enl, std::min(red, per.r1));
  }
  double enl = 0.0, red = 0.0;
  constexpr int samples = 4096;
  for (int m = 0; m < samples; ++m) {
    const double t = 2 * kPi * m / samples;
    const double sd = signed_distance(per, boundary_point(hole, t));
    enl = std::max(enl, sd);
    red = std::max(red, -sd);
  }
  if (signed_distance(hole, per.center) >= 0.0) red = inradius(per);
  return std::max(enl, std::min(red, inradius(per)));
}

double decay_tail(const DecayRule& rule, int window) {
  const double t = rule.ratio;
  const double k = window;
  return rule.amplitude * 8.0 * std::pow(t, k + 1) * ((k + 1) - k * t) / std::pow(1 - t, 2);
}

A2Report verify_A2(const PerforationField& field, int window, int samples_per_cell,
                   std::uint64_t seed) {
  require(window >= 1, ErrorKind::Argument, "verify_A2 needs a window radius >= 1");
  A2Report report;
  auto check_cell = [&](CellIndex k) {
    CellA2 cell{k, 0.0, true};
    const auto per = field.periodic_hole_at(k);
    const auto hole = field.hole_at(k);
    if (hole) {
      const Point e = half_extents(*hole);
      const Point c = hole->center - k.origin();
      const double delta = std::min({c.x - e.x, 1 - c.x - e.x, c.y - e.y, 1 - c.y - e.y});
      if (delta <= 0 && !report.a1_violation) report.a1_violation = k;
    }
    if (per && hole) {
      cell.alpha = minimal_alpha(*per, *hole);
    } else if (per) {
      cell.alpha = inradius(*per);
    } else if (hole) {
      cell.alpha = kInf;
      cell.inclusion_ok = false;
    }
    if (samples_per_cell > 0 && per && hole) {
      std::mt19937_64 rng(seed ^ (std::uint64_t(std::uint32_t(k.i)) << 32) ^ std::uint32_t(k.j));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      constexpr double slack = 1e-12;
      for (int s = 0; s < samples_per_cell; ++s) {
        const Point p{k.i + u(rng), k.j + u(rng)};
        const double sp = signed_distance(*per, p);
        const double sh = signed_distance(*hole, p);
        if (sp < -cell.alpha - slack && !(sh < slack)) cell.inclusion_ok = false;
        if (sh < -slack && !(sp < cell.alpha + slack)) cell.inclusion_ok = false;
      }
    }
    return cell;
  };
  for (int j = -window; j <= window; ++j) {
    for (int i = -window; i <= window; ++i) {
      CellA2 cell = check_cell({i, j});
      report.l1_partial_sum += cell.alpha;
      report.inclusion_ok = report.inclusion_ok && cell.inclusion_ok;
      report.cells.push_back(cell);
    }
  }
  const auto& defects = field.defects();
  if (defects.decay) report.tail_bound = decay_tail(*defects.decay, window);
  for (const auto& [k, s] : defects.overrides) {
    if (inf_norm(k) <= window) continue;
    const CellA2 cell = check_cell(k);
    report.tail_bound += cell.alpha;
    report.inclusion_ok = report.inclusion_ok && cell.inclusion_ok;
  }
  report.summable = std::isfinite(report.l1_partial_sum) && std::isfinite(report.tail_bound);
  return report;
}

double symmetric_difference_area(const PerforationField& field, CellIndex k) {
  const auto per = field.periodic_hole_at(k);
  const auto hole = field.hole_at(k);
  if (!per && !hole) return 0.0;
  if (!per) return area(*hole);
  if (!hole) return area(*per);
  if (*per == *hole) return 0.0;
  if (is_disk(*per) && is_disk(*hole))
    return area(*per) + area(*hole) - 2.0 * disk_intersection_area(*per, *hole);
  auto inside = [&](Point p) {
    return (signed_distance(*per, p) < 0) != (signed_distance(*hole, p) < 0);
  };
  auto distance = [&](Point p) {
    return std::min(std::abs(signed_distance(*per, p)), std::abs(signed_distance(*hole, p)));
  };
  return cell_area_quadrature(k, 512, inside, distance);
}

std::optional<Ball> inscribed_ball(const PerforationField& field, CellIndex k) {
  const auto per = field.periodic_hole_at(k);
  const auto hole = field.hole_at(k);
  if (!per || !hole) return std::nullopt;
  if (is_disk(*per) && is_disk(*hole)) {
    const double d = norm(hole->center - per->center);
    const double r1 = per->r1, r2 = hole->r1;
    if (d >= r1 + r2) return std::nullopt;
    if (d <= std::abs(r1 - r2)) return r1 <= r2 ? Ball{per->center, r1} : Ball{hole->center, r2};
    const Point u = (1.0 / d) * (hole->center - per->center);
    const double t = (r1 - r2 + d) / 2;
    return Ball{per->center + t * u, (r1 + r2 - d) / 2};
  }
  // Coarse search plus local refinement of the depth min(-sd_per, -sd_hole).
  auto depth = [&](Point p) {
    return std::min(-signed_distance(*per, p), -signed_distance(*hole, p));
  };
  Point best = k.origin();
  double best_depth = -kInf;
  constexpr int n = 200;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const Point p{k.i + double(i) / n, k.j + double(j) / n};
      if (const double d = depth(p); d > best_depth) best_depth = d, best = p;
    }
  double step = 1.0 / n;
  while (step > 1e-9) {
    bool moved = false;
    for (const Point dir : {Point{1, 0}, Point{-1, 0}, Point{0, 1}, Point{0, -1}}) {
      const Point p = best + step * dir;
      if (const double d = depth(p); d > best_depth) best_depth = d, best = p, moved = true;
    }
    if (!moved) step /= 2;
  }
  if (best_depth <= 0) return std::nullopt;
  return Ball{best, best_depth};
}

double dist_to_cell_boundary(const PerforationField& field, CellIndex k) {
  const auto hole = field.hole_at(k);
  if (!hole) return kInf;
  const Point e = half_extents(*hole);
  const Point c = hole->center - k.origin();
  const double delta = std::min({c.x - e.x, 1 - c.x - e.x, c.y - e.y, 1 - c.y - e.y});
  if (delta <= 0)
    fail(ErrorKind::Geometry, "hole of cell (" + std::to_string(k.i) + "," +
                                  std::to_string(k.j) + ") touches the cell boundary");
  return delta;
}

double delta0(const PerforationField& field, int window) {
  double out = kInf;
  for (int j = -window; j <= window; ++j)
    for (int i = -window; i <= window; ++i) out = std::min(out, dist_to_cell_boundary(field, {i, j}));
  for (const auto& [k, s] : field.defects().overrides)
    out = std::min(out, dist_to_cell_boundary(field, k));
  return out;
}

const char* to_string(InterfaceTag tag) {
  switch (tag) {
    case InterfaceTag::Gamma1: return "Gamma1";
    case InterfaceTag::Gamma2: return "Gamma2";
    case InterfaceTag::Gamma3: return "Gamma3";
    case InterfaceTag::None: return "none";
  }
  return "?";
}

InterfaceTag classify_interface(const PerforationField& field, CellIndex k, Point p) {
  const auto per = field.periodic_hole_at(k);
  const auto hole = field.hole_at(k);
  const double sd_hole = hole ? signed_distance(*hole, p) : kInf;
  const double sd_per = per ? signed_distance(*per, p) : kInf;
  constexpr double tol = kInterfaceTolerance;
  if (std::abs(sd_hole) <= tol) return sd_per < -tol ? InterfaceTag::Gamma2 : InterfaceTag::Gamma3;
  if (std::abs(sd_per) <= tol) return sd_hole > tol ? InterfaceTag::Gamma1 : InterfaceTag::None;
  fail(ErrorKind::Argument, "point is not on any interface of cell (" + std::to_string(k.i) + "," +
                                std::to_string(k.j) + ")");
}

}  // namespace perfhom
