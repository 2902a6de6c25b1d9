#include "perfhom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perfhom/error.hpp"
#include "perfhom/io.hpp"

namespace perfhom {

namespace {

constexpr double kSolidLevel = 1e-12;

int wrap(int i, int period) {
  const int r = i % period;
  return r < 0 ? r + period : r;
}

// Transverse weight of the edge or arm leaving (i, j) in direction d: edges
// lying on the outer edge only see half a dual cell.
double edge_weight(const CartesianGrid& g, int i, int j, int d) {
  if (g.bc == OuterBC::Periodic) return 1.0;
  if (d == East || d == West) return (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
  return (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
}

Point arm_point(const CartesianGrid& g, int i, int j, int d, double theta) {
  const Point p = g.node(i, j);
  return {p.x + kDi[d] * theta * g.h, p.y + kDj[d] * theta * g.h};
}

enum class TermKind { Unknown, Outer, Hole };

struct Term {
  TermKind kind = TermKind::Unknown;
  std::size_t node = 0;
  double arm = 1.0;
  Point p;
};

Term stencil_term(const Classification& cls, int i, int j, int d, const Arms& arms) {
  const auto nb = cls.neighbor(i, j, d);
  if (!nb) {
    // Mirrored ghost: reuse the opposite side.
    Term t = stencil_term(cls, i, j, kOpposite[d], arms);
    return t;
  }
  if (arms[d] < 1.0) return {TermKind::Hole, *nb, arms[d], arm_point(cls.grid, i, j, d, arms[d])};
  if (cls.kind[*nb] == NodeKind::Boundary) return {TermKind::Outer, *nb, 1.0, {}};
  return {TermKind::Unknown, *nb, 1.0, {}};
}

// Shortley-Weller coefficients for the four terms and the diagonal.
void stencil(const Classification& cls, int i, int j, std::array<Term, 4>& terms,
             std::array<double, 4>& coeff, double& diag) {
  const Arms arms = cls.arms_at(cls.grid.index(i, j));
  for (int d = 0; d < 4; ++d) terms[d] = stencil_term(cls, i, j, d, arms);
  const double h2 = cls.grid.h * cls.grid.h;
  diag = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double ap = terms[2 * axis].arm, am = terms[2 * axis + 1].arm;
    coeff[2 * axis] = 2.0 / (ap * (ap + am) * h2);
    coeff[2 * axis + 1] = 2.0 / (am * (ap + am) * h2);
    diag += 2.0 / (ap * am * h2);
  }
}

}  // namespace

CartesianGrid CartesianGrid::square(Point lo, double h, int cells, OuterBC bc) {
  require(cells >= 2 && h > 0, ErrorKind::Argument, "grid needs at least 2 cells and h > 0");
  return {lo, h, cells + 1, cells + 1, bc};
}

std::optional<std::size_t> Classification::neighbor(int i, int j, int d) const {
  int ii = i + kDi[d], jj = j + kDj[d];
  if (grid.bc == OuterBC::Periodic) {
    ii = wrap(ii, grid.nx - 1);
    jj = wrap(jj, grid.ny - 1);
  } else if (ii < 0 || jj < 0 || ii >= grid.nx || jj >= grid.ny) {
    return std::nullopt;
  }
  return grid.index(ii, jj);
}

std::size_t Classification::canonical_index(int i, int j) const {
  if (grid.bc == OuterBC::Periodic) return grid.index(wrap(i, grid.nx - 1), wrap(j, grid.ny - 1));
  return grid.index(i, j);
}

bool Classification::regular(int i, int j) const {
  if (kind[grid.index(i, j)] != NodeKind::Fluid) return false;
  for (int d = 0; d < 4; ++d) {
    const auto nb = neighbor(i, j, d);
    if (!nb || kind[*nb] == NodeKind::Solid) return false;
  }
  return true;
}

std::size_t Classification::count(NodeKind k) const {
  std::size_t c = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      if (grid.canonical(i, j) && kind[grid.index(i, j)] == k) ++c;
  return c;
}

std::shared_ptr<const Classification> classify_nodes(const CartesianGrid& grid,
                                                     LevelFunction level) {
  require(grid.nx >= 3 && grid.ny >= 3 && grid.h > 0, ErrorKind::Argument,
          "grid needs at least 3x3 nodes");
  auto cls = std::make_shared<Classification>();
  cls->grid = grid;
  cls->level = level ? std::move(level) : [](Point) { return 1.0; };
  const auto& lv = cls->level;
  const std::size_t n = grid.size();
  cls->kind.assign(n, NodeKind::Fluid);
  cls->cut_slot.assign(n, -1);

  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t idx = grid.index(i, j);
      if (lv(grid.node(i, j)) < kSolidLevel)
        cls->kind[idx] = NodeKind::Solid;
      else if (grid.bc == OuterBC::Dirichlet && grid.on_outer_edge(i, j))
        cls->kind[idx] = NodeKind::Boundary;
    }

  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t idx = grid.index(i, j);
      if (cls->kind[idx] == NodeKind::Solid) continue;
      Arms arms{1, 1, 1, 1};
      bool cut = false;
      int solid_neighbours = 0, neighbours = 0;
      const Point p = grid.node(i, j);
      for (int d = 0; d < 4; ++d) {
        const auto nb = cls->neighbor(i, j, d);
        if (!nb) continue;
        ++neighbours;
        if (cls->kind[*nb] != NodeKind::Solid) continue;
        ++solid_neighbours;
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-10) {
          const double mid = 0.5 * (lo + hi);
          const Point q{p.x + kDi[d] * mid * grid.h, p.y + kDj[d] * mid * grid.h};
          (lv(q) < kSolidLevel ? hi : lo) = mid;
        }
        arms[d] = std::max(0.5 * (lo + hi), 1e-10);
        cut = true;
      }
      if (cls->kind[idx] == NodeKind::Fluid && neighbours > 0 && solid_neighbours == neighbours &&
          grid.canonical(i, j)) {
        std::ostringstream msg;
        msg << "isolated fluid node at (" << p.x << ", " << p.y << "): geometry under-resolved";
        fail(ErrorKind::UnderResolved, msg.str());
      }
      if (cut) {
        cls->cut_slot[idx] = std::int32_t(cls->arms.size());
        cls->arms.push_back(arms);
        if (cls->kind[idx] == NodeKind::Fluid) cls->kind[idx] = NodeKind::Cut;
      }
    }
  return cls;
}

std::vector<double> LaplaceSystem::gather(const std::vector<double>& nodal) const {
  std::vector<double> x(node_of.size());
  for (std::size_t k = 0; k < node_of.size(); ++k) x[k] = nodal[node_of[k]];
  return x;
}

void LaplaceSystem::scatter(const std::vector<double>& x, std::vector<double>& nodal) const {
  for (std::size_t k = 0; k < node_of.size(); ++k) nodal[node_of[k]] = x[k];
}

namespace {

void number_unknowns(const Classification& cls, std::vector<std::int32_t>& unknown,
                     std::vector<std::size_t>& node_of) {
  const auto& g = cls.grid;
  unknown.assign(g.size(), -1);
  node_of.clear();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      const NodeKind k = cls.kind[idx];
      if (!g.canonical(i, j) || k == NodeKind::Solid || k == NodeKind::Boundary) continue;
      unknown[idx] = std::int32_t(node_of.size());
      node_of.push_back(idx);
    }
}

}  // namespace

LaplaceSystem assemble_laplacian(const Classification& cls, const BoundaryData& data) {
  LaplaceSystem sys;
  number_unknowns(cls, sys.unknown, sys.node_of);
  const std::size_t n = sys.node_of.size();
  require(n > 0, ErrorKind::Argument, "assemble_laplacian: no free nodes");
  CsrBuilder builder(n, 5 * n);
  sys.rhs.assign(n, 0.0);
  std::array<Term, 4> terms;
  std::array<double, 4> coeff;
  double diag = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t idx = sys.node_of[row];
    const int i = int(idx % cls.grid.nx), j = int(idx / cls.grid.nx);
    stencil(cls, i, j, terms, coeff, diag);
    builder.add(std::int32_t(row), diag);
    for (int d = 0; d < 4; ++d) {
      const Term& t = terms[d];
      switch (t.kind) {
        case TermKind::Unknown:
          builder.add(sys.unknown[t.node], -coeff[d]);
          break;
        case TermKind::Outer:
          sys.constrained = true;
          if (data.outer) sys.rhs[row] += coeff[d] * data.outer(t.node);
          break;
        case TermKind::Hole:
          sys.constrained = true;
          if (data.hole) sys.rhs[row] += coeff[d] * data.hole(t.p);
          break;
      }
    }
    builder.finish_row();
  }
  if (!sys.constrained)
    fail(ErrorKind::Singular, "assemble_laplacian: no Dirichlet constraint anywhere");
  sys.a = builder.build();
  return sys;
}

std::vector<double> apply_laplacian(const Classification& cls, const std::vector<double>& nodal,
                                    const BoundaryData& data) {
  const auto& g = cls.grid;
  std::vector<double> out(g.size(), 0.0);
  std::array<Term, 4> terms;
  std::array<double, 4> coeff;
  double diag = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      const NodeKind k = cls.kind[idx];
      if (!g.canonical(i, j) || k == NodeKind::Solid || k == NodeKind::Boundary) continue;
      stencil(cls, i, j, terms, coeff, diag);
      double s = diag * nodal[idx];
      for (int d = 0; d < 4; ++d) {
        const Term& t = terms[d];
        double v = 0.0;
        if (t.kind == TermKind::Hole)
          v = data.hole ? data.hole(t.p) : 0.0;
        else if (t.kind == TermKind::Outer)
          v = data.outer ? data.outer(t.node) : nodal[t.node];
        else
          v = nodal[t.node];
        s -= coeff[d] * v;
      }
      out[idx] = s;
    }
  return out;
}

double quadrature_weight(const Classification& cls, int i, int j) {
  const auto& g = cls.grid;
  const std::size_t idx = g.index(i, j);
  if (!g.canonical(i, j) || cls.kind[idx] == NodeKind::Solid) return 0.0;
  const Arms arms = cls.arms_at(idx);
  std::array<double, 4> ext{};
  for (int d = 0; d < 4; ++d) ext[d] = cls.neighbor(i, j, d) ? std::min(arms[d], 0.5) : 0.0;
  return g.h * g.h * (ext[East] + ext[West]) * (ext[North] + ext[South]);
}

std::vector<double> quadrature_weights(const Classification& cls) {
  const auto& g = cls.grid;
  std::vector<double> w(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w[g.index(i, j)] = quadrature_weight(cls, i, j);
  return w;
}

void visit_energy(const Classification& cls, const EnergyVisitor& visitor) {
  const auto& g = cls.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (!g.canonical(i, j) || cls.kind[idx] == NodeKind::Solid) continue;
      const Arms arms = cls.arms_at(idx);
      for (int d = 0; d < 4; ++d) {
        const auto nb = cls.neighbor(i, j, d);
        if (!nb) continue;
        const double w = edge_weight(g, i, j, d);
        if (arms[d] < 1.0) {
          if (visitor.arm) visitor.arm(idx, arm_point(g, i, j, d, arms[d]), arms[d], w / arms[d]);
        } else if ((d == East || d == North) && visitor.edge &&
                   cls.kind[*nb] != NodeKind::Solid) {
          visitor.edge(idx, *nb, w);
        }
      }
    }
}

double energy_form(const Classification& cls, const std::vector<double>& u,
                   const std::vector<double>& v, const std::function<double(Point)>& bu,
                   const std::function<double(Point)>& bv) {
  double s = 0.0;
  visit_energy(cls, {[&](std::size_t a, std::size_t b, double w) {
                       s += w * (u[a] - u[b]) * (v[a] - v[b]);
                     },
                     [&](std::size_t a, Point p, double, double w) {
                       const double ub = bu ? bu(p) : 0.0;
                       const double vb = bv ? bv(p) : 0.0;
                       s += w * (u[a] - ub) * (v[a] - vb);
                     }});
  return s;
}

Norms norms(const Classification& cls, const std::vector<double>& values,
            const std::function<double(Point)>& hole_value) {
  const auto& g = cls.grid;
  require(values.size() == g.size(), ErrorKind::Argument, "norms: field size mismatch");
  const auto w = quadrature_weights(cls);
  Norms out;
  double l2 = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t idx = g.index(i, j);
      if (!g.canonical(i, j) || cls.kind[idx] == NodeKind::Solid) continue;
      l2 += w[idx] * values[idx] * values[idx];
      out.linf = std::max(out.linf, std::abs(values[idx]));
    }
  out.l2 = std::sqrt(l2);
  out.h1 = std::sqrt(std::max(0.0, energy_form(cls, values, values, hole_value, hole_value)));
  return out;
}

EnergySystem assemble_energy(const Classification& cls) {
  EnergySystem sys;
  number_unknowns(cls, sys.unknown, sys.node_of);
  const std::size_t n = sys.node_of.size();
  require(n > 0, ErrorKind::Argument, "assemble_energy: no free nodes");
  const auto& g = cls.grid;
  const auto weights = quadrature_weights(cls);
  CsrBuilder builder(n, 5 * n);
  sys.m.resize(n);
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t idx = sys.node_of[row];
    const int i = int(idx % g.nx), j = int(idx / g.nx);
    const Arms arms = cls.arms_at(idx);
    double diag = 0.0;
    for (int d = 0; d < 4; ++d) {
      const auto nb = cls.neighbor(i, j, d);
      if (!nb) continue;
      const double w = edge_weight(g, i, j, d);
      if (arms[d] < 1.0) {
        diag += w / arms[d];
      } else if (cls.kind[*nb] != NodeKind::Solid) {
        diag += w;
        if (sys.unknown[*nb] >= 0) builder.add(sys.unknown[*nb], -w);
      }
    }
    builder.add(std::int32_t(row), diag);
    builder.finish_row();
    sys.m[row] = weights[idx];
  }
  sys.k = builder.build();
  return sys;
}

void write_field(const std::string& path, const CartesianGrid& grid,
                 const std::vector<double>& values) {
  require(values.size() == grid.size(), ErrorKind::Argument, "write_field: size mismatch");
  std::string out;
  out.reserve(values.size() * 24 + 128);
  out += "origin " + format_double(grid.origin.x) + " " + format_double(grid.origin.y) + "\n";
  out += "h " + format_double(grid.h) + "\n";
  out += "nx " + std::to_string(grid.nx) + "\n";
  out += "ny " + std::to_string(grid.ny) + "\n";
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace perfhom
