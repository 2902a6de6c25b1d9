#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfhom/geometry.hpp"
#include "perfhom/sparse.hpp"

namespace perfhom {

enum class OuterBC {
  Dirichlet,  // outer ring of nodes carries known values
  Periodic,   // last row/column duplicates the first
  Neumann,    // natural closure, ghost mirrored from the opposite neighbour
};

struct CartesianGrid {
  Point origin;
  double h = 1.0;
  int nx = 3;
  int ny = 3;
  OuterBC bc = OuterBC::Dirichlet;

  /// Square grid on [lo, lo + cells*h]^2.
  static CartesianGrid square(Point lo, double h, int cells, OuterBC bc);

  std::size_t size() const { return std::size_t(nx) * std::size_t(ny); }
  std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }
  Point node(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
  Point node(std::size_t idx) const { return node(int(idx % nx), int(idx / nx)); }
  /// Periodic grids store a duplicate last row/column; everything else is canonical.
  bool canonical(int i, int j) const {
    return bc != OuterBC::Periodic || (i < nx - 1 && j < ny - 1);
  }
  bool on_outer_edge(int i, int j) const {
    return bc != OuterBC::Periodic && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1);
  }
};

enum class NodeKind : std::uint8_t { Fluid, Cut, Solid, Boundary };

enum Direction { East = 0, West = 1, North = 2, South = 3 };
inline constexpr std::array<int, 4> kDi{1, -1, 0, 0};
inline constexpr std::array<int, 4> kDj{0, 0, 1, -1};
inline constexpr std::array<Direction, 4> kOpposite{West, East, South, North};

/// Fraction of h from a node to the hole boundary along each axis; 1 when the
/// neighbour is not solid.
using Arms = std::array<double, 4>;

/// Signed distance to the perforation, negative inside holes.
using LevelFunction = std::function<double(Point)>;

class Classification {
 public:
  CartesianGrid grid;
  std::vector<NodeKind> kind;
  std::vector<std::int32_t> cut_slot;  // -1 unless the node has a short arm
  std::vector<Arms> arms;
  LevelFunction level;

  NodeKind at(std::size_t idx) const { return kind[idx]; }
  bool solid(std::size_t idx) const { return kind[idx] == NodeKind::Solid; }
  Arms arms_at(std::size_t idx) const {
    return cut_slot[idx] < 0 ? Arms{1, 1, 1, 1} : arms[cut_slot[idx]];
  }
  /// Neighbour in direction d, wrapped in periodic mode; nothing past the outer edge.
  std::optional<std::size_t> neighbor(int i, int j, int d) const;
  /// Canonical storage index of (i, j), folding the periodic duplicates.
  std::size_t canonical_index(int i, int j) const;
  /// Fluid node whose four neighbours exist and are not solid.
  bool regular(int i, int j) const;
  std::size_t count(NodeKind k) const;
};

/// Tags every node against the level function. Nodes with level < 1e-12 are
/// solid; arms come from bisection to 1e-10 h. Throws UnderResolved for a
/// fluid node whose neighbours are all solid.
std::shared_ptr<const Classification> classify_nodes(const CartesianGrid& grid,
                                                     LevelFunction level);

/// Dirichlet data: hole values at boundary points, outer values by node index.
struct BoundaryData {
  std::function<double(Point)> hole;
  std::function<double(std::size_t)> outer;
};

struct LaplaceSystem {
  CsrMatrix a;
  std::vector<double> rhs;                // boundary contributions
  std::vector<std::int32_t> unknown;      // node -> unknown, -1 if none
  std::vector<std::size_t> node_of;       // unknown -> node
  bool constrained = false;               // some Dirichlet value entered a row

  std::vector<double> gather(const std::vector<double>& nodal) const;
  /// Writes unknowns into their nodes; other entries are left alone.
  void scatter(const std::vector<double>& x, std::vector<double>& nodal) const;
};

/// Shortley-Weller discretisation of -Laplace on the non-solid, non-boundary
/// nodes. Throws Singular when no Dirichlet value reaches any row.
LaplaceSystem assemble_laplacian(const Classification& cls, const BoundaryData& data = {});

/// Applies the discrete operator at every unknown node of a nodal field with
/// the given boundary data; entries elsewhere are 0.
std::vector<double> apply_laplacian(const Classification& cls, const std::vector<double>& nodal,
                                    const BoundaryData& data = {});

std::vector<double> quadrature_weights(const Classification& cls);
double quadrature_weight(const Classification& cls, int i, int j);

/// Callback over the energy stencil. An edge joins two non-solid nodes with
/// weight 1 (1/2 along the outer edge); an arm joins a node to the hole
/// boundary point p at fraction theta with weight 1/theta (halved likewise).
struct EnergyVisitor {
  std::function<void(std::size_t a, std::size_t b, double weight)> edge;
  std::function<void(std::size_t a, Point p, double theta, double weight)> arm;
};
void visit_energy(const Classification& cls, const EnergyVisitor& visitor);

/// sum over edges and arms of weight * (u_a - u_b)(v_a - v_b); boundary
/// values of u and v at hole points come from bu, bv (0 when empty).
double energy_form(const Classification& cls, const std::vector<double>& u,
                   const std::vector<double>& v, const std::function<double(Point)>& bu = {},
                   const std::function<double(Point)>& bv = {});

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;  // seminorm
  double linf = 0.0;
};

Norms norms(const Classification& cls, const std::vector<double>& values,
            const std::function<double(Point)>& hole_value = {});

/// Symmetric stiffness K of the energy form on the free nodes (non-solid,
/// non-boundary, canonical), with lumped mass M = quadrature weights.
struct EnergySystem {
  CsrMatrix k;
  std::vector<double> m;
  std::vector<std::int32_t> unknown;
  std::vector<std::size_t> node_of;
};
EnergySystem assemble_energy(const Classification& cls);

/// Structured-grid text dump: origin, h, nx, ny then one value per line.
void write_field(const std::string& path, const CartesianGrid& grid,
                 const std::vector<double>& values);

}  // namespace perfhom
