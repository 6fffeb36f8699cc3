#pragma once

#include "vcl/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace vcl {

using Vec2 = Eigen::Vector2d;
using Bary = std::array<double, 3>;

// ---------------------------------------------------------------------------
// Quadrature

/// Rule on the reference triangle in barycentric coordinates; weights sum to 1/2.
struct QuadratureRule {
  std::vector<Bary> points;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [0, 1] with `npoints` nodes.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

LineRule gaussLegendre01(int npoints);

/// Collapsed Gauss rule exact for polynomials of total degree <= `degree`.
QuadratureRule triangleRule(int degree = 6);

// ---------------------------------------------------------------------------
// Spaces and degrees of freedom

enum class SpaceKind { RT0, LagrangeP1Zero, P0Vec, P0, TraceU1Hat, TraceRT0Hat, BrokenTest };

std::string_view toString(SpaceKind kind);

inline constexpr int kTestDofsPerElement = 22;
inline constexpr int kTauDofs = 12;
inline constexpr int kP2Dofs = 6;
inline constexpr int kP3Dofs = 10;

/// Numbering of one discrete space. `local_to_global[k]` lists the global
/// index of every local basis function of element k (-1 for basis functions
/// removed by the homogeneous boundary condition) and `local_signs[k]` the
/// orientation sign applied to it.
struct DofMap {
  SpaceKind space = SpaceKind::P0;
  int total_dim = 0;
  int local_dim = 0;
  /// Vertex or edge to global index (-1 where no dof lives); empty for element spaces.
  std::vector<int> entity_to_global;
  std::vector<std::vector<int>> local_to_global;
  std::vector<std::vector<int>> local_signs;
};

DofMap buildDofMap(const TriMesh& mesh, SpaceKind space);

/// Several spaces stacked into one coefficient vector.
struct ProductLayout {
  std::vector<DofMap> blocks;
  std::vector<int> offsets;
  int total_dim = 0;

  [[nodiscard]] int offset(std::size_t block) const { return offsets[block]; }
};

/// RT0 x U1: flux block then scalar block.
ProductLayout foslsLayout(const TriMesh& mesh);
/// P0^2 x P0 x U1-hat x RT0-hat.
ProductLayout dpgLayout(const TriMesh& mesh);

// ---------------------------------------------------------------------------
// Basis evaluation

/// Values of every local basis function at every point. Vector-valued bases
/// fill `vec` and `div`; scalar bases fill `scalar` and `grad`. For the broken
/// test space functions 0..11 are the P2^2 fields (x components first) and
/// 12..21 the P3 scalars.
struct BasisTable {
  struct Entry {
    Vec2 vec = Vec2::Zero();
    double div = 0.0;
    double scalar = 0.0;
    Vec2 grad = Vec2::Zero();
  };
  int num_functions = 0;
  int num_points = 0;
  std::vector<Entry> entries;

  [[nodiscard]] const Entry& at(int point, int function) const {
    return entries[static_cast<std::size_t>(point) * num_functions + function];
  }
  Entry& at(int point, int function) { return entries[static_cast<std::size_t>(point) * num_functions + function]; }
};

/// RT0 functions carry the global orientation signs of the element's edges;
/// the trace spaces are evaluated through their conforming extensions.
BasisTable evalBasis(const TriMesh& mesh, SpaceKind space, int elem, std::span<const Bary> points);

/// Gradients of the barycentric coordinates of an element.
std::array<Vec2, 3> baryGradients(const TriMesh& mesh, int elem);

/// Physical point with the given barycentric coordinates.
Point mapToElement(const TriMesh& mesh, int elem, const Bary& bary);

/// Barycentric coordinates of the point at parameter t in [0, 1] along local
/// edge `local_edge`, traversed counter-clockwise.
Bary edgePoint(int local_edge, double t);

} // namespace vcl
