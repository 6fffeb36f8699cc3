#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace vcl {

using Point = Eigen::Vector2d;

/// Structured conforming triangulation of the unit square.
///
/// The square is cut into n x n cells, each split along its SW-NE diagonal.
/// Subdomains form a k x k grid of congruent squares numbered row-major from
/// the bottom left, so for k = 2: bottom-left 0, bottom-right 1, top-left 2,
/// top-right 3. Every triangle lies inside exactly one subdomain.
///
/// Local edge i of a triangle is the edge opposite local vertex i. Global
/// edges are oriented from the lower to the higher vertex index and carry the
/// unit normal obtained by rotating that tangent clockwise.
struct TriMesh {
  int n = 0;
  int subdomains_per_side = 2;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> elem_edges;
  /// +1 when the element's outward normal on the edge equals the global normal.
  std::vector<std::array<int, 3>> elem_edge_signs;
  /// Elements adjacent to each edge; second entry is -1 on the boundary.
  std::vector<std::array<int, 2>> edge_elems;
  std::vector<char> boundary_edge;
  std::vector<char> boundary_vertex;
  std::vector<int> subdomain;
  double h = 0.0;

  [[nodiscard]] std::size_t numVertices() const { return vertices.size(); }
  [[nodiscard]] std::size_t numTriangles() const { return triangles.size(); }
  [[nodiscard]] std::size_t numEdges() const { return edges.size(); }
  [[nodiscard]] int numSubdomains() const { return subdomains_per_side * subdomains_per_side; }
  [[nodiscard]] std::size_t numInteriorVertices() const;

  [[nodiscard]] double area(int elem) const;
  [[nodiscard]] Point centroid(int elem) const;
  [[nodiscard]] double edgeLength(int edge) const;
  /// Global unit normal of an edge (tangent low->high rotated clockwise).
  [[nodiscard]] Point edgeNormal(int edge) const;
};

/// Builds the n x n structured mesh. n must be a positive multiple of
/// `subdomains_per_side` so that subdomain interfaces are mesh lines.
TriMesh buildMesh(int n, int subdomains_per_side = 2);

/// Subdomain containing the element centroid.
int subdomainOf(const TriMesh& mesh, int elem);

/// Subdomain containing a point of the closed unit square.
int subdomainOfPoint(int subdomains_per_side, const Point& p);

/// Element containing (x, y) and the barycentric coordinates of the point in it.
struct PointLocation {
  int elem = -1;
  std::array<double, 3> bary{};
};
PointLocation locate(const TriMesh& mesh, double x, double y);

/// Index permutations induced by the 180 degree rotation about (1/2, 1/2).
/// Edges and elements are mapped onto their images; the rotated mesh
/// coincides with the original one.
struct RotationMap {
  std::vector<int> vertex;
  std::vector<int> edge;
  std::vector<int> elem;
};
RotationMap rotation180(const TriMesh& mesh);

/// Plain-text export: `vertex x y`, `triangle i j k s`, `edge i j b` records.
void writeMesh(std::ostream& out, const TriMesh& mesh);

} // namespace vcl
