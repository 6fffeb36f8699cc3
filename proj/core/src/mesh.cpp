#include "vcl/mesh.hpp"

#include "vcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>

namespace vcl {

std::size_t TriMesh::numInteriorVertices() const {
  return static_cast<std::size_t>(std::count(boundary_vertex.begin(), boundary_vertex.end(), 0));
}

double TriMesh::area(int elem) const {
  const auto& t = triangles[elem];
  const Point a = vertices[t[1]] - vertices[t[0]];
  const Point b = vertices[t[2]] - vertices[t[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

Point TriMesh::centroid(int elem) const {
  const auto& t = triangles[elem];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriMesh::edgeLength(int edge) const {
  return (vertices[edges[edge][1]] - vertices[edges[edge][0]]).norm();
}

Point TriMesh::edgeNormal(int edge) const {
  const Point t = vertices[edges[edge][1]] - vertices[edges[edge][0]];
  return Point(t.y(), -t.x()) / t.norm();
}

TriMesh buildMesh(int n, int subdomains_per_side) {
  if (subdomains_per_side < 1) {
    throw InputError("buildMesh: subdomains_per_side must be positive");
  }
  if (n < 1 || n % subdomains_per_side != 0) {
    throw InputError("buildMesh: n = " + std::to_string(n) + " must be a positive multiple of " +
                     std::to_string(subdomains_per_side));
  }

  TriMesh mesh;
  mesh.n = n;
  mesh.subdomains_per_side = subdomains_per_side;

  const int nv = n + 1;
  mesh.vertices.reserve(static_cast<std::size_t>(nv) * nv);
  mesh.boundary_vertex.reserve(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
      mesh.boundary_vertex.push_back(i == 0 || j == 0 || i == n || j == n ? 1 : 0);
    }
  }

  auto vid = [nv](int i, int j) { return i + j * nv; };
  mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }

  std::map<std::pair<int, int>, int> edge_index;
  const auto nt = static_cast<int>(mesh.triangles.size());
  mesh.elem_edges.resize(nt);
  mesh.elem_edge_signs.resize(nt);
  for (int k = 0; k < nt; ++k) {
    const auto& t = mesh.triangles[k];
    for (int le = 0; le < 3; ++le) {
      // counter-clockwise traversal of the edge opposite local vertex le
      const int a = t[(le + 1) % 3];
      const int b = t[(le + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        mesh.edges.push_back({key.first, key.second});
        mesh.edge_elems.push_back({k, -1});
      } else {
        mesh.edge_elems[it->second][1] = k;
      }
      mesh.elem_edges[k][le] = it->second;
      mesh.elem_edge_signs[k][le] = a < b ? 1 : -1;
    }
  }

  mesh.boundary_edge.resize(mesh.edges.size());
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    mesh.boundary_edge[e] = mesh.edge_elems[e][1] < 0 ? 1 : 0;
  }

  mesh.subdomain.resize(nt);
  for (int k = 0; k < nt; ++k) {
    mesh.subdomain[k] = subdomainOfPoint(subdomains_per_side, mesh.centroid(k));
  }

  for (int k = 0; k < nt; ++k) {
    const auto& t = mesh.triangles[k];
    for (int le = 0; le < 3; ++le) {
      mesh.h = std::max(mesh.h, (mesh.vertices[t[(le + 1) % 3]] - mesh.vertices[t[le]]).norm());
    }
  }
  return mesh;
}

int subdomainOfPoint(int subdomains_per_side, const Point& p) {
  auto cell = [subdomains_per_side](double c) {
    return std::clamp(static_cast<int>(std::floor(c * subdomains_per_side)), 0, subdomains_per_side - 1);
  };
  return cell(p.x()) + subdomains_per_side * cell(p.y());
}

int subdomainOf(const TriMesh& mesh, int elem) {
  if (elem < 0 || static_cast<std::size_t>(elem) >= mesh.numTriangles()) {
    throw InputError("subdomainOf: element index " + std::to_string(elem) + " out of range");
  }
  return subdomainOfPoint(mesh.subdomains_per_side, mesh.centroid(elem));
}

PointLocation locate(const TriMesh& mesh, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw InputError("locate: point outside the unit square");
  }
  const int n = mesh.n;
  const int i = std::min(static_cast<int>(std::floor(x * n)), n - 1);
  const int j = std::min(static_cast<int>(std::floor(y * n)), n - 1);
  const double lx = x * n - i;
  const double ly = y * n - j;
  PointLocation loc;
  // lower triangle (v00, v10, v11) below the diagonal, upper (v00, v11, v01) above
  if (ly <= lx) {
    loc.elem = 2 * (i + j * n);
    loc.bary = {1.0 - lx, lx - ly, ly};
  } else {
    loc.elem = 2 * (i + j * n) + 1;
    loc.bary = {1.0 - ly, lx, ly - lx};
  }
  return loc;
}

RotationMap rotation180(const TriMesh& mesh) {
  RotationMap map;
  const int nv = mesh.n + 1;
  map.vertex.resize(mesh.numVertices());
  for (int v = 0; v < static_cast<int>(mesh.numVertices()); ++v) {
    map.vertex[v] = nv * nv - 1 - v;
  }

  std::map<std::pair<int, int>, int> edge_index;
  for (int e = 0; e < static_cast<int>(mesh.numEdges()); ++e) {
    edge_index[{mesh.edges[e][0], mesh.edges[e][1]}] = e;
  }
  map.edge.resize(mesh.numEdges());
  for (int e = 0; e < static_cast<int>(mesh.numEdges()); ++e) {
    const auto key = std::minmax(map.vertex[mesh.edges[e][0]], map.vertex[mesh.edges[e][1]]);
    map.edge[e] = edge_index.at({key.first, key.second});
  }

  // cell (i, j) maps to cell (n-1-i, n-1-j) and swaps its lower/upper triangle
  const int n = mesh.n;
  map.elem.resize(mesh.numTriangles());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int src = 2 * (i + j * n);
      const int dst = 2 * ((n - 1 - i) + (n - 1 - j) * n);
      map.elem[src] = dst + 1;
      map.elem[src + 1] = dst;
    }
  }
  return map;
}

void writeMesh(std::ostream& out, const TriMesh& mesh) {
  const auto old_precision = out.precision(17);
  for (const auto& v : mesh.vertices) {
    out << "vertex " << v.x() << ' ' << v.y() << '\n';
  }
  for (std::size_t k = 0; k < mesh.numTriangles(); ++k) {
    const auto& t = mesh.triangles[k];
    out << "triangle " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.subdomain[k] << '\n';
  }
  for (std::size_t e = 0; e < mesh.numEdges(); ++e) {
    out << "edge " << mesh.edges[e][0] << ' ' << mesh.edges[e][1] << ' '
        << static_cast<int>(mesh.boundary_edge[e]) << '\n';
  }
  out.precision(old_precision);
}

} // namespace vcl
