#include "vcl/errors.hpp"
#include "vcl/fespaces.hpp"

#include <string>

namespace vcl {

namespace {

// Nodal Lagrange bases written in barycentric coordinates. `dl` receives the
// partial derivatives with respect to (lambda0, lambda1, lambda2).
struct ScalarShape {
  double value;
  std::array<double, 3> dl;
};

// edges listed opposite vertex 0, 1, 2
constexpr std::array<std::array<int, 2>, 3> kEdgeVerts{{{1, 2}, {2, 0}, {0, 1}}};

std::array<ScalarShape, kP2Dofs> p2Shapes(const Bary& l) {
  std::array<ScalarShape, kP2Dofs> s{};
  for (int i = 0; i < 3; ++i) {
    s[i].value = l[i] * (2.0 * l[i] - 1.0);
    s[i].dl = {0.0, 0.0, 0.0};
    s[i].dl[i] = 4.0 * l[i] - 1.0;
  }
  for (int e = 0; e < 3; ++e) {
    const auto [a, b] = kEdgeVerts[e];
    auto& f = s[3 + e];
    f.value = 4.0 * l[a] * l[b];
    f.dl = {0.0, 0.0, 0.0};
    f.dl[a] = 4.0 * l[b];
    f.dl[b] = 4.0 * l[a];
  }
  return s;
}

std::array<ScalarShape, kP3Dofs> p3Shapes(const Bary& l) {
  std::array<ScalarShape, kP3Dofs> s{};
  for (int i = 0; i < 3; ++i) {
    const double x = l[i];
    s[i].value = 0.5 * x * (3.0 * x - 1.0) * (3.0 * x - 2.0);
    s[i].dl = {0.0, 0.0, 0.0};
    s[i].dl[i] = 0.5 * (27.0 * x * x - 18.0 * x + 2.0);
  }
  // two nodes per edge, at 1/3 and 2/3 of the way from a to b
  for (int e = 0; e < 3; ++e) {
    const auto [a, b] = kEdgeVerts[e];
    auto& near_a = s[3 + 2 * e];
    near_a.value = 4.5 * l[a] * l[b] * (3.0 * l[a] - 1.0);
    near_a.dl = {0.0, 0.0, 0.0};
    near_a.dl[a] = 4.5 * l[b] * (6.0 * l[a] - 1.0);
    near_a.dl[b] = 4.5 * l[a] * (3.0 * l[a] - 1.0);
    auto& near_b = s[4 + 2 * e];
    near_b.value = 4.5 * l[a] * l[b] * (3.0 * l[b] - 1.0);
    near_b.dl = {0.0, 0.0, 0.0};
    near_b.dl[a] = 4.5 * l[b] * (3.0 * l[b] - 1.0);
    near_b.dl[b] = 4.5 * l[a] * (6.0 * l[b] - 1.0);
  }
  auto& bubble = s[9];
  bubble.value = 27.0 * l[0] * l[1] * l[2];
  bubble.dl = {27.0 * l[1] * l[2], 27.0 * l[0] * l[2], 27.0 * l[0] * l[1]};
  return s;
}

Vec2 physicalGradient(const std::array<double, 3>& dl, const std::array<Vec2, 3>& grad_l) {
  return dl[0] * grad_l[0] + dl[1] * grad_l[1] + dl[2] * grad_l[2];
}

int localDim(SpaceKind space) {
  switch (space) {
  case SpaceKind::RT0:
  case SpaceKind::TraceRT0Hat:
  case SpaceKind::LagrangeP1Zero:
  case SpaceKind::TraceU1Hat:
    return 3;
  case SpaceKind::P0Vec:
    return 2;
  case SpaceKind::P0:
    return 1;
  case SpaceKind::BrokenTest:
    return kTestDofsPerElement;
  }
  return 0;
}

} // namespace

std::string_view toString(SpaceKind kind) {
  switch (kind) {
  case SpaceKind::RT0:
    return "RT0";
  case SpaceKind::LagrangeP1Zero:
    return "LagrangeP1Zero";
  case SpaceKind::P0Vec:
    return "P0Vec";
  case SpaceKind::P0:
    return "P0";
  case SpaceKind::TraceU1Hat:
    return "TraceU1Hat";
  case SpaceKind::TraceRT0Hat:
    return "TraceRT0Hat";
  case SpaceKind::BrokenTest:
    return "BrokenTest";
  }
  return "unknown";
}

std::array<Vec2, 3> baryGradients(const TriMesh& mesh, int elem) {
  const auto& t = mesh.triangles[elem];
  const double two_area = 2.0 * mesh.area(elem);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point& a = mesh.vertices[t[(i + 1) % 3]];
    const Point& b = mesh.vertices[t[(i + 2) % 3]];
    g[i] = Vec2(a.y() - b.y(), b.x() - a.x()) / two_area;
  }
  return g;
}

Point mapToElement(const TriMesh& mesh, int elem, const Bary& bary) {
  const auto& t = mesh.triangles[elem];
  return bary[0] * mesh.vertices[t[0]] + bary[1] * mesh.vertices[t[1]] + bary[2] * mesh.vertices[t[2]];
}

Bary edgePoint(int local_edge, double t) {
  const int a = (local_edge + 1) % 3;
  const int b = (local_edge + 2) % 3;
  Bary l{0.0, 0.0, 0.0};
  l[a] = 1.0 - t;
  l[b] = t;
  return l;
}

BasisTable evalBasis(const TriMesh& mesh, SpaceKind space, int elem, std::span<const Bary> points) {
  if (elem < 0 || static_cast<std::size_t>(elem) >= mesh.numTriangles()) {
    throw InputError("evalBasis: element index " + std::to_string(elem) + " out of range");
  }
  BasisTable table;
  table.num_functions = localDim(space);
  table.num_points = static_cast<int>(points.size());
  table.entries.resize(static_cast<std::size_t>(table.num_functions) * points.size());

  const auto grad_l = baryGradients(mesh, elem);
  const auto& tri = mesh.triangles[elem];
  const double area = mesh.area(elem);

  for (int p = 0; p < table.num_points; ++p) {
    const Bary& l = points[p];
    switch (space) {
    case SpaceKind::RT0:
    case SpaceKind::TraceRT0Hat: {
      const Point x = mapToElement(mesh, elem, l);
      for (int i = 0; i < 3; ++i) {
        const double sign = mesh.elem_edge_signs[elem][i];
        auto& e = table.at(p, i);
        e.vec = sign * (x - mesh.vertices[tri[i]]) / (2.0 * area);
        e.div = sign / area;
      }
      break;
    }
    case SpaceKind::LagrangeP1Zero:
    case SpaceKind::TraceU1Hat:
      for (int i = 0; i < 3; ++i) {
        auto& e = table.at(p, i);
        e.scalar = l[i];
        e.grad = grad_l[i];
      }
      break;
    case SpaceKind::P0Vec:
      table.at(p, 0).vec = Vec2(1.0, 0.0);
      table.at(p, 1).vec = Vec2(0.0, 1.0);
      break;
    case SpaceKind::P0:
      table.at(p, 0).scalar = 1.0;
      break;
    case SpaceKind::BrokenTest: {
      const auto p2 = p2Shapes(l);
      for (int i = 0; i < kP2Dofs; ++i) {
        const Vec2 g = physicalGradient(p2[i].dl, grad_l);
        auto& ex = table.at(p, i);
        ex.vec = Vec2(p2[i].value, 0.0);
        ex.div = g.x();
        auto& ey = table.at(p, kP2Dofs + i);
        ey.vec = Vec2(0.0, p2[i].value);
        ey.div = g.y();
      }
      const auto p3 = p3Shapes(l);
      for (int i = 0; i < kP3Dofs; ++i) {
        auto& e = table.at(p, kTauDofs + i);
        e.scalar = p3[i].value;
        e.grad = physicalGradient(p3[i].dl, grad_l);
      }
      break;
    }
    }
  }
  return table;
}

DofMap buildDofMap(const TriMesh& mesh, SpaceKind space) {
  DofMap map;
  map.space = space;
  map.local_dim = localDim(space);
  const auto nt = static_cast<int>(mesh.numTriangles());
  map.local_to_global.assign(nt, std::vector<int>(map.local_dim, -1));
  map.local_signs.assign(nt, std::vector<int>(map.local_dim, 1));

  switch (space) {
  case SpaceKind::RT0:
  case SpaceKind::TraceRT0Hat:
    map.total_dim = static_cast<int>(mesh.numEdges());
    map.entity_to_global.resize(mesh.numEdges());
    for (int e = 0; e < map.total_dim; ++e) {
      map.entity_to_global[e] = e;
    }
    for (int k = 0; k < nt; ++k) {
      for (int i = 0; i < 3; ++i) {
        map.local_to_global[k][i] = mesh.elem_edges[k][i];
        map.local_signs[k][i] = mesh.elem_edge_signs[k][i];
      }
    }
    break;
  case SpaceKind::LagrangeP1Zero:
  case SpaceKind::TraceU1Hat: {
    map.entity_to_global.assign(mesh.numVertices(), -1);
    int next = 0;
    for (std::size_t v = 0; v < mesh.numVertices(); ++v) {
      if (!mesh.boundary_vertex[v]) {
        map.entity_to_global[v] = next++;
      }
    }
    map.total_dim = next;
    for (int k = 0; k < nt; ++k) {
      for (int i = 0; i < 3; ++i) {
        map.local_to_global[k][i] = map.entity_to_global[mesh.triangles[k][i]];
      }
    }
    break;
  }
  case SpaceKind::P0Vec:
  case SpaceKind::P0:
  case SpaceKind::BrokenTest:
    map.total_dim = nt * map.local_dim;
    for (int k = 0; k < nt; ++k) {
      for (int i = 0; i < map.local_dim; ++i) {
        map.local_to_global[k][i] = k * map.local_dim + i;
      }
    }
    break;
  }
  return map;
}

namespace {

ProductLayout stack(std::vector<DofMap> blocks) {
  ProductLayout layout;
  layout.blocks = std::move(blocks);
  for (const auto& b : layout.blocks) {
    layout.offsets.push_back(layout.total_dim);
    layout.total_dim += b.total_dim;
  }
  return layout;
}

} // namespace

ProductLayout foslsLayout(const TriMesh& mesh) {
  return stack({buildDofMap(mesh, SpaceKind::RT0), buildDofMap(mesh, SpaceKind::LagrangeP1Zero)});
}

ProductLayout dpgLayout(const TriMesh& mesh) {
  return stack({buildDofMap(mesh, SpaceKind::P0Vec), buildDofMap(mesh, SpaceKind::P0),
                buildDofMap(mesh, SpaceKind::TraceU1Hat), buildDofMap(mesh, SpaceKind::TraceRT0Hat)});
}

} // namespace vcl
