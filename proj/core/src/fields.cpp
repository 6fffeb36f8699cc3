#include "vcl/fields.hpp"

#include "vcl/errors.hpp"

namespace vcl {

namespace {

void requireDim(const Vector& v, int dim, const char* where) {
  if (v.size() != dim) {
    throw InputError(std::string(where) + ": coefficient vector has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(dim));
  }
}

Vector6 gatherFosls(const FoslsElementBlock& blk, const Vector& coeffs) {
  Vector6 local;
  for (int j = 0; j < 6; ++j) {
    local(j) = blk.dofs[j] >= 0 ? coeffs(blk.dofs[j]) : 0.0;
  }
  return local;
}

} // namespace

FieldSample evalFoslsField(const ParametricOperators& ops, const Vector& coeffs, int elem, const Bary& bary) {
  requireDim(coeffs, ops.fosls.dim(), "evalFoslsField");
  const Vector6 local = gatherFosls(ops.fosls.blocks[elem], coeffs);
  const std::array<Bary, 1> pts{bary};
  const BasisTable flux = evalBasis(ops.mesh, SpaceKind::RT0, elem, pts);
  FieldSample out;
  for (int i = 0; i < 3; ++i) {
    out.q += local(i) * flux.at(0, i).vec;
    out.u += local(3 + i) * bary[i];
  }
  return out;
}

FieldSample evalDpgInterior(const ParametricOperators& ops, const Vector& coeffs, int elem) {
  requireDim(coeffs, ops.dpg.dim(), "evalDpgInterior");
  const auto& dofs = ops.dpg.blocks[elem].dofs;
  FieldSample out;
  out.q = Vec2(coeffs(dofs[0]), coeffs(dofs[1]));
  out.u = coeffs(dofs[2]);
  return out;
}

Vector liftTraces(const ParametricOperators& ops, const Vector& dpg_coeffs) {
  requireDim(dpg_coeffs, ops.dpg.dim(), "liftTraces");
  const int ne = ops.fosls.fluxDim();
  const int nv = ops.fosls.dim() - ne;
  Vector out(ops.fosls.dim());
  out.head(ne) = dpg_coeffs.segment(ops.dpg.traceQOffset(), ne);
  out.tail(nv) = dpg_coeffs.segment(ops.dpg.traceUOffset(), nv);
  return out;
}

SquaredErrors foslsL2Error(const ParametricOperators& ops, const Vector& coeffs, const VectorFn& q_exact,
                           const ScalarFn& u_exact) {
  requireDim(coeffs, ops.fosls.dim(), "foslsL2Error");
  const QuadratureRule rule = triangleRule(6);
  SquaredErrors err;
  for (int k = 0; k < static_cast<int>(ops.mesh.numTriangles()); ++k) {
    const Vector6 local = gatherFosls(ops.fosls.blocks[k], coeffs);
    const BasisTable flux = evalBasis(ops.mesh, SpaceKind::RT0, k, rule.points);
    const double jac = 2.0 * ops.mesh.area(k);
    for (int p = 0; p < flux.num_points; ++p) {
      const Point x = mapToElement(ops.mesh, k, rule.points[p]);
      Vec2 q = Vec2::Zero();
      double u = 0.0;
      for (int i = 0; i < 3; ++i) {
        q += local(i) * flux.at(p, i).vec;
        u += local(3 + i) * rule.points[p][i];
      }
      const double w = rule.weights[p] * jac;
      err.q += w * (q - q_exact(x)).squaredNorm();
      const double du = u - u_exact(x);
      err.u += w * du * du;
    }
  }
  return err;
}

SquaredErrors dpgInteriorL2Error(const ParametricOperators& ops, const Vector& coeffs, const VectorFn& q_exact,
                                 const ScalarFn& u_exact) {
  requireDim(coeffs, ops.dpg.dim(), "dpgInteriorL2Error");
  const QuadratureRule rule = triangleRule(6);
  SquaredErrors err;
  for (int k = 0; k < static_cast<int>(ops.mesh.numTriangles()); ++k) {
    const FieldSample v = evalDpgInterior(ops, coeffs, k);
    const double jac = 2.0 * ops.mesh.area(k);
    for (std::size_t p = 0; p < rule.points.size(); ++p) {
      const Point x = mapToElement(ops.mesh, k, rule.points[p]);
      const double w = rule.weights[p] * jac;
      err.q += w * (v.q - q_exact(x)).squaredNorm();
      const double du = v.u - u_exact(x);
      err.u += w * du * du;
    }
  }
  return err;
}

SquaredErrors foslsMassNorms(const ParametricOperators& ops, const Vector& delta) {
  requireDim(delta, ops.fosls.dim(), "foslsMassNorms");
  SquaredErrors out;
  for (const FoslsElementBlock& blk : ops.fosls.blocks) {
    const Vector6 local = gatherFosls(blk, delta);
    out.q += local.head<3>().dot(blk.mass.topLeftCorner<3, 3>() * local.head<3>());
    out.u += local.tail<3>().dot(blk.mass.bottomRightCorner<3, 3>() * local.tail<3>());
  }
  return out;
}

SquaredErrors dpgInteriorMassNorms(const ParametricOperators& ops, const Vector& delta) {
  requireDim(delta, ops.dpg.dim(), "dpgInteriorMassNorms");
  SquaredErrors out;
  for (int k = 0; k < ops.dpg.numElements(); ++k) {
    const FieldSample v = evalDpgInterior(ops, delta, k);
    out.q += ops.dpg.elem_area[k] * v.q.squaredNorm();
    out.u += ops.dpg.elem_area[k] * v.u * v.u;
  }
  return out;
}

GridField sampleScalarField(const ParametricOperators& ops, const Vector& fosls_coeffs, int resolution) {
  requireDim(fosls_coeffs, ops.fosls.dim(), "sampleScalarField");
  if (resolution < 1) {
    throw InputError("sampleScalarField: resolution must be positive");
  }
  GridField g;
  g.resolution = resolution;
  for (int j = 0; j <= resolution; ++j) {
    for (int i = 0; i <= resolution; ++i) {
      const double x = static_cast<double>(i) / resolution;
      const double y = static_cast<double>(j) / resolution;
      const PointLocation loc = locate(ops.mesh, x, y);
      const Vector6 local = gatherFosls(ops.fosls.blocks[loc.elem], fosls_coeffs);
      double u = 0.0;
      for (int v = 0; v < 3; ++v) {
        u += local(3 + v) * loc.bary[v];
      }
      g.x.push_back(x);
      g.y.push_back(y);
      g.value.push_back(u);
    }
  }
  return g;
}

} // namespace vcl
