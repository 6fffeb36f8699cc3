#pragma once

#include "vcl/assembly.hpp"

#include <functional>

namespace vcl {

/// Pointwise value of a discrete (q, u) pair.
struct FieldSample {
  Vec2 q = Vec2::Zero();
  double u = 0.0;
};

/// RT0 x P1 field with FOSLS-layout coefficients.
FieldSample evalFoslsField(const ParametricOperators& ops, const Vector& coeffs, int elem, const Bary& bary);
/// Piecewise-constant interior field of DPG-layout coefficients.
FieldSample evalDpgInterior(const ParametricOperators& ops, const Vector& coeffs, int elem);

/// FOSLS-layout coefficients of the conforming extension of the DPG traces:
/// q-hat coefficients become RT0 fluxes and u-hat values become P1 values.
Vector liftTraces(const ParametricOperators& ops, const Vector& dpg_coeffs);

/// Squared L2 errors of the flux and scalar components separately.
struct SquaredErrors {
  double q = 0.0;
  double u = 0.0;
  [[nodiscard]] double total() const { return q + u; }
};

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Vec2(const Point&)>;

SquaredErrors foslsL2Error(const ParametricOperators& ops, const Vector& coeffs, const VectorFn& q_exact,
                           const ScalarFn& u_exact);
SquaredErrors dpgInteriorL2Error(const ParametricOperators& ops, const Vector& coeffs, const VectorFn& q_exact,
                                 const ScalarFn& u_exact);

/// Squared L2 norms of a FOSLS-layout coefficient difference, split by component.
SquaredErrors foslsMassNorms(const ParametricOperators& ops, const Vector& delta);
/// Squared L2 norms of the interior part of a DPG-layout coefficient difference.
SquaredErrors dpgInteriorMassNorms(const ParametricOperators& ops, const Vector& delta);

/// Scalar P1 component sampled on a (res+1) x (res+1) uniform grid of the
/// unit square, row-major in y then x.
struct GridField {
  int resolution = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> value;
};
GridField sampleScalarField(const ParametricOperators& ops, const Vector& fosls_coeffs, int resolution);

} // namespace vcl
