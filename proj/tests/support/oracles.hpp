#pragma once

// Brute-force reference computations used only by the tests. Basis functions
// are rebuilt here from geometry (RT0 from edge normals, Lagrange bases from
// a Vandermonde inversion in physical monomials) so that they share no code
// with the library's basis tables.

#include "vcl/assembly.hpp"
#include "vcl/losses.hpp"

#include <Eigen/Dense>

#include <functional>
#include <random>

namespace vcl::oracle {

using Dense = Eigen::MatrixXd;

/// Value of one conforming trial function on one element.
struct FieldValue {
  Vec2 q = Vec2::Zero();
  double div_q = 0.0;
  double u = 0.0;
  Vec2 grad_u = Vec2::Zero();
};

/// Value of one local broken test function.
struct TestValue {
  Vec2 tau = Vec2::Zero();
  double div_tau = 0.0;
  double nu = 0.0;
  Vec2 grad_nu = Vec2::Zero();
};

/// Global RT0 x U1 basis function `dof` (FOSLS layout) evaluated at x in elem.
FieldValue foslsBasis(const TriMesh& mesh, int dof, int elem, const Point& x);
/// Conforming field with the given FOSLS coefficients at x in elem.
FieldValue foslsField(const TriMesh& mesh, const Vector& coeffs, int elem, const Point& x);
/// The 22 local test functions of elem at x, in library order.
std::array<TestValue, kTestDofsPerElement> testBasis(const TriMesh& mesh, int elem, const Point& x);

/// Dense S(alpha) and g by direct quadrature at the given alpha.
Dense foslsMatrix(const TriMesh& mesh, const AlphaParam& alpha);
Vector foslsRhs(const TriMesh& mesh, const Source& f);
/// ||A_alpha w - F||^2 by quadrature of the residual field.
double foslsResidualNormSq(const TriMesh& mesh, const Vector& w, const AlphaParam& alpha, const Source& f);

/// Dense B(alpha), rows blocked by element, columns in DPG layout order.
Dense dpgMatrix(const TriMesh& mesh, const AlphaParam& alpha);
Vector dpgLoad(const TriMesh& mesh, const Source& f);
/// Element Gram matrix by quadrature of the broken graph norm.
Dense gramMatrix(const TriMesh& mesh, int elem, double alpha_k, double s);

/// Element-wise integrals (grad u, tau) + (u, div tau) + (div q, nu) + (q, grad nu)
/// for a conforming (q, u); equals the trace part of B applied to its traces.
Vector traceAction(const TriMesh& mesh, const Vector& fosls_coeffs);

struct SaddleSolution {
  Vector x;
  Vector err_rep;
};
/// Dense solve of [G B; B^T 0][e; x] = [F; 0].
SaddleSolution denseSaddleSolve(const ParametricOperators& ops, const AlphaParam& alpha, double s);

/// Block-diagonal dense Gram matrix G(alpha, s).
Dense globalGram(const ParametricOperators& ops, const AlphaParam& alpha, double s);

/// Central finite difference of f along coordinate i.
double centralDifference(const std::function<double(const Vector&)>& f, const Vector& x, int i, double step);

/// Relative mismatch used by all gradient checks.
inline double relativeError(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

AlphaParam randomAlpha(std::mt19937_64& rng, double lo = 1e-2, double hi = 1e2, int count = 4);
Vector randomVector(std::mt19937_64& rng, int n, double scale = 1.0);

} // namespace vcl::oracle
