#pragma once

#include "vcl/fields.hpp"
#include "vcl/losses.hpp"

#include <functional>
#include <span>
#include <vector>

namespace vcl {

/// out[m] = max(values[0..m]).
std::vector<double> cumulativeMax(std::span<const double> values);

enum class Method { Fosls, Dpg };

/// Discrepancy between a predicted and a Galerkin coefficient vector.
struct ErrorMeasures {
  /// ||u_theta - u_h||^2 in L2 over the shared components: the RT0 x P1 pair
  /// for FOSLS, the P0 interior for DPG.
  double e0 = 0.0;
  /// ||A_alpha(u_theta - u_h)||^2 on the conforming pair. For DPG the traces
  /// are lifted to RT0 x P1 first.
  double e_hat = 0.0;
  /// e0 split into flux and scalar parts.
  SquaredErrors interior;
  /// L2 errors of the conforming pair: the FOSLS fields themselves, or the
  /// lifted (q-hat, u-hat) for DPG.
  SquaredErrors conforming;
};

/// Both vectors must live in the trial space of `method`.
ErrorMeasures errorMeasures(const ParametricOperators& ops, Method method, const Vector& prediction,
                            const Vector& galerkin, const AlphaParam& alpha);

/// Method whose trial space a loss kind uses.
inline Method methodOf(const LossKind& kind) {
  return kind.usesDpgSpace() ? Method::Dpg : Method::Fosls;
}

/// Error-to-loss ratios of one test sample for the FOSLS loss.
struct FoslsRatios {
  double loss_pred = 0.0;
  double loss_galerkin = 0.0;
  double e0 = 0.0;
  double e_hat = 0.0;
  /// e_hat / (L(pred) + L(h)); at most 2 by the triangle inequality.
  double rho_hat = 0.0;
  double rho0 = 0.0;
  double rho = 0.0;
};

/// Same for the DPG loss at one s.
struct DpgRatios {
  double s = 1.0;
  double loss_pred = 0.0;
  double loss_galerkin = 0.0;
  double e0 = 0.0;
  double e_hat = 0.0;
  /// (e0 + s^2 e_hat) / (L_s(pred) + L_s(h)).
  double rho = 0.0;
};

/// x / d with the convention 0/0 = 0 (prediction equal to the solution).
double safeRatio(double x, double d);

/// `galerkin` must be solveFOSLS(ops, alpha).coeffs.
FoslsRatios foslsRatios(const ParametricOperators& ops, const Vector& prediction, const Vector& galerkin,
                        const AlphaParam& alpha);
/// `galerkin` must be the solveDPG(ops, alpha, s) solution.
DpgRatios dpgRatios(const ParametricOperators& ops, const Vector& prediction, const DpgSolution& galerkin,
                    const AlphaParam& alpha, double s);

/// Largest admissible rho-hat for FOSLS, including rounding slack.
inline constexpr double kRhoHatBound = 2.0 + 1e-9;

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Each index is visited exactly once; results written by
/// index are therefore independent of scheduling. The first exception thrown
/// by any worker is rethrown.
void parallelFor(int count, const std::function<void(int)>& fn, int threads = 0);

} // namespace vcl
