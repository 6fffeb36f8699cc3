#pragma once

#include "vcl/solvers.hpp"

#include <optional>
#include <string>

namespace vcl {

/// Which fiber loss drives training or evaluation.
struct LossKind {
  enum class Tag { Fosls, Dpg, DpgScaled, DpgTwoParam };

  Tag tag = Tag::Fosls;
  double s = 1.0;
  double s1 = 0.0;
  double s2 = 0.0;

  static LossKind fosls() { return {}; }
  static LossKind dpg(double s) { return {Tag::Dpg, s}; }
  static LossKind dpgScaled(double s) { return {Tag::DpgScaled, s}; }
  static LossKind dpgTwoParam(double s1, double s2) { return {Tag::DpgTwoParam, 1.0, s1, s2}; }

  [[nodiscard]] bool usesDpgSpace() const { return tag != Tag::Fosls; }
  /// Throws InputError on non-positive s values or s1 >= s2.
  void validate() const;
  [[nodiscard]] std::string name() const;
  /// Parses "fosls", "dpg", "dpg_scaled" or "dpg_two_param".
  static Tag parseTag(const std::string& text);
};

struct LossValue {
  double value = 0.0;
  Vector grad;
};

// ---------------------------------------------------------------------------
// FOSLS: ||A_alpha w - F||^2 = w^T S w - 2 w^T g + ||f||^2

/// ||A_alpha v||^2 = v^T S(alpha) v for a FOSLS-layout vector, without the source.
double foslsEnergy(const ParametricOperators& ops, const Vector& v, const AlphaParam& alpha);
double foslsLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha);
Vector foslsLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha);
LossValue foslsLossAndGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha,
                           bool with_grad = true);

// ---------------------------------------------------------------------------
// DPG: sum_K r_K^T G_K^{-1} r_K with r = F - B(alpha) w

/// Evaluation context for one (alpha, s) pair. The Gram factors are built
/// once and shared by the value and the gradient.
class DpgLossContext {
public:
  DpgLossContext(const ParametricOperators& ops, const AlphaParam& alpha, double s);

  [[nodiscard]] double loss(const Vector& w) const;
  [[nodiscard]] Vector grad(const Vector& w) const;
  [[nodiscard]] LossValue evaluate(const Vector& w, bool with_grad = true) const;
  [[nodiscard]] const GramFactors& factors() const { return factors_; }

private:
  const ParametricOperators* ops_;
  GramFactors factors_;
};

double dpgLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s);
Vector dpgLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s);

/// s^-2 times the DPG loss.
double scaledDpgLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s);
Vector scaledDpgLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s);

/// (s2^2 L_{s1} - s1^2 L_{s2}) / (s2^2 - s1^2). Not clamped at zero.
double twoParamCombination(double loss_s1, double loss_s2, double s1, double s2);
double twoParamLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1, double s2);
Vector twoParamLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1,
                        double s2);

/// Dispatches on the loss kind. `s_sample` overrides the kind's s for the
/// single-s DPG losses (used when s is drawn with alpha).
LossValue evaluateLoss(const ParametricOperators& ops, const LossKind& kind, const AlphaParam& alpha,
                       const Vector& w, bool with_grad, std::optional<double> s_sample = std::nullopt);

/// Dimension of the coefficient vector a loss kind acts on.
int trialDim(const ParametricOperators& ops, const LossKind& kind);

// ---------------------------------------------------------------------------
// Robustness constants

struct RobustnessConstants {
  double c0 = 1.0;
  double c_alpha = 0.0;
  double k_s_alpha = 0.0;
};

/// c_alpha = c0 (1 + max(1, alpha_max) / alpha_min).
double alphaConstant(const AlphaParam& alpha, double c0);
/// k = (c^2/s^2 + sqrt(c^4/s^4 + 4 c^2/s^2)) / 2.
double kConstant(double c_alpha, double s);
RobustnessConstants robustnessConstants(const AlphaParam& alpha, double s, double c0 = 1.0);

struct ErrorBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Two-sided bound formulas evaluated on given loss values. The bounds are
/// proven for the ideal losses only; with computable losses they are a
/// diagnostic.
ErrorBounds errorBoundsFromLosses(double loss_s1, double loss_s2, double s1, double s2, double k1, double k2);
ErrorBounds interiorErrorBounds(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1,
                                double s2, double c0 = 1.0);

} // namespace vcl
