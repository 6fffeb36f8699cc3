#include "vcl/losses.hpp"

#include "vcl/errors.hpp"

#include <cmath>

namespace vcl {

namespace {

void requireDim(const Vector& w, int dim, const char* where) {
  if (w.size() != dim) {
    throw InputError(std::string(where) + ": coefficient vector has length " + std::to_string(w.size()) +
                     ", expected " + std::to_string(dim));
  }
}

void requireS(double s, const char* where) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InputError(std::string(where) + ": s must be positive and finite");
  }
}

void requireOrdered(double s1, double s2, const char* where) {
  requireS(s1, where);
  requireS(s2, where);
  if (!(s1 < s2)) {
    throw InputError(std::string(where) + ": requires s1 < s2");
  }
}

} // namespace

void LossKind::validate() const {
  switch (tag) {
  case Tag::Fosls:
    return;
  case Tag::Dpg:
  case Tag::DpgScaled:
    requireS(s, "LossKind");
    return;
  case Tag::DpgTwoParam:
    requireOrdered(s1, s2, "LossKind");
    return;
  }
}

std::string LossKind::name() const {
  switch (tag) {
  case Tag::Fosls:
    return "fosls";
  case Tag::Dpg:
    return "dpg";
  case Tag::DpgScaled:
    return "dpg_scaled";
  case Tag::DpgTwoParam:
    return "dpg_two_param";
  }
  return "unknown";
}

LossKind::Tag LossKind::parseTag(const std::string& text) {
  if (text == "fosls") {
    return Tag::Fosls;
  }
  if (text == "dpg") {
    return Tag::Dpg;
  }
  if (text == "dpg_scaled") {
    return Tag::DpgScaled;
  }
  if (text == "dpg_two_param") {
    return Tag::DpgTwoParam;
  }
  throw InputError("unknown loss kind '" + text + "'");
}

// ---------------------------------------------------------------------------
// FOSLS

namespace {

// S(alpha) w accumulated element by element
Vector applyFoslsMatrix(const FoslsOperators& fos, const Vector& w, const AlphaParam& alpha) {
  Vector sw = Vector::Zero(fos.dim());
  for (std::size_t k = 0; k < fos.blocks.size(); ++k) {
    const FoslsElementBlock& blk = fos.blocks[k];
    const double a = alpha[fos.elem_subdomain[k]];
    Vector6 local;
    for (int j = 0; j < 6; ++j) {
      local(j) = blk.dofs[j] >= 0 ? w(blk.dofs[j]) : 0.0;
    }
    const Vector6 y = (blk.base + a * blk.alpha + a * a * blk.alpha_sq) * local;
    for (int j = 0; j < 6; ++j) {
      if (blk.dofs[j] >= 0) {
        sw(blk.dofs[j]) += y(j);
      }
    }
  }
  return sw;
}

} // namespace

double foslsEnergy(const ParametricOperators& ops, const Vector& v, const AlphaParam& alpha) {
  ops.checkAlpha(alpha, "foslsEnergy");
  requireDim(v, ops.fosls.dim(), "foslsEnergy");
  return std::max(0.0, v.dot(applyFoslsMatrix(ops.fosls, v, alpha)));
}

LossValue foslsLossAndGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, bool with_grad) {
  ops.checkAlpha(alpha, "foslsLoss");
  const FoslsOperators& fos = ops.fosls;
  requireDim(w, fos.dim(), "foslsLoss");
  const Vector sw = applyFoslsMatrix(fos, w, alpha);
  const double quad = w.dot(sw);
  const double lin = w.dot(fos.rhs);
  double value = quad - 2.0 * lin + fos.source_norm_sq;
  if (value < 0.0) {
    // cancellation noise is relative to the terms being cancelled
    const double tol = 1e-12 * (std::abs(quad) + 2.0 * std::abs(lin) + fos.source_norm_sq);
    if (value < -tol) {
      throw NumericalError("foslsLoss: negative value " + std::to_string(value));
    }
    value = 0.0;
  }
  LossValue out;
  out.value = value;
  if (with_grad) {
    out.grad = 2.0 * (sw - fos.rhs);
  }
  return out;
}

double foslsLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha) {
  return foslsLossAndGrad(ops, w, alpha, false).value;
}

Vector foslsLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha) {
  return foslsLossAndGrad(ops, w, alpha, true).grad;
}

// ---------------------------------------------------------------------------
// DPG

namespace {

const DpgOperators& checkedDpg(const ParametricOperators& ops, const AlphaParam& alpha, double s) {
  ops.checkAlpha(alpha, "dpgLoss");
  requireS(s, "dpgLoss");
  return ops.dpg;
}

} // namespace

DpgLossContext::DpgLossContext(const ParametricOperators& ops, const AlphaParam& alpha, double s)
    : ops_(&ops), factors_(checkedDpg(ops, alpha, s), alpha, s) {}

LossValue DpgLossContext::evaluate(const Vector& w, bool with_grad) const {
  const DpgOperators& dpg = ops_->dpg;
  requireDim(w, dpg.dim(), "dpgLoss");
  const int ne = dpg.numElements();
  const AlphaParam& alpha = factors_.alpha();
  Eigen::Matrix<double, kTestDofsPerElement, Eigen::Dynamic> res(kTestDofsPerElement, ne);
  for (int k = 0; k < ne; ++k) {
    res.col(k) = dpg.blocks[k].load - dpg.elementMatrix(k, alpha) * gatherLocal(dpg.blocks[k], w);
  }
  Eigen::Matrix<double, kTestDofsPerElement, Eigen::Dynamic> eps = res;
  factors_.solveAll(eps);

  LossValue out;
  out.value = res.cwiseProduct(eps).sum();
  if (with_grad) {
    out.grad = Vector::Zero(dpg.dim());
    for (int k = 0; k < ne; ++k) {
      const DpgElementBlock& blk = dpg.blocks[k];
      const Vector9 g = -2.0 * (dpg.elementMatrix(k, alpha).transpose() * eps.col(k));
      for (int j = 0; j < 9; ++j) {
        if (blk.dofs[j] >= 0) {
          out.grad(blk.dofs[j]) += g(j);
        }
      }
    }
  }
  return out;
}

double DpgLossContext::loss(const Vector& w) const {
  return evaluate(w, false).value;
}

Vector DpgLossContext::grad(const Vector& w) const {
  return evaluate(w, true).grad;
}

double dpgLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s) {
  return DpgLossContext(ops, alpha, s).loss(w);
}

Vector dpgLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s) {
  return DpgLossContext(ops, alpha, s).grad(w);
}

double scaledDpgLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s) {
  return dpgLoss(ops, w, alpha, s) / (s * s);
}

Vector scaledDpgLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s) {
  return dpgLossGrad(ops, w, alpha, s) / (s * s);
}

double twoParamCombination(double loss_s1, double loss_s2, double s1, double s2) {
  requireOrdered(s1, s2, "twoParamLoss");
  return (s2 * s2 * loss_s1 - s1 * s1 * loss_s2) / (s2 * s2 - s1 * s1);
}

double twoParamLoss(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1, double s2) {
  requireOrdered(s1, s2, "twoParamLoss");
  return twoParamCombination(dpgLoss(ops, w, alpha, s1), dpgLoss(ops, w, alpha, s2), s1, s2);
}

Vector twoParamLossGrad(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1,
                        double s2) {
  return evaluateLoss(ops, LossKind::dpgTwoParam(s1, s2), alpha, w, true).grad;
}

LossValue evaluateLoss(const ParametricOperators& ops, const LossKind& kind, const AlphaParam& alpha, const Vector& w,
                       bool with_grad, std::optional<double> s_sample) {
  kind.validate();
  const double s = s_sample.value_or(kind.s);
  switch (kind.tag) {
  case LossKind::Tag::Fosls:
    return foslsLossAndGrad(ops, w, alpha, with_grad);
  case LossKind::Tag::Dpg:
    return DpgLossContext(ops, alpha, s).evaluate(w, with_grad);
  case LossKind::Tag::DpgScaled: {
    LossValue out = DpgLossContext(ops, alpha, s).evaluate(w, with_grad);
    const double scale = 1.0 / (s * s);
    out.value *= scale;
    if (with_grad) {
      out.grad *= scale;
    }
    return out;
  }
  case LossKind::Tag::DpgTwoParam: {
    const LossValue l1 = DpgLossContext(ops, alpha, kind.s1).evaluate(w, with_grad);
    const LossValue l2 = DpgLossContext(ops, alpha, kind.s2).evaluate(w, with_grad);
    const double a = kind.s2 * kind.s2;
    const double b = kind.s1 * kind.s1;
    LossValue out;
    out.value = (a * l1.value - b * l2.value) / (a - b);
    if (with_grad) {
      out.grad = (a * l1.grad - b * l2.grad) / (a - b);
    }
    return out;
  }
  }
  throw InputError("evaluateLoss: unknown loss kind");
}

int trialDim(const ParametricOperators& ops, const LossKind& kind) {
  return kind.usesDpgSpace() ? ops.dpg.dim() : ops.fosls.dim();
}

// ---------------------------------------------------------------------------
// Constants

double alphaConstant(const AlphaParam& alpha, double c0) {
  if (!(c0 > 0.0)) {
    throw InputError("robustnessConstants: c0 must be positive");
  }
  alpha.requirePositive("robustnessConstants");
  return c0 * (1.0 + std::max(1.0, alpha.max()) / alpha.min());
}

double kConstant(double c_alpha, double s) {
  requireS(s, "kConstant");
  if (!(c_alpha > 0.0)) {
    throw InputError("kConstant: c_alpha must be positive");
  }
  const double t = c_alpha * c_alpha / (s * s);
  return 0.5 * (t + std::sqrt(t * t + 4.0 * t));
}

RobustnessConstants robustnessConstants(const AlphaParam& alpha, double s, double c0) {
  RobustnessConstants rc;
  rc.c0 = c0;
  rc.c_alpha = alphaConstant(alpha, c0);
  rc.k_s_alpha = kConstant(rc.c_alpha, s);
  return rc;
}

ErrorBounds errorBoundsFromLosses(double loss_s1, double loss_s2, double s1, double s2, double k1, double k2) {
  requireOrdered(s1, s2, "interiorErrorBounds");
  const double a = s2 * s2 * loss_s1;
  const double b = s1 * s1 * loss_s2;
  const double denom = s2 * s2 - s1 * s1;
  ErrorBounds eb;
  eb.lower = (a / (1.0 + k1) - (1.0 + k2) * b) / denom;
  eb.upper = ((1.0 + k1) * a - b / (1.0 + k2)) / denom;
  return eb;
}

ErrorBounds interiorErrorBounds(const ParametricOperators& ops, const Vector& w, const AlphaParam& alpha, double s1,
                                double s2, double c0) {
  requireOrdered(s1, s2, "interiorErrorBounds");
  const double c = alphaConstant(alpha, c0);
  return errorBoundsFromLosses(dpgLoss(ops, w, alpha, s1), dpgLoss(ops, w, alpha, s2), s1, s2, kConstant(c, s1),
                               kConstant(c, s2));
}

} // namespace vcl
