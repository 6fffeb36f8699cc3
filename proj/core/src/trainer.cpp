#include "vcl/trainer.hpp"

#include "vcl/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace vcl {

std::string optimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind parseOptimizer(const std::string& text) {
  if (text == "adam") {
    return OptimizerKind::Adam;
  }
  if (text == "sgd") {
    return OptimizerKind::Sgd;
  }
  throw InputError("unknown optimizer '" + text + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) {
    throw InputError("train: epochs must be nonnegative");
  }
  if (batch_size <= 0 || num_samples <= 0) {
    throw InputError("train: batch size and sample count must be positive");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("train: learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw InputError("train: Adam constants out of range");
  }
}

namespace {

std::string describe(const ParamSample& p) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha = (";
  for (int i = 0; i < p.alpha.size(); ++i) {
    os << (i ? ", " : "") << p.alpha[i];
  }
  os << ")";
  if (p.s) {
    os << ", s = " << *p.s;
  }
  return os.str();
}

Matrix inputsOf(std::span<const ParamSample> samples, std::span<const int> order) {
  const int m = samples[order.front()].alpha.size() + (samples[order.front()].s ? 1 : 0);
  Matrix in(m, static_cast<Eigen::Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j) {
    in.col(static_cast<Eigen::Index>(j)) = netInput(samples[order[j]].alpha, samples[order[j]].s);
  }
  return in;
}

void requireCompatible(const NetParams& params, std::span<const ParamSample> samples, const LossKind& kind,
                       const ParametricOperators& ops) {
  kind.validate();
  if (params.config().m_h != trialDim(ops, kind)) {
    throw InputError("network output dim " + std::to_string(params.config().m_h) + " does not match the " +
                     kind.name() + " trial space (" + std::to_string(trialDim(ops, kind)) + ")");
  }
  for (const ParamSample& p : samples) {
    const int m = p.alpha.size() + (p.s ? 1 : 0);
    if (m != params.config().m_alpha) {
      throw InputError("sample has " + std::to_string(m) + " inputs, network expects " +
                       std::to_string(params.config().m_alpha));
    }
  }
}

LossValue checkedLoss(const ParametricOperators& ops, const LossKind& kind, const ParamSample& p, const Vector& w,
                      bool with_grad, long step) {
  LossValue v = evaluateLoss(ops, kind, p.alpha, w, with_grad, p.s);
  if (!std::isfinite(v.value) || (with_grad && !v.grad.allFinite())) {
    throw NumericalError("non-finite " + kind.name() + " loss at step " + std::to_string(step) + " for " +
                         describe(p));
  }
  return v;
}

constexpr int kEvalChunk = 256;

} // namespace

Matrix predict(const NetParams& params, std::span<const ParamSample> samples) {
  Matrix out(params.config().m_h, static_cast<Eigen::Index>(samples.size()));
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t len = std::min<std::size_t>(kEvalChunk, samples.size() - start);
    const std::span<const int> chunk(order.data() + start, len);
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
        forward(params, inputsOf(samples, chunk));
  }
  return out;
}

std::vector<double> sampleLosses(const NetParams& params, std::span<const ParamSample> samples, const LossKind& kind,
                                 const ParametricOperators& ops) {
  requireCompatible(params, samples, kind, ops);
  const Matrix w = predict(params, samples);
  std::vector<double> out(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    out[j] = checkedLoss(ops, kind, samples[j], w.col(static_cast<Eigen::Index>(j)), false, 0).value;
  }
  return out;
}

double empiricalRisk(const NetParams& params, std::span<const ParamSample> samples, const LossKind& kind,
                     const ParametricOperators& ops) {
  if (samples.empty()) {
    throw InputError("empiricalRisk: no samples");
  }
  const std::vector<double> losses = sampleLosses(params, samples, kind, ops);
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

TrainResult train(NetParams init, const TrainConfig& cfg, std::span<const ParamSample> samples, const LossKind& kind,
                  const ParametricOperators& ops, const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) {
    throw InputError("train: no training samples");
  }
  requireCompatible(init, samples, kind, ops);

  TrainResult result;
  result.params = std::move(init);
  NetParams& theta = result.params;
  result.history.push_back(empiricalRisk(theta, samples, kind, ops));

  const Eigen::Index dim = theta.flat().size();
  Vector m1 = Vector::Zero(dim);
  Vector m2 = Vector::Zero(dim);
  const int count = static_cast<int>(samples.size());
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  const std::uint64_t shuffle_seed = deriveSeed(cfg.seed, 1);
  ForwardCache cache;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(deriveSeed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < count; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, count - start);
      const std::span<const int> batch(order.data() + start, len);
      ++result.steps;

      const Matrix w = forward(theta, inputsOf(samples, batch), &cache);
      Matrix d_out(w.rows(), len);
      for (int j = 0; j < len; ++j) {
        const LossValue v = checkedLoss(ops, kind, samples[batch[j]], w.col(j), true, result.steps);
        epoch_loss += v.value;
        // batch gradient is the mean of the per-sample gradients
        d_out.col(j) = v.grad / len;
      }
      const NetParams g = backward(theta, cache, d_out);

      if (cfg.optimizer == OptimizerKind::Sgd) {
        theta.flat() -= cfg.learning_rate * g.flat();
      } else {
        const double t = static_cast<double>(result.steps);
        m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g.flat();
        m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.flat().cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        theta.flat().array() -=
            cfg.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.epsilon);
      }
    }
    epoch_loss /= count;
    result.history.push_back(epoch_loss);
    if (cfg.log_every > 0 && epoch % cfg.log_every == 0) {
      spdlog::info("{} epoch {}/{}: mean loss {:.6e}", kind.name(), epoch, cfg.epochs, epoch_loss);
    }
    if (on_epoch) {
      on_epoch(epoch, epoch_loss);
    }
  }
  result.final_risk = cfg.epochs == 0 ? result.history.front() : empiricalRisk(theta, samples, kind, ops);
  return result;
}

TrainResult train(const NetConfig& net, const TrainConfig& cfg, std::span<const ParamSample> samples,
                  const LossKind& kind, const ParametricOperators& ops, const EpochCallback& on_epoch) {
  return train(initParams(net, deriveSeed(cfg.seed, 0)), cfg, samples, kind, ops, on_epoch);
}

NetConfig netConfigFor(NetConfig base, const ParametricOperators& ops, const LossKind& kind, bool with_s) {
  base.m_alpha = ops.num_subdomains + (with_s ? 1 : 0);
  base.m_h = trialDim(ops, kind);
  base.validate();
  return base;
}

} // namespace vcl
