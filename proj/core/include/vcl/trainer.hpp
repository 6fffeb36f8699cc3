#pragma once

#include "vcl/losses.hpp"
#include "vcl/network.hpp"
#include "vcl/sampling.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vcl {

enum class OptimizerKind { Adam, Sgd };

std::string optimizerName(OptimizerKind kind);
OptimizerKind parseOptimizer(const std::string& text);

struct TrainConfig {
  int epochs = 5000;
  int batch_size = 32;
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  /// Training-set size M.
  int num_samples = 1024;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Log the epoch loss every this many epochs; 0 disables logging.
  int log_every = 0;

  void validate() const;
};

struct TrainResult {
  NetParams params;
  /// history[0] is the empirical risk of the initial parameters; entry e > 0
  /// is the mean minibatch loss seen during epoch e.
  std::vector<double> history;
  /// Empirical risk of the returned parameters over the whole training set.
  double final_risk = 0.0;
  long steps = 0;
};

/// Called after every epoch with (epoch, mean minibatch loss).
using EpochCallback = std::function<void(int, double)>;

/// Per-sample loss values of the network predictions.
std::vector<double> sampleLosses(const NetParams& params, std::span<const ParamSample> samples, const LossKind& kind,
                                 const ParametricOperators& ops);
/// (1/M) sum of the fiber losses.
double empiricalRisk(const NetParams& params, std::span<const ParamSample> samples, const LossKind& kind,
                     const ParametricOperators& ops);

/// Network predictions, one column per sample.
Matrix predict(const NetParams& params, std::span<const ParamSample> samples);

/// Minibatch minimisation of the empirical risk starting from `init`.
TrainResult train(NetParams init, const TrainConfig& cfg, std::span<const ParamSample> samples, const LossKind& kind,
                  const ParametricOperators& ops, const EpochCallback& on_epoch = {});
/// Same, from initParams(net, seed derived from cfg.seed).
TrainResult train(const NetConfig& net, const TrainConfig& cfg, std::span<const ParamSample> samples,
                  const LossKind& kind, const ParametricOperators& ops, const EpochCallback& on_epoch = {});

/// Network shape for a loss kind: output dim from the trial space, one
/// extra input when the samples carry s.
NetConfig netConfigFor(NetConfig base, const ParametricOperators& ops, const LossKind& kind, bool with_s);

} // namespace vcl
