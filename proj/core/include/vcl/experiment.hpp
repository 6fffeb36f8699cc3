#pragma once

#include "vcl/losses.hpp"
#include "vcl/network.hpp"
#include "vcl/sampling.hpp"
#include "vcl/trainer.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vcl {

enum class ExperimentTag { Tables, RatioCurves, LevelSet, Fields, L2Compare, TrainOnly };

std::string experimentName(ExperimentTag tag);
/// Accepts tables, ratio_curves, level_set, fields, l2_compare, train_only.
ExperimentTag parseExperiment(const std::string& text);

enum class TableVariant { VaryMean, VaryStd };

/// One column of the published error tables.
struct TableCell {
  std::string label;
  std::vector<double> mean;
  double sigma = 0.1;
  /// Published mean squared errors, kept as reference metadata:
  /// DPG u-hat, FOSLS u, DPG q-hat, FOSLS q.
  std::array<double, 4> reference{};
};

std::vector<TableCell> tableCells(TableVariant variant);

struct TableSettings {
  TableVariant variant = TableVariant::VaryMean;
  /// Indices into tableCells(variant); empty runs every cell.
  std::vector<int> cells;
};

struct RatioSettings {
  std::vector<double> s_values{1.0, 10.0, 100.0};
  /// Train the DPG nets on s^-2 L_s instead of L_s. Both have the same
  /// minimiser; the ratios are always evaluated with the unscaled L_s.
  bool scaled_training = false;
};

/// Bins of the (max alpha, s) level-set grid: log-spaced in max alpha
/// between the smallest and largest sampled value, uniform in s over the
/// training range.
struct LevelSetSettings {
  int alpha_bins = 12;
  int s_bins = 11;
  /// Thresholds of the ordering check: cells with max alpha >= high_alpha
  /// are compared between s >= high_s and s <= low_s.
  double high_alpha = 10.0;
  double high_s = 50.0;
  double low_s = 5.0;
};

struct FieldSettings {
  /// Grid intervals per side; the export has (resolution + 1)^2 points.
  int resolution = 50;
  std::vector<AlphaParam> alphas{AlphaParam{0.0904, 0.7255, 0.9192, 0.1948}, AlphaParam{0.43, 1.0, 1.0, 0.43}};
};

struct ExperimentConfig {
  ExperimentTag experiment = ExperimentTag::TrainOnly;
  /// Base seed; the sample, test and training seeds are derived from it.
  std::uint64_t seed = 0;
  int mesh_n = 10;
  ParamDistribution train_distribution;
  ParamDistribution test_distribution;
  LossKind loss = LossKind::fosls();
  NetConfig net;
  TrainConfig train;
  int test_count = 10000;
  double c0 = 1.0;
  std::string output_dir = "vcl-run";
  SolverOptions solver;
  bool save_checkpoints = true;
  /// Worker threads for test-sample evaluation; 0 uses every core.
  int threads = 0;

  TableSettings tables;
  RatioSettings ratio_curves;
  LevelSetSettings level_set;
  FieldSettings fields;

  /// Throws InputError on inconsistent settings.
  void validate() const;
  /// Overwrites the distribution and training seeds from `seed`. The test
  /// stream never coincides with the training stream.
  void deriveSeeds();
};

/// Settings of the published runs for an experiment: mesh h = 0.1, M = 1024,
/// 5000 epochs of batch 32, plus the per-experiment distributions, losses
/// and learning rates.
ExperimentConfig defaultConfig(ExperimentTag tag);

/// Parses a JSON config. Keys mirror the ExperimentConfig field names and
/// unknown keys are rejected at every level. Missing keys take the values
/// of defaultConfig(experiment). A run manifest is accepted too; its
/// embedded config is used. `tag` supplies the experiment when the JSON does
/// not name one and must agree with it when it does.
ExperimentConfig parseConfig(std::string_view json_text, std::optional<ExperimentTag> tag = std::nullopt);
ExperimentConfig loadConfig(const std::filesystem::path& path, std::optional<ExperimentTag> tag = std::nullopt);

/// Canonical JSON of every setting (sorted keys, two-space indent).
/// parseConfig(configToJson(c)) reproduces c.
std::string configToJson(const ExperimentConfig& config);

} // namespace vcl
