#pragma once

#include "vcl/experiment.hpp"
#include "vcl/measures.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vcl {

/// Library version string, e.g. "0.1.0".
std::string libraryVersion();

/// Shortest round-trip decimal form (17 significant digits).
std::string formatNumber(double x);

/// Column-named table of text cells, written as plain CSV.
class CsvTable {
public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> columns);

  /// Throws InputError when the cell count differs from the column count.
  void addRow(std::vector<std::string> cells);

  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }
  /// Index of a column; throws InputError when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  /// A column parsed as numbers.
  [[nodiscard]] std::vector<double> numbers(std::string_view name) const;

  void write(std::ostream& out) const;
  [[nodiscard]] std::string str() const;
  static CsvTable read(std::istream& in);

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// One trained network of an experiment.
struct TrainedModel {
  /// File-name friendly identifier, e.g. "fosls" or "cell1_dpg".
  std::string name;
  LossKind kind;
  /// Name of the sample set it was trained on.
  std::string sample_set;
  std::uint64_t train_seed = 0;
  TrainResult result;
};

/// Everything an experiment produces, before it is written to disk.
struct ExperimentReport {
  ExperimentTag experiment = ExperimentTag::TrainOnly;
  /// One row per evaluated test sample (or field, for the field export).
  CsvTable records;
  /// Columns metric,value. Every entry is a mean, count or final cumulative
  /// maximum of a records column.
  CsvTable aggregates{{"metric", "value"}};
  /// Further CSV outputs by file name (curves.csv, table.csv, field_*.csv ...).
  std::vector<std::pair<std::string, CsvTable>> tables;
  /// Named parameter sets, written as samples_<name>.csv.
  std::vector<std::pair<std::string, std::vector<ParamSample>>> sample_sets;
  std::vector<TrainedModel> models;
  /// Declarative plot description (JSON), empty when the experiment has none.
  std::string plot_manifest;
  /// Non-failing notes, e.g. measured values far from the published ones.
  std::vector<std::string> advisories;
  /// Test samples dropped because a Galerkin solve failed.
  int skipped = 0;

  /// Value of an aggregate; throws InputError when absent.
  [[nodiscard]] double metric(std::string_view name) const;
  void addMetric(const std::string& name, double value);
};

/// Cumulative-max ratio study over already trained networks.
struct RatioCurves {
  std::vector<double> s_values;
  /// Indices into the test set that were evaluated.
  std::vector<int> kept;
  std::vector<FoslsRatios> fosls;
  /// dpg[i][j]: s_values[i], kept sample j.
  std::vector<std::vector<DpgRatios>> dpg;
  int skipped = 0;
};

/// Throws NumericalError if rho-hat exceeds kRhoHatBound at any sample.
/// `dpg_nets[i]` predicts in the DPG space and is compared with DPG(s_values[i]).
RatioCurves ratioCurves(const ParametricOperators& ops, const NetParams& fosls_net,
                        std::span<const NetParams> dpg_nets, std::span<const double> s_values,
                        std::span<const ParamSample> test, const SolverOptions& solver = {}, int threads = 0);

/// The individual experiments. Each trains its networks from scratch.
ExperimentReport trainOnlyExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport tablesExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport ratioCurvesExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport levelSetExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport fieldsExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport l2CompareExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);

/// Dispatches on cfg.experiment; builds the operators when none are given.
ExperimentReport runExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops);
ExperimentReport runExperiment(const ExperimentConfig& cfg);

/// Scalar field on the export grid as x,y,value rows.
CsvTable fieldTable(const GridField& field);

/// Hex SHA-1 of "blob <size>\0<content>", the hash git gives a file.
std::string gitBlobHash(std::string_view content);

struct WrittenRun {
  std::filesystem::path dir;
  /// Files written, relative to dir, manifest last.
  std::vector<std::string> files;
  /// Hash over the config and every input sample set.
  std::string input_hash;
};

/// Writes records.csv, aggregates.csv, the extra tables, sample sets,
/// checkpoints and training histories, plots.json and manifest.json.
WrittenRun writeRun(const ExperimentConfig& cfg, const ExperimentReport& report, const std::filesystem::path& dir);

} // namespace vcl
