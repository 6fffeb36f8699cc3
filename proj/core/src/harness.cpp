#include "vcl/harness.hpp"

#include "vcl/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#ifndef VCL_VERSION
#define VCL_VERSION "0.0.0"
#endif

namespace vcl {

using nlohmann::json;

std::string libraryVersion() {
  return VCL_VERSION;
}

std::string formatNumber(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// CsvTable

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::addRow(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw InputError("csv row has " + std::to_string(cells.size()) + " cells, table has " +
                     std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(cells));
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) {
    throw InputError("csv has no column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> CsvTable::numbers(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    char* end = nullptr;
    const double v = std::strtod(row[c].c_str(), &end);
    if (end == row[c].c_str() || *end != '\0') {
      throw InputError("csv column '" + std::string(name) + "' holds non-numeric cell '" + row[c] + "'");
    }
    out.push_back(v);
  }
  return out;
}

namespace {

void writeLine(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out << (i ? "," : "") << cells[i];
  }
  out << '\n';
}

std::vector<std::string> splitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

} // namespace

void CsvTable::write(std::ostream& out) const {
  writeLine(out, columns_);
  for (const auto& row : rows_) {
    writeLine(out, row);
  }
}

std::string CsvTable::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

CsvTable CsvTable::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("csv is empty");
  }
  CsvTable t(splitLine(line));
  while (std::getline(in, line)) {
    if (!line.empty()) {
      t.addRow(splitLine(line));
    }
  }
  return t;
}

double ExperimentReport::metric(std::string_view name) const {
  for (const auto& row : aggregates.rows()) {
    if (row[0] == name) {
      return std::strtod(row[1].c_str(), nullptr);
    }
  }
  throw InputError("report has no aggregate '" + std::string(name) + "'");
}

void ExperimentReport::addMetric(const std::string& name, double value) {
  aggregates.addRow({name, formatNumber(value)});
}

// ---------------------------------------------------------------------------
// Shared pieces of the experiments

namespace {

std::string sLabel(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

std::vector<std::string> sampleColumns(int k, bool with_s) {
  std::vector<std::string> c;
  for (int i = 1; i <= k; ++i) {
    c.push_back("alpha" + std::to_string(i));
  }
  if (with_s) {
    c.emplace_back("s");
  }
  return c;
}

void appendSample(std::vector<std::string>& row, const ParamSample& p) {
  for (double a : p.alpha.values()) {
    row.push_back(formatNumber(a));
  }
  if (p.s) {
    row.push_back(formatNumber(*p.s));
  }
}

double mean(std::span<const double> v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double finalCmax(std::span<const double> v) {
  return v.empty() ? std::nan("") : cumulativeMax(v).back();
}

TrainedModel trainModel(const ExperimentConfig& cfg, const ParametricOperators& ops, std::string name,
                        const LossKind& kind, std::string sample_set, std::span<const ParamSample> samples,
                        std::uint64_t seed) {
  TrainedModel m;
  m.name = std::move(name);
  m.kind = kind;
  m.sample_set = std::move(sample_set);
  m.train_seed = seed;
  TrainConfig t = cfg.train;
  t.seed = seed;
  const bool with_s = samples.front().s.has_value();
  const NetConfig net = netConfigFor(cfg.net, ops, kind, with_s);
  spdlog::info("training {} ({} loss, {} samples, {} epochs, {} parameters)", m.name, kind.name(), samples.size(),
               t.epochs, net.numParams());
  m.result = train(net, t, samples, kind, ops);
  spdlog::info("{}: risk {:.4e} -> {:.4e}", m.name, m.result.history.front(), m.result.final_risk);
  return m;
}

// Runs fn on every index; indices whose Galerkin solve fails are dropped
// and counted, keeping the survivors in index order.
template <class Row, class Fn>
std::vector<std::pair<int, Row>> evaluateAll(int count, int threads, Fn fn, int& skipped) {
  std::vector<std::optional<Row>> slots(static_cast<std::size_t>(count));
  parallelFor(
      count,
      [&](int i) {
        try {
          slots[i] = fn(i);
        } catch (const NumericalError& e) {
          spdlog::warn("test sample {} skipped: {}", i, e.what());
        }
      },
      threads);
  std::vector<std::pair<int, Row>> out;
  for (int i = 0; i < count; ++i) {
    if (slots[i]) {
      out.emplace_back(i, std::move(*slots[i]));
    } else {
      ++skipped;
    }
  }
  return out;
}

json plotSpec(const std::string& file, const std::string& title, const std::string& x, const std::string& x_label,
              const std::vector<std::string>& series, const std::string& y_label, bool log_x, bool log_y) {
  return {{"file", file},     {"title", title},     {"x", x},         {"x_label", x_label},
          {"series", series}, {"y_label", y_label}, {"log_x", log_x}, {"log_y", log_y}};
}

std::string plotsJson(const json& plots) {
  return json{{"format", "vcl-plots"}, {"plots", plots}}.dump(2);
}

CsvTable cmaxCurves(const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::vector<std::string> cols{"m"};
  std::vector<std::vector<double>> curves;
  for (const auto& [name, values] : series) {
    cols.push_back("cmax_" + name);
    curves.push_back(cumulativeMax(values));
  }
  CsvTable t(cols);
  const std::size_t n = series.empty() ? 0 : series.front().second.size();
  for (std::size_t m = 0; m < n; ++m) {
    std::vector<std::string> row{std::to_string(m + 1)};
    for (const auto& c : curves) {
      row.push_back(formatNumber(c[m]));
    }
    t.addRow(std::move(row));
  }
  return t;
}

std::vector<std::string> seriesNames(const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::vector<std::string> names;
  for (const auto& s : series) {
    names.push_back("cmax_" + s.first);
  }
  return names;
}

void requireSubdomains(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  if (static_cast<int>(cfg.train_distribution.mean.size()) != ops.num_subdomains) {
    throw InputError("config has " + std::to_string(cfg.train_distribution.mean.size()) +
                     " alpha components but the mesh has " + std::to_string(ops.num_subdomains) + " subdomains");
  }
}

} // namespace

// ---------------------------------------------------------------------------
// Ratio curves

RatioCurves ratioCurves(const ParametricOperators& ops, const NetParams& fosls_net,
                        std::span<const NetParams> dpg_nets, std::span<const double> s_values,
                        std::span<const ParamSample> test, const SolverOptions& solver, int threads) {
  if (dpg_nets.size() != s_values.size()) {
    throw InputError("ratioCurves: one DPG network per s value is required");
  }
  const Matrix pred_f = predict(fosls_net, test);
  std::vector<Matrix> pred_d;
  for (const NetParams& p : dpg_nets) {
    pred_d.push_back(predict(p, test));
  }
  if (pred_f.rows() != ops.fosls.dim()) {
    throw InputError("ratioCurves: the FOSLS network does not predict FOSLS coefficients");
  }
  for (const Matrix& m : pred_d) {
    if (m.rows() != ops.dpg.dim()) {
      throw InputError("ratioCurves: a DPG network does not predict DPG coefficients");
    }
  }

  struct Row {
    FoslsRatios fos;
    std::vector<DpgRatios> dpg;
  };
  RatioCurves rc;
  rc.s_values.assign(s_values.begin(), s_values.end());
  const auto rows = evaluateAll<Row>(
      static_cast<int>(test.size()), threads,
      [&](int i) {
        const AlphaParam& a = test[i].alpha;
        Row r;
        r.fos = foslsRatios(ops, pred_f.col(i), solveFOSLS(ops, a, solver).coeffs, a);
        for (std::size_t k = 0; k < s_values.size(); ++k) {
          const DpgSolution sol = solveDPG(ops, a, s_values[k], solver);
          r.dpg.push_back(dpgRatios(ops, pred_d[k].col(i), sol, a, s_values[k]));
        }
        return r;
      },
      rc.skipped);

  rc.dpg.resize(s_values.size());
  for (const auto& [i, r] : rows) {
    if (!(r.fos.rho_hat <= kRhoHatBound)) {
      throw NumericalError("rho-hat = " + formatNumber(r.fos.rho_hat) + " exceeds 2 at test sample " +
                           std::to_string(i));
    }
    rc.kept.push_back(i);
    rc.fosls.push_back(r.fos);
    for (std::size_t k = 0; k < s_values.size(); ++k) {
      rc.dpg[k].push_back(r.dpg[k]);
    }
  }
  return rc;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentReport trainOnlyExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  ExperimentReport rep;
  rep.experiment = ExperimentTag::TrainOnly;
  const bool with_s = cfg.train_distribution.s_range.has_value();
  rep.sample_sets.emplace_back("train", sampleParams(cfg.train_distribution, cfg.train.num_samples));
  rep.sample_sets.emplace_back("test", sampleParams(cfg.test_distribution, cfg.test_count));
  const auto& train_set = rep.sample_sets[0].second;
  const auto& test = rep.sample_sets[1].second;

  const LossKind kind = cfg.loss;
  rep.models.push_back(trainModel(cfg, ops, kind.name(), kind, "train", train_set, cfg.train.seed));
  const Matrix pred = predict(rep.models[0].result.params, test);

  struct Row {
    double loss;
    ErrorMeasures em;
  };
  const auto rows = evaluateAll<Row>(
      cfg.test_count, cfg.threads,
      [&](int i) {
        const ParamSample& p = test[i];
        const Vector w = pred.col(i);
        Row r;
        r.loss = evaluateLoss(ops, kind, p.alpha, w, false, p.s).value;
        Vector galerkin;
        if (kind.usesDpgSpace()) {
          // the two-parameter loss has no s of its own; compare with DPG(s = 1)
          const double s = kind.tag == LossKind::Tag::DpgTwoParam ? 1.0 : p.s.value_or(kind.s);
          galerkin = solveDPG(ops, p.alpha, s, cfg.solver).coeffs;
        } else {
          galerkin = solveFOSLS(ops, p.alpha, cfg.solver).coeffs;
        }
        r.em = errorMeasures(ops, methodOf(kind), w, galerkin, p.alpha);
        return r;
      },
      rep.skipped);

  std::vector<std::string> cols{"sample"};
  for (auto& c : sampleColumns(ops.num_subdomains, with_s)) {
    cols.push_back(c);
  }
  for (const char* c : {"loss", "e0", "e_hat"}) {
    cols.emplace_back(c);
  }
  rep.records = CsvTable(cols);
  std::vector<double> loss, e0, e_hat;
  for (const auto& [i, r] : rows) {
    std::vector<std::string> row{std::to_string(i)};
    appendSample(row, test[i]);
    row.push_back(formatNumber(r.loss));
    row.push_back(formatNumber(r.em.e0));
    row.push_back(formatNumber(r.em.e_hat));
    rep.records.addRow(std::move(row));
    loss.push_back(r.loss);
    e0.push_back(r.em.e0);
    e_hat.push_back(r.em.e_hat);
  }
  const TrainResult& tr = rep.models[0].result;
  rep.addMetric("initial_risk", tr.history.front());
  rep.addMetric("final_risk", tr.final_risk);
  rep.addMetric("evaluated", static_cast<double>(rows.size()));
  rep.addMetric("skipped", rep.skipped);
  rep.addMetric("mean_loss", mean(loss));
  rep.addMetric("mean_e0", mean(e0));
  rep.addMetric("mean_e_hat", mean(e_hat));
  rep.addMetric("final_cmax_e0", finalCmax(e0));
  rep.addMetric("final_cmax_e_hat", finalCmax(e_hat));
  return rep;
}

ExperimentReport tablesExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  ExperimentReport rep;
  rep.experiment = ExperimentTag::Tables;
  const std::vector<TableCell> cells = tableCells(cfg.tables.variant);
  std::vector<int> chosen = cfg.tables.cells;
  if (chosen.empty()) {
    chosen.resize(cells.size());
    std::iota(chosen.begin(), chosen.end(), 0);
  }

  std::vector<std::string> cols{"cell", "sample"};
  for (auto& c : sampleColumns(ops.num_subdomains, false)) {
    cols.push_back(c);
  }
  const std::vector<std::string> quantities{"fosls_u", "fosls_q", "dpg_u", "dpg_q", "dpg_uhat", "dpg_qhat"};
  for (const auto& q : quantities) {
    cols.push_back(q);
  }
  rep.records = CsvTable(cols);
  CsvTable table({"cell", "label", "quantity", "measured", "reference", "log10_ratio", "advisory"});

  for (int ci : chosen) {
    const TableCell& cell = cells[ci];
    const std::string tag = "cell" + std::to_string(ci);
    ParamDistribution train_d = cfg.train_distribution;
    train_d.mean = cell.mean;
    train_d.sigma = cell.sigma;
    train_d.s_range.reset();
    train_d.seed = deriveSeed(cfg.train_distribution.seed, static_cast<std::uint64_t>(ci));
    ParamDistribution test_d = train_d;
    test_d.seed = deriveSeed(cfg.test_distribution.seed, static_cast<std::uint64_t>(ci));

    rep.sample_sets.emplace_back("train_" + tag, sampleParams(train_d, cfg.train.num_samples));
    rep.sample_sets.emplace_back("test_" + tag, sampleParams(test_d, cfg.test_count));
    const auto& train_set = rep.sample_sets[rep.sample_sets.size() - 2].second;
    const auto& test = rep.sample_sets.back().second;

    const auto seed = static_cast<std::uint64_t>(2 * ci);
    rep.models.push_back(trainModel(cfg, ops, tag + "_fosls", LossKind::fosls(), "train_" + tag, train_set,
                                    deriveSeed(cfg.train.seed, seed)));
    rep.models.push_back(trainModel(cfg, ops, tag + "_dpg", LossKind::dpg(1.0), "train_" + tag, train_set,
                                    deriveSeed(cfg.train.seed, seed + 1)));
    const Matrix pred_f = predict(rep.models[rep.models.size() - 2].result.params, test);
    const Matrix pred_d = predict(rep.models.back().result.params, test);

    using Row = std::array<double, 6>;
    int skipped = 0;
    const auto rows = evaluateAll<Row>(
        cfg.test_count, cfg.threads,
        [&](int i) {
          const AlphaParam& a = test[i].alpha;
          const ErrorMeasures f =
              errorMeasures(ops, Method::Fosls, pred_f.col(i), solveFOSLS(ops, a, cfg.solver).coeffs, a);
          const ErrorMeasures d =
              errorMeasures(ops, Method::Dpg, pred_d.col(i), solveDPG(ops, a, 1.0, cfg.solver).coeffs, a);
          return Row{f.interior.u, f.interior.q, d.interior.u, d.interior.q, d.conforming.u, d.conforming.q};
        },
        skipped);
    rep.skipped += skipped;

    std::vector<std::vector<double>> columns(quantities.size());
    for (const auto& [i, r] : rows) {
      std::vector<std::string> row{std::to_string(ci), std::to_string(i)};
      appendSample(row, test[i]);
      for (std::size_t q = 0; q < r.size(); ++q) {
        row.push_back(formatNumber(r[q]));
        columns[q].push_back(r[q]);
      }
      rep.records.addRow(std::move(row));
    }
    rep.addMetric(tag + ".evaluated", static_cast<double>(rows.size()));
    rep.addMetric(tag + ".skipped", skipped);
    std::vector<double> means;
    for (std::size_t q = 0; q < quantities.size(); ++q) {
      means.push_back(mean(columns[q]));
      rep.addMetric(tag + "." + quantities[q] + "_mean", means.back());
    }

    // published order: DPG u-hat, FOSLS u, DPG q-hat, FOSLS q
    const std::array<std::pair<const char*, double>, 4> published{{{"dpg_uhat", means[4]},
                                                                   {"fosls_u", means[0]},
                                                                   {"dpg_qhat", means[5]},
                                                                   {"fosls_q", means[1]}}};
    for (std::size_t k = 0; k < published.size(); ++k) {
      const double measured = published[k].second;
      const double reference = cell.reference[k];
      const double lr = std::log10(measured / reference);
      const bool advisory = !(std::abs(lr) <= 2.0);
      table.addRow({std::to_string(ci), cell.label, published[k].first, formatNumber(measured),
                    formatNumber(reference), formatNumber(lr), advisory ? "1" : "0"});
      if (advisory) {
        rep.advisories.push_back(cell.label + " " + published[k].first + ": measured " + formatNumber(measured) +
                                 " vs published " + formatNumber(reference));
      }
    }
  }
  rep.tables.emplace_back("table.csv", std::move(table));
  return rep;
}

ExperimentReport ratioCurvesExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  ExperimentReport rep;
  rep.experiment = ExperimentTag::RatioCurves;
  rep.sample_sets.emplace_back("train", sampleParams(cfg.train_distribution, cfg.train.num_samples));
  rep.sample_sets.emplace_back("test", sampleParams(cfg.test_distribution, cfg.test_count));
  const auto& train_set = rep.sample_sets[0].second;
  const auto& test = rep.sample_sets[1].second;

  const auto& s_values = cfg.ratio_curves.s_values;
  rep.models.push_back(trainModel(cfg, ops, "fosls", LossKind::fosls(), "train", train_set,
                                  deriveSeed(cfg.train.seed, 0)));
  std::vector<NetParams> dpg_nets;
  for (std::size_t k = 0; k < s_values.size(); ++k) {
    const double s = s_values[k];
    const LossKind kind = cfg.ratio_curves.scaled_training ? LossKind::dpgScaled(s) : LossKind::dpg(s);
    rep.models.push_back(
        trainModel(cfg, ops, "dpg_s" + sLabel(s), kind, "train", train_set, deriveSeed(cfg.train.seed, k + 1)));
    dpg_nets.push_back(rep.models.back().result.params);
  }

  const RatioCurves rc =
      ratioCurves(ops, rep.models[0].result.params, dpg_nets, s_values, test, cfg.solver, cfg.threads);
  rep.skipped = rc.skipped;

  std::vector<std::string> cols{"sample"};
  for (auto& c : sampleColumns(ops.num_subdomains, false)) {
    cols.push_back(c);
  }
  for (const char* c : {"fosls_loss", "fosls_loss_h", "fosls_e0", "fosls_e_hat", "rho_hat_fos", "rho0_fos",
                        "rho_fos"}) {
    cols.emplace_back(c);
  }
  for (double s : s_values) {
    const std::string p = "dpg_s" + sLabel(s);
    for (const char* c : {"_loss", "_loss_h", "_e0", "_e_hat"}) {
      cols.push_back(p + c);
    }
    cols.push_back("rho_" + p);
  }
  rep.records = CsvTable(cols);

  std::vector<std::pair<std::string, std::vector<double>>> series{
      {"rho_hat_fos", {}}, {"rho0_fos", {}}, {"rho_fos", {}}};
  for (double s : s_values) {
    series.emplace_back("rho_dpg_s" + sLabel(s), std::vector<double>{});
  }
  for (std::size_t j = 0; j < rc.kept.size(); ++j) {
    const int i = rc.kept[j];
    const FoslsRatios& f = rc.fosls[j];
    std::vector<std::string> row{std::to_string(i)};
    appendSample(row, test[i]);
    for (double v : {f.loss_pred, f.loss_galerkin, f.e0, f.e_hat, f.rho_hat, f.rho0, f.rho}) {
      row.push_back(formatNumber(v));
    }
    series[0].second.push_back(f.rho_hat);
    series[1].second.push_back(f.rho0);
    series[2].second.push_back(f.rho);
    for (std::size_t k = 0; k < s_values.size(); ++k) {
      const DpgRatios& d = rc.dpg[k][j];
      for (double v : {d.loss_pred, d.loss_galerkin, d.e0, d.e_hat, d.rho}) {
        row.push_back(formatNumber(v));
      }
      series[3 + k].second.push_back(d.rho);
    }
    rep.records.addRow(std::move(row));
  }

  rep.addMetric("evaluated", static_cast<double>(rc.kept.size()));
  rep.addMetric("skipped", rc.skipped);
  for (const auto& [name, values] : series) {
    rep.addMetric("mean_" + name, mean(values));
    rep.addMetric("final_cmax_" + name, finalCmax(values));
  }
  rep.tables.emplace_back("curves.csv", cmaxCurves(series));

  std::vector<std::pair<std::string, std::vector<double>>> fos_series(series.begin(), series.begin() + 3);
  std::vector<std::pair<std::string, std::vector<double>>> dpg_series(series.begin() + 3, series.end());
  dpg_series.push_back(series[2]);
  rep.plot_manifest = plotsJson(json::array(
      {plotSpec("curves.csv", "Cumulative maxima of FOSLS ratios of error to loss", "m", "test samples m",
                seriesNames(fos_series), "cmax", false, true),
       plotSpec("curves.csv", "Cumulative maxima of DPG ratios of error to loss", "m", "test samples m",
                seriesNames(dpg_series), "cmax", false, true)}));
  return rep;
}

ExperimentReport levelSetExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  ExperimentReport rep;
  rep.experiment = ExperimentTag::LevelSet;
  rep.sample_sets.emplace_back("train", sampleParams(cfg.train_distribution, cfg.train.num_samples));
  std::vector<ParamSample> test = sampleParams(cfg.test_distribution, cfg.test_count);
  for (ParamSample& p : test) {
    const double a1 = p.alpha[0];
    p.alpha = AlphaParam{a1, 1.0, 1.0, a1};
  }
  rep.sample_sets.emplace_back("test", test);
  const LossKind kind = cfg.loss;
  rep.models.push_back(trainModel(cfg, ops, kind.name(), kind, "train", rep.sample_sets[0].second, cfg.train.seed));

  const std::vector<double> losses = sampleLosses(rep.models[0].result.params, test, kind, ops);
  rep.records = CsvTable({"sample", "alpha1", "max_alpha", "s", "loss"});
  std::vector<double> max_alpha;
  for (std::size_t i = 0; i < test.size(); ++i) {
    max_alpha.push_back(test[i].alpha.max());
    rep.records.addRow({std::to_string(i), formatNumber(test[i].alpha[0]), formatNumber(max_alpha.back()),
                        formatNumber(*test[i].s), formatNumber(losses[i])});
  }

  // grid: log-spaced in max alpha over the sampled span, uniform in s
  const LevelSetSettings& ls = cfg.level_set;
  const double a_lo = std::log10(*std::min_element(max_alpha.begin(), max_alpha.end()));
  const double a_hi = std::log10(*std::max_element(max_alpha.begin(), max_alpha.end()));
  const double s_lo = cfg.test_distribution.s_range->lo;
  const double s_hi = cfg.test_distribution.s_range->hi;
  auto bin = [](double x, double lo, double hi, int n) {
    if (!(hi > lo)) {
      return 0;
    }
    return std::clamp(static_cast<int>((x - lo) / (hi - lo) * n), 0, n - 1);
  };
  std::vector<double> sum(static_cast<std::size_t>(ls.alpha_bins * ls.s_bins), 0.0);
  std::vector<int> count(sum.size(), 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int ia = bin(std::log10(max_alpha[i]), a_lo, a_hi, ls.alpha_bins);
    const int is = bin(*test[i].s, s_lo, s_hi, ls.s_bins);
    sum[ia * ls.s_bins + is] += losses[i];
    ++count[ia * ls.s_bins + is];
  }
  CsvTable grid({"alpha_bin", "s_bin", "max_alpha_lo", "max_alpha_hi", "s_lo", "s_hi", "count", "mean_loss"});
  for (int ia = 0; ia < ls.alpha_bins; ++ia) {
    for (int is = 0; is < ls.s_bins; ++is) {
      const int c = count[ia * ls.s_bins + is];
      const double da = (a_hi - a_lo) / ls.alpha_bins;
      const double ds = (s_hi - s_lo) / ls.s_bins;
      grid.addRow({std::to_string(ia), std::to_string(is), formatNumber(std::pow(10.0, a_lo + ia * da)),
                   formatNumber(std::pow(10.0, a_lo + (ia + 1) * da)), formatNumber(s_lo + is * ds),
                   formatNumber(s_lo + (is + 1) * ds), std::to_string(c),
                   formatNumber(c ? sum[ia * ls.s_bins + is] / c : std::nan(""))});
    }
  }
  rep.tables.emplace_back("grid.csv", std::move(grid));

  std::vector<double> high_s, low_s;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (max_alpha[i] >= ls.high_alpha) {
      if (*test[i].s >= ls.high_s) {
        high_s.push_back(losses[i]);
      } else if (*test[i].s <= ls.low_s) {
        low_s.push_back(losses[i]);
      }
    }
  }
  rep.addMetric("evaluated", static_cast<double>(test.size()));
  rep.addMetric("mean_loss", mean(losses));
  rep.addMetric("count_high_alpha_high_s", static_cast<double>(high_s.size()));
  rep.addMetric("count_high_alpha_low_s", static_cast<double>(low_s.size()));
  rep.addMetric("mean_loss_high_alpha_high_s", mean(high_s));
  rep.addMetric("mean_loss_high_alpha_low_s", mean(low_s));
  const bool evaluable = !high_s.empty() && !low_s.empty();
  rep.addMetric("ordering_holds", evaluable ? (mean(high_s) < mean(low_s) ? 1.0 : 0.0) : std::nan(""));
  if (!evaluable) {
    rep.advisories.emplace_back("level-set ordering check not evaluable: no test samples with max alpha >= " +
                                formatNumber(ls.high_alpha) + " in one of the s ranges");
  }
  rep.plot_manifest = plotsJson(json::array({plotSpec("records.csv", "Level sets of the scaled DPG loss",
                                                      "max_alpha", "max alpha", {"s", "loss"}, "s", true, false)}));
  return rep;
}

CsvTable fieldTable(const GridField& field) {
  CsvTable t({"x", "y", "value"});
  for (std::size_t i = 0; i < field.value.size(); ++i) {
    t.addRow({formatNumber(field.x[i]), formatNumber(field.y[i]), formatNumber(field.value[i])});
  }
  return t;
}

ExperimentReport fieldsExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  ExperimentReport rep;
  rep.experiment = ExperimentTag::Fields;
  rep.sample_sets.emplace_back("train", sampleParams(cfg.train_distribution, cfg.train.num_samples));
  const auto& train_set = rep.sample_sets[0].second;
  rep.models.push_back(trainModel(cfg, ops, "fosls", LossKind::fosls(), "train", train_set,
                                  deriveSeed(cfg.train.seed, 0)));
  rep.models.push_back(
      trainModel(cfg, ops, "dpg", LossKind::dpg(1.0), "train", train_set, deriveSeed(cfg.train.seed, 1)));

  std::vector<std::string> cols{"field"};
  for (auto& c : sampleColumns(ops.num_subdomains, false)) {
    cols.push_back(c);
  }
  for (const char* c : {"method", "linf_diff", "field_max", "rel_diff"}) {
    cols.emplace_back(c);
  }
  rep.records = CsvTable(cols);
  std::array<double, 2> worst{0.0, 0.0};
  const int res = cfg.fields.resolution;
  for (std::size_t k = 0; k < cfg.fields.alphas.size(); ++k) {
    const AlphaParam& a = cfg.fields.alphas[k];
    ops.checkAlpha(a, "fields");
    const Vector in = netInput(a, std::nullopt);
    const std::array<std::pair<const char*, std::pair<Vector, Vector>>, 2> pairs{{
        {"fosls", {forward(rep.models[0].result.params, in), solveFOSLS(ops, a, cfg.solver).coeffs}},
        {"dpg",
         {liftTraces(ops, forward(rep.models[1].result.params, in)),
          liftTraces(ops, solveDPG(ops, a, 1.0, cfg.solver).coeffs)}},
    }};
    for (std::size_t m = 0; m < pairs.size(); ++m) {
      const auto& [method, fields] = pairs[m];
      const GridField pred = sampleScalarField(ops, fields.first, res);
      const GridField sol = sampleScalarField(ops, fields.second, res);
      double diff = 0.0;
      double top = 0.0;
      for (std::size_t i = 0; i < sol.value.size(); ++i) {
        diff = std::max(diff, std::abs(pred.value[i] - sol.value[i]));
        top = std::max(top, std::abs(sol.value[i]));
      }
      const std::string stem = "field_" + std::to_string(k) + "_" + method;
      rep.tables.emplace_back(stem + "_prediction.csv", fieldTable(pred));
      rep.tables.emplace_back(stem + "_galerkin.csv", fieldTable(sol));
      std::vector<std::string> row{std::to_string(k)};
      appendSample(row, ParamSample{a, std::nullopt});
      const double rel = safeRatio(diff, top);
      row.insert(row.end(), {method, formatNumber(diff), formatNumber(top), formatNumber(rel)});
      rep.records.addRow(std::move(row));
      worst[m] = std::max(worst[m], rel);
    }
  }
  rep.addMetric("max_rel_diff_fosls", worst[0]);
  rep.addMetric("max_rel_diff_dpg", worst[1]);
  return rep;
}

ExperimentReport l2CompareExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  requireSubdomains(cfg, ops);
  if (!cfg.loss.usesDpgSpace()) {
    throw InputError("l2_compare needs a DPG-family loss");
  }
  ExperimentReport rep;
  rep.experiment = ExperimentTag::L2Compare;
  rep.sample_sets.emplace_back("train", sampleParams(cfg.train_distribution, cfg.train.num_samples));
  rep.sample_sets.emplace_back("test", sampleParams(cfg.test_distribution, cfg.test_count));
  const auto& train_set = rep.sample_sets[0].second;
  const auto& test = rep.sample_sets[1].second;
  rep.models.push_back(
      trainModel(cfg, ops, cfg.loss.name(), cfg.loss, "train", train_set, deriveSeed(cfg.train.seed, 0)));
  rep.models.push_back(
      trainModel(cfg, ops, "fosls", LossKind::fosls(), "train", train_set, deriveSeed(cfg.train.seed, 1)));
  const Matrix pred_d = predict(rep.models[0].result.params, test);
  const Matrix pred_f = predict(rep.models[1].result.params, test);

  using Row = std::array<double, 4>;
  const auto rows = evaluateAll<Row>(
      cfg.test_count, cfg.threads,
      [&](int i) {
        const AlphaParam& a = test[i].alpha;
        // DPG reference at s = 1, interior part only
        const Vector dpg1 = solveDPG(ops, a, 1.0, cfg.solver).coeffs;
        const Vector fos = solveFOSLS(ops, a, cfg.solver).coeffs;
        return Row{dpgInteriorMassNorms(ops, pred_d.col(i) - dpg1).total(),
                   foslsMassNorms(ops, pred_f.col(i) - fos).total(),
                   evaluateLoss(ops, cfg.loss, a, pred_d.col(i), false).value, foslsLoss(ops, pred_f.col(i), a)};
      },
      rep.skipped);

  std::vector<std::string> cols{"sample"};
  for (auto& c : sampleColumns(ops.num_subdomains, false)) {
    cols.push_back(c);
  }
  for (const char* c : {"e0_dpg", "e0_fos", "loss_dpg", "loss_fos"}) {
    cols.emplace_back(c);
  }
  rep.records = CsvTable(cols);
  std::vector<std::pair<std::string, std::vector<double>>> series{{"e0_dpg", {}}, {"e0_fos", {}}};
  for (const auto& [i, r] : rows) {
    std::vector<std::string> row{std::to_string(i)};
    appendSample(row, test[i]);
    for (double v : r) {
      row.push_back(formatNumber(v));
    }
    rep.records.addRow(std::move(row));
    series[0].second.push_back(r[0]);
    series[1].second.push_back(r[1]);
  }
  rep.addMetric("evaluated", static_cast<double>(rows.size()));
  rep.addMetric("skipped", rep.skipped);
  for (const auto& [name, values] : series) {
    rep.addMetric("mean_" + name, mean(values));
    rep.addMetric("final_cmax_" + name, finalCmax(values));
  }
  rep.tables.emplace_back("curves.csv", cmaxCurves(series));
  rep.plot_manifest = plotsJson(json::array({plotSpec("curves.csv", "Cumulative maxima of alpha-independent errors",
                                                      "m", "test samples m", seriesNames(series), "cmax e0", false,
                                                      true)}));
  return rep;
}

ExperimentReport runExperiment(const ExperimentConfig& cfg, const ParametricOperators& ops) {
  cfg.validate();
  switch (cfg.experiment) {
  case ExperimentTag::Tables:
    return tablesExperiment(cfg, ops);
  case ExperimentTag::RatioCurves:
    return ratioCurvesExperiment(cfg, ops);
  case ExperimentTag::LevelSet:
    return levelSetExperiment(cfg, ops);
  case ExperimentTag::Fields:
    return fieldsExperiment(cfg, ops);
  case ExperimentTag::L2Compare:
    return l2CompareExperiment(cfg, ops);
  case ExperimentTag::TrainOnly:
    return trainOnlyExperiment(cfg, ops);
  }
  throw InputError("unknown experiment");
}

ExperimentReport runExperiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ParametricOperators ops = ParametricOperators::build(buildMesh(cfg.mesh_n));
  return runExperiment(cfg, ops);
}

// ---------------------------------------------------------------------------
// Output

std::string gitBlobHash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) {
    throw NumericalError("SHA-1 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
}

} // namespace

WrittenRun writeRun(const ExperimentConfig& cfg, const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  WrittenRun run;
  run.dir = dir;
  json outputs = json::object();
  auto emit = [&](const std::string& name, const std::string& text) {
    writeText(dir / name, text);
    run.files.push_back(name);
    outputs[name] = gitBlobHash(text);
  };

  // inputs: the numerics-relevant config and every sample set
  json config = json::parse(configToJson(cfg));
  json hashed_config = config;
  hashed_config.erase("output_dir");
  json inputs = json::object();
  inputs["config"] = gitBlobHash(hashed_config.dump());
  for (const auto& [name, samples] : report.sample_sets) {
    std::ostringstream os;
    writeSamplesCsv(os, samples);
    const std::string file = "samples_" + name + ".csv";
    inputs[file] = gitBlobHash(os.str());
    emit(file, os.str());
  }
  std::string all_inputs;
  for (const auto& [name, hash] : inputs.items()) {
    all_inputs += name + " " + hash.get<std::string>() + "\n";
  }
  run.input_hash = gitBlobHash(all_inputs);

  emit("records.csv", report.records.str());
  emit("aggregates.csv", report.aggregates.str());
  for (const auto& [name, table] : report.tables) {
    emit(name, table.str());
  }
  json models = json::array();
  for (const TrainedModel& m : report.models) {
    CsvTable history({"epoch", "mean_loss"});
    for (std::size_t e = 0; e < m.result.history.size(); ++e) {
      history.addRow({std::to_string(e), formatNumber(m.result.history[e])});
    }
    emit("history_" + m.name + ".csv", history.str());
    json entry{{"name", m.name},
               {"loss", m.kind.name()},
               {"sample_set", m.sample_set},
               {"train_seed", m.train_seed},
               {"steps", m.result.steps},
               {"initial_risk", m.result.history.front()},
               {"final_risk", m.result.final_risk}};
    if (m.kind.tag == LossKind::Tag::DpgTwoParam) {
      entry["s1"] = m.kind.s1;
      entry["s2"] = m.kind.s2;
    } else if (m.kind.usesDpgSpace()) {
      entry["s"] = m.kind.s;
    }
    if (cfg.save_checkpoints) {
      std::ostringstream os;
      saveCheckpoint(os, m.result.params);
      entry["checkpoint"] = "net_" + m.name + ".json";
      emit("net_" + m.name + ".json", os.str());
    }
    models.push_back(entry);
  }
  if (!report.plot_manifest.empty()) {
    emit("plots.json", report.plot_manifest);
  }

  json manifest;
  manifest["format"] = "vcl-run-manifest";
  manifest["manifest_version"] = 1;
  manifest["library_version"] = libraryVersion();
  manifest["experiment"] = experimentName(report.experiment);
  manifest["config"] = config;
  manifest["seeds"] = {{"base", cfg.seed},
                       {"train_samples", cfg.train_distribution.seed},
                       {"test_samples", cfg.test_distribution.seed},
                       {"training", cfg.train.seed}};
  manifest["models"] = models;
  manifest["inputs"] = inputs;
  manifest["input_hash"] = run.input_hash;
  manifest["outputs"] = outputs;
  manifest["skipped_samples"] = report.skipped;
  manifest["advisories"] = report.advisories;
  writeText(dir / "manifest.json", manifest.dump(2) + "\n");
  run.files.emplace_back("manifest.json");
  return run;
}

} // namespace vcl
