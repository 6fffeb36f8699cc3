#include "oracles.hpp"

#include "vcl/errors.hpp"
#include "vcl/harness.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace vcl {
namespace {

const ParametricOperators& mesh2() {
  static const ParametricOperators ops = ParametricOperators::build(buildMesh(2));
  return ops;
}

double relErr(double a, double b) {
  return oracle::relativeError(a, b);
}

// squared L2 norms of a FOSLS-layout field by the edge-midpoint rule, exact
// for the quadratic integrands of RT0 x P1 differences
SquaredErrors midpointMassNorms(const TriMesh& mesh, const Vector& coeffs) {
  SquaredErrors out;
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
    const auto& t = mesh.triangles[k];
    const Point& a = mesh.vertices[t[0]];
    const Point& b = mesh.vertices[t[1]];
    const Point& c = mesh.vertices[t[2]];
    const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    for (const Point& m : {Point((a + b) / 2), Point((b + c) / 2), Point((c + a) / 2)}) {
      const oracle::FieldValue v = oracle::foslsField(mesh, coeffs, static_cast<int>(k), m);
      out.q += area / 3.0 * v.q.squaredNorm();
      out.u += area / 3.0 * v.u * v.u;
    }
  }
  return out;
}

TEST(CumulativeMax, Examples) {
  EXPECT_EQ(cumulativeMax(std::vector<double>{3, 1, 5, 2}), (std::vector<double>{3, 3, 5, 5}));
  EXPECT_EQ(cumulativeMax(std::vector<double>{2, 2, 2}), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(cumulativeMax(std::vector<double>{-1, 0, 4}), (std::vector<double>{-1, 0, 4}));
  EXPECT_TRUE(cumulativeMax(std::vector<double>{}).empty());
}

TEST(CumulativeMax, NondecreasingAndAboveInput) {
  std::mt19937_64 rng(4);
  const Vector v = oracle::randomVector(rng, 500);
  const std::vector<double> in(v.data(), v.data() + v.size());
  const std::vector<double> out = cumulativeMax(in);
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_GE(out[i], in[i]);
    if (i > 0) {
      EXPECT_GE(out[i], out[i - 1]);
    }
  }
}

TEST(ErrorMeasures, ZeroForEqualVectors) {
  const auto& ops = mesh2();
  const AlphaParam a{0.3, 2, 1, 5};
  const Vector f = solveFOSLS(ops, a).coeffs;
  const ErrorMeasures mf = errorMeasures(ops, Method::Fosls, f, f, a);
  EXPECT_EQ(mf.e0, 0.0);
  EXPECT_EQ(mf.e_hat, 0.0);
  const Vector d = solveDPG(ops, a, 1.0).coeffs;
  const ErrorMeasures md = errorMeasures(ops, Method::Dpg, d, d, a);
  EXPECT_EQ(md.e0, 0.0);
  EXPECT_EQ(md.e_hat, 0.0);
}

TEST(ErrorMeasures, FoslsMatchesQuadratureAndGramForm) {
  const auto& ops = mesh2();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const AlphaParam a = oracle::randomAlpha(rng);
    const Vector pred = oracle::randomVector(rng, ops.fosls.dim());
    const Vector sol = oracle::randomVector(rng, ops.fosls.dim());
    const Vector delta = pred - sol;
    const ErrorMeasures m = errorMeasures(ops, Method::Fosls, pred, sol, a);
    const SquaredErrors q = midpointMassNorms(ops.mesh, delta);
    EXPECT_LT(relErr(m.interior.q, q.q), 1e-12);
    EXPECT_LT(relErr(m.interior.u, q.u), 1e-12);
    EXPECT_LT(relErr(m.e0, q.total()), 1e-12);
    EXPECT_LT(relErr(m.e_hat, delta.dot(oracle::foslsMatrix(ops.mesh, a) * delta)), 1e-12);
  }
}

TEST(ErrorMeasures, DpgInteriorAndLiftedTraces) {
  const auto& ops = mesh2();
  std::mt19937_64 rng(9);
  const AlphaParam a = oracle::randomAlpha(rng);
  const Vector pred = oracle::randomVector(rng, ops.dpg.dim());
  const Vector sol = oracle::randomVector(rng, ops.dpg.dim());
  const Vector delta = pred - sol;
  const ErrorMeasures m = errorMeasures(ops, Method::Dpg, pred, sol, a);

  double e0 = 0.0;
  for (int k = 0; k < ops.dpg.numElements(); ++k) {
    const auto& t = ops.mesh.triangles[k];
    const Point ab = ops.mesh.vertices[t[1]] - ops.mesh.vertices[t[0]];
    const Point ac = ops.mesh.vertices[t[2]] - ops.mesh.vertices[t[0]];
    const double area = 0.5 * std::abs(ab.x() * ac.y() - ab.y() * ac.x());
    const auto& dofs = ops.dpg.blocks[k].dofs;
    e0 += area * (delta(dofs[0]) * delta(dofs[0]) + delta(dofs[1]) * delta(dofs[1]) + delta(dofs[2]) * delta(dofs[2]));
  }
  EXPECT_LT(relErr(m.e0, e0), 1e-12);

  const Vector lifted = liftTraces(ops, delta);
  const SquaredErrors q = midpointMassNorms(ops.mesh, lifted);
  EXPECT_LT(relErr(m.conforming.u, q.u), 1e-12);
  EXPECT_LT(relErr(m.conforming.q, q.q), 1e-12);
  EXPECT_LT(relErr(m.e_hat, lifted.dot(oracle::foslsMatrix(ops.mesh, a) * lifted)), 1e-12);
}

TEST(ErrorMeasures, RejectsSpaceMismatch) {
  const auto& ops = mesh2();
  const AlphaParam a = AlphaParam::constant(1.0);
  const Vector f = Vector::Zero(ops.fosls.dim());
  const Vector d = Vector::Zero(ops.dpg.dim());
  EXPECT_THROW(errorMeasures(ops, Method::Dpg, f, f, a), InputError);
  EXPECT_THROW(errorMeasures(ops, Method::Fosls, f, d, a), InputError);
}

TEST(Ratios, ExactPredictionGivesZero) {
  const auto& ops = mesh2();
  const AlphaParam a{0.1, 1, 1, 0.1};
  const Vector f = solveFOSLS(ops, a).coeffs;
  const FoslsRatios rf = foslsRatios(ops, f, f, a);
  EXPECT_EQ(rf.rho_hat, 0.0);
  EXPECT_EQ(rf.rho, 0.0);
  const DpgSolution d = solveDPG(ops, a, 10.0);
  const DpgRatios rd = dpgRatios(ops, d.coeffs, d, a, 10.0);
  EXPECT_EQ(rd.rho, 0.0);
  EXPECT_LT(relErr(rd.loss_pred, rd.loss_galerkin), 1e-10);
}

TEST(Ratios, RhoHatAtMostTwo) {
  const auto& ops = mesh2();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const AlphaParam a = oracle::randomAlpha(rng);
    const Vector sol = solveFOSLS(ops, a).coeffs;
    const double scale = std::pow(10.0, -6.0 + 7.0 * (trial % 8) / 7.0);
    const Vector pred = sol + oracle::randomVector(rng, ops.fosls.dim(), scale);
    const FoslsRatios r = foslsRatios(ops, pred, sol, a);
    EXPECT_LE(r.rho_hat, kRhoHatBound);
    EXPECT_GE(r.rho, r.rho0);
  }
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallelFor(1000, [&](int i) { ++hits[i]; }, 4);
  for (const auto& h : hits) {
    EXPECT_EQ(h.load(), 1);
  }
  EXPECT_THROW(parallelFor(
                   50,
                   [](int i) {
                     if (i == 17) {
                       throw NumericalError("boom");
                     }
                   },
                   3),
               NumericalError);
}

// -- config ------------------------------------------------------------------

TEST(Config, DefaultsFollowThePublishedSetup) {
  const ExperimentConfig c = parseConfig(R"({"experiment": "train_only"})");
  EXPECT_EQ(c.mesh_n, 10);
  EXPECT_EQ(c.train.epochs, 5000);
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.train.num_samples, 1024);
  EXPECT_EQ(c.train.learning_rate, 1e-4);
  EXPECT_EQ(c.test_count, 10000);
  EXPECT_EQ(c.c0, 1.0);
  EXPECT_NE(c.train_distribution.seed, c.test_distribution.seed);

  const ExperimentConfig ls = defaultConfig(ExperimentTag::LevelSet);
  EXPECT_EQ(ls.loss.tag, LossKind::Tag::DpgScaled);
  EXPECT_EQ(ls.train.learning_rate, 1e-3);
  ASSERT_TRUE(ls.train_distribution.s_range);
  EXPECT_EQ(ls.train_distribution.s_range->hi, 100.0);
  const ExperimentConfig l2 = defaultConfig(ExperimentTag::L2Compare);
  EXPECT_EQ(l2.loss.s1, 50.0);
  EXPECT_EQ(l2.loss.s2, 100.0);
  EXPECT_EQ(l2.train_distribution.sigma, 0.5);
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "epochs": 3})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "net": {"widht": 3}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "train_distribution": {"seed": 3}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "tables", "tables": {"cell": [1]}})"), InputError);
  try {
    parseConfig(R"({"experiment": "train_only", "loss": {"kind": "dpg", "t": 1}})");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("loss"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'t'"), std::string::npos);
  }
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parseConfig("{not json"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "mesh_n": "ten"})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "mesh_n": 5})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "seed": -1})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "train": {"learning_rate": 0}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "loss": {"kind": "l1"}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "train_only", "train_distribution": {"mean": [1, 1, 1]},
                              "test_distribution": {"mean": [1, 1, 1]}})"),
               InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "tables", "tables": {"cells": [7]}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "ratio_curves", "ratio_curves": {"s_values": [0]}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "l2_compare", "loss": {"kind": "fosls"}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "level_set", "loss": {"kind": "fosls"}})"), InputError);
  EXPECT_THROW(parseConfig(R"({"experiment": "warp"})"), InputError);
  EXPECT_THROW(parseConfig(R"({"mesh_n": 4})"), InputError);
}

TEST(Config, TagMustAgreeWithDocument) {
  EXPECT_EQ(parseConfig(R"({"mesh_n": 4})", ExperimentTag::Fields).experiment, ExperimentTag::Fields);
  EXPECT_THROW(parseConfig(R"({"experiment": "tables"})", ExperimentTag::Fields), InputError);
}

TEST(Config, SeedDerivation) {
  const ExperimentConfig a = parseConfig(R"({"experiment": "train_only", "seed": 5})");
  const ExperimentConfig b = parseConfig(R"({"experiment": "train_only", "seed": 6})");
  EXPECT_NE(a.train_distribution.seed, b.train_distribution.seed);
  EXPECT_NE(a.train.seed, a.train_distribution.seed);
  ExperimentConfig c = a;
  c.test_distribution.seed = c.train_distribution.seed;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Config, CanonicalJsonRoundTrips) {
  ExperimentConfig c = defaultConfig(ExperimentTag::RatioCurves);
  c.seed = 77;
  c.deriveSeeds();
  c.mesh_n = 6;
  c.net.width = 16;
  c.net.rank = 8;
  c.train.optimizer = OptimizerKind::Sgd;
  c.ratio_curves.s_values = {2.5, 40};
  c.fields.alphas = {AlphaParam{1, 2, 3, 4}};
  const std::string text = configToJson(c);
  const ExperimentConfig back = parseConfig(text);
  EXPECT_EQ(configToJson(back), text);
  EXPECT_EQ(back.train_distribution.seed, c.train_distribution.seed);
  EXPECT_EQ(back.net, c.net);
}

TEST(Config, ManifestIsAcceptedAsConfig) {
  ExperimentConfig c = defaultConfig(ExperimentTag::Fields);
  c.mesh_n = 4;
  const nlohmann::json manifest{{"format", "vcl-run-manifest"}, {"config", nlohmann::json::parse(configToJson(c))}};
  EXPECT_EQ(configToJson(parseConfig(manifest.dump())), configToJson(c));
  EXPECT_THROW(parseConfig(R"({"format": "other"})"), InputError);
}

// -- csv and hashing -----------------------------------------------------------

TEST(CsvTable, RoundTripAndNumbers) {
  CsvTable t({"a", "b"});
  t.addRow({"1", formatNumber(0.1)});
  t.addRow({"x", formatNumber(-2.5e-300)});
  EXPECT_THROW(t.addRow({"1"}), InputError);
  std::stringstream ss(t.str());
  const CsvTable back = CsvTable::read(ss);
  EXPECT_EQ(back.columns(), t.columns());
  EXPECT_EQ(back.rows(), t.rows());
  EXPECT_EQ(back.numbers("b"), (std::vector<double>{0.1, -2.5e-300}));
  EXPECT_THROW(back.numbers("a"), InputError);
  EXPECT_THROW(static_cast<void>(back.column("c")), InputError);
}

TEST(GitBlobHash, MatchesGit) {
  EXPECT_EQ(gitBlobHash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(gitBlobHash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(FieldTable, ZeroCoefficientsGiveZeroField) {
  const auto& ops = mesh2();
  const CsvTable t = fieldTable(sampleScalarField(ops, Vector::Zero(ops.fosls.dim()), 6));
  EXPECT_EQ(t.size(), 49U);
  for (double v : t.numbers("value")) {
    EXPECT_EQ(v, 0.0);
  }
}

// -- experiments at toy scale ------------------------------------------------------

ExperimentConfig toyConfig(ExperimentTag tag) {
  ExperimentConfig c = defaultConfig(tag);
  c.mesh_n = 2;
  c.net.width = 8;
  c.net.rank = 4;
  c.net.blocks = 2;
  c.train.epochs = 8;
  c.train.batch_size = 8;
  c.train.num_samples = 16;
  c.train.learning_rate = 1e-2;
  c.test_count = 40;
  c.threads = 2;
  return c;
}

std::map<std::string, double> metrics(const ExperimentReport& r) {
  std::map<std::string, double> m;
  for (const auto& row : r.aggregates.rows()) {
    m[row[0]] = std::strtod(row[1].c_str(), nullptr);
  }
  return m;
}

double meanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

// the aggregates must be recomputable from the records as written to disk
CsvTable reread(const CsvTable& t) {
  std::stringstream ss(t.str());
  return CsvTable::read(ss);
}

TEST(Experiments, TrainOnlyRecordsAndAggregates) {
  const ExperimentConfig cfg = toyConfig(ExperimentTag::TrainOnly);
  const ExperimentReport r = runExperiment(cfg, mesh2());
  ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.test_count));
  const CsvTable rec = reread(r.records);
  const auto m = metrics(r);
  EXPECT_EQ(m.at("mean_loss"), meanOf(rec.numbers("loss")));
  EXPECT_EQ(m.at("mean_e0"), meanOf(rec.numbers("e0")));
  EXPECT_EQ(m.at("final_cmax_e_hat"), cumulativeMax(rec.numbers("e_hat")).back());
  EXPECT_LT(m.at("final_risk"), m.at("initial_risk"));
}

TEST(Experiments, DegenerateSigmaMatchesTrainingPoint) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::TrainOnly);
  cfg.train_distribution.sigma = 0.0;
  cfg.test_distribution.sigma = 0.0;
  const ExperimentReport r = runExperiment(cfg, mesh2());
  const CsvTable rec = reread(r.records);
  const std::vector<double> e0 = rec.numbers("e0");
  for (double v : e0) {
    EXPECT_EQ(v, e0.front());
  }
  const NetParams& p = r.models[0].result.params;
  const ParamSample& x = r.sample_sets[0].second.front();
  const Vector w = forward(p, netInput(x.alpha, x.s));
  const ErrorMeasures at_train = errorMeasures(mesh2(), Method::Fosls, w, solveFOSLS(mesh2(), x.alpha).coeffs, x.alpha);
  EXPECT_LT(relErr(e0.front(), at_train.e0), 1e-12);
}

TEST(Experiments, BitReproducibleAcrossThreadCounts) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::TrainOnly);
  const std::string a = runExperiment(cfg, mesh2()).records.str();
  cfg.threads = 1;
  EXPECT_EQ(runExperiment(cfg, mesh2()).records.str(), a);
  cfg.seed = 1;
  cfg.deriveSeeds();
  EXPECT_NE(runExperiment(cfg, mesh2()).records.str(), a);
}

TEST(Experiments, RatioCurves) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::RatioCurves);
  cfg.ratio_curves.s_values = {1.0, 100.0};
  const ExperimentReport r = runExperiment(cfg, mesh2());
  ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.test_count));
  ASSERT_EQ(r.models.size(), 3U);
  EXPECT_EQ(r.models[2].kind.tag, LossKind::Tag::Dpg);
  const CsvTable rec = reread(r.records);
  for (double v : rec.numbers("rho_hat_fos")) {
    EXPECT_LE(v, kRhoHatBound);
  }
  const auto m = metrics(r);
  for (const char* col : {"rho_hat_fos", "rho0_fos", "rho_fos", "rho_dpg_s1", "rho_dpg_s100"}) {
    EXPECT_EQ(m.at(std::string("mean_") + col), meanOf(rec.numbers(col))) << col;
    EXPECT_EQ(m.at(std::string("final_cmax_") + col), cumulativeMax(rec.numbers(col)).back()) << col;
  }
  ASSERT_EQ(r.tables.front().first, "curves.csv");
  const std::vector<double> curve = r.tables.front().second.numbers("cmax_rho_fos");
  EXPECT_EQ(curve, cumulativeMax(rec.numbers("rho_fos")));
  EXPECT_FALSE(r.plot_manifest.empty());
}

TEST(Experiments, RatioCurvesRejectMismatchedNets) {
  const auto& ops = mesh2();
  NetConfig small;
  small.width = 8;
  small.rank = 4;
  small.blocks = 1;
  const NetParams fos = initParams(netConfigFor(small, ops, LossKind::fosls(), false), 1);
  const std::vector<NetParams> wrong{fos};
  const std::vector<double> s{1.0};
  const std::vector<ParamSample> test{{AlphaParam::constant(1.0), std::nullopt}};
  EXPECT_THROW(ratioCurves(ops, fos, wrong, s, test), InputError);
  EXPECT_THROW(ratioCurves(ops, fos, {}, s, test), InputError);
}

TEST(Experiments, TablesCell) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::Tables);
  cfg.tables.cells = {1};
  const ExperimentReport r = runExperiment(cfg, mesh2());
  ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.test_count));
  const CsvTable rec = reread(r.records);
  const auto m = metrics(r);
  EXPECT_EQ(m.at("cell1.dpg_uhat_mean"), meanOf(rec.numbers("dpg_uhat")));
  EXPECT_EQ(m.at("cell1.fosls_q_mean"), meanOf(rec.numbers("fosls_q")));
  const CsvTable& table = r.tables.front().second;
  ASSERT_EQ(table.size(), 4U);
  EXPECT_EQ(table.rows()[0][2], "dpg_uhat");
  EXPECT_EQ(table.numbers("reference")[0], 3.136e-08);
  EXPECT_EQ(table.numbers("measured")[1], m.at("cell1.fosls_u_mean"));
  // the cell's own distribution drives the samples
  for (const ParamSample& p : r.sample_sets[0].second) {
    EXPECT_NEAR(p.alpha[1], 1.0, 0.8);
  }
}

TEST(Experiments, PublishedCellsAreArchived) {
  const auto mean_cells = tableCells(TableVariant::VaryMean);
  ASSERT_EQ(mean_cells.size(), 4U);
  EXPECT_EQ(mean_cells[0].reference[0], 2.373e-08);
  EXPECT_EQ(mean_cells[3].reference[1], 4.8261e-02);
  const auto std_cells = tableCells(TableVariant::VaryStd);
  ASSERT_EQ(std_cells.size(), 5U);
  EXPECT_EQ(std_cells[4].sigma, 10.0);
  EXPECT_EQ(std_cells[4].reference[1], 3.520);
  EXPECT_EQ(std_cells[2].mean, (std::vector<double>{0.01, 1, 1, 0.01}));
}

TEST(Experiments, LevelSetGrid) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::LevelSet);
  cfg.level_set.alpha_bins = 3;
  cfg.level_set.s_bins = 4;
  const ExperimentReport r = runExperiment(cfg, mesh2());
  ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.test_count));
  const CsvTable rec = reread(r.records);
  const auto a1 = rec.numbers("alpha1");
  const auto amax = rec.numbers("max_alpha");
  for (std::size_t i = 0; i < a1.size(); ++i) {
    EXPECT_EQ(amax[i], std::max(a1[i], 1.0));
  }
  for (const ParamSample& p : r.sample_sets[1].second) {
    EXPECT_EQ(p.alpha[1], 1.0);
    EXPECT_EQ(p.alpha[3], p.alpha[0]);
  }
  const CsvTable& grid = r.tables.front().second;
  EXPECT_EQ(grid.size(), 12U);
  double total = 0.0;
  for (double c : grid.numbers("count")) {
    total += c;
  }
  EXPECT_EQ(total, cfg.test_count);
  EXPECT_EQ(metrics(r).at("mean_loss"), meanOf(rec.numbers("loss")));
}

TEST(Experiments, FieldsExport) {
  ExperimentConfig cfg = toyConfig(ExperimentTag::Fields);
  cfg.fields.resolution = 4;
  const ExperimentReport r = runExperiment(cfg, mesh2());
  EXPECT_EQ(r.records.size(), 4U);
  EXPECT_EQ(r.tables.size(), 8U);
  for (const auto& [name, t] : r.tables) {
    EXPECT_EQ(name.rfind("field_", 0), 0U);
    EXPECT_EQ(t.size(), 25U);
  }
}

TEST(Experiments, L2Compare) {
  const ExperimentConfig cfg = toyConfig(ExperimentTag::L2Compare);
  const ExperimentReport r = runExperiment(cfg, mesh2());
  ASSERT_EQ(r.records.size(), static_cast<std::size_t>(cfg.test_count));
  EXPECT_EQ(r.models[0].kind.tag, LossKind::Tag::DpgTwoParam);
  const CsvTable rec = reread(r.records);
  const auto m = metrics(r);
  EXPECT_EQ(m.at("final_cmax_e0_dpg"), cumulativeMax(rec.numbers("e0_dpg")).back());
  const auto curve = r.tables.front().second.numbers("cmax_e0_fos");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_GE(curve[i], curve[i - 1]);
  }
}

TEST(WriteRun, ManifestReplayIsBitExact) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "vcl_write_run_test";
  fs::remove_all(root);
  ExperimentConfig cfg = toyConfig(ExperimentTag::L2Compare);
  cfg.output_dir = (root / "a").string();
  const WrittenRun a = writeRun(cfg, runExperiment(cfg, mesh2()), cfg.output_dir);
  EXPECT_EQ(a.files.back(), "manifest.json");
  for (const char* f : {"records.csv", "aggregates.csv", "curves.csv", "plots.json", "samples_train.csv",
                        "net_fosls.json", "history_dpg_two_param.csv"}) {
    EXPECT_TRUE(fs::exists(root / "a" / f)) << f;
  }

  ExperimentConfig replay = loadConfig(root / "a" / "manifest.json");
  replay.output_dir = (root / "b").string();
  const WrittenRun b = writeRun(replay, runExperiment(replay, mesh2()), replay.output_dir);
  EXPECT_EQ(a.input_hash, b.input_hash);
  ASSERT_EQ(a.files, b.files);
  for (const std::string& f : a.files) {
    if (f == "manifest.json") {
      continue;
    }
    std::ifstream fa(root / "a" / f);
    std::ifstream fb(root / "b" / f);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << f;
  }

  std::ifstream in(root / "a" / "manifest.json");
  const nlohmann::json manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest["library_version"], libraryVersion());
  EXPECT_EQ(manifest["seeds"]["test_samples"], cfg.test_distribution.seed);
  EXPECT_EQ(manifest["models"].size(), 2U);
  std::ifstream rec(root / "a" / "records.csv");
  std::stringstream rs;
  rs << rec.rdbuf();
  EXPECT_EQ(manifest["outputs"]["records.csv"], gitBlobHash(rs.str()));
  fs::remove_all(root);
}

} // namespace
} // namespace vcl
