#include "vcl/experiment.hpp"

#include "vcl/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vcl {

using nlohmann::json;

std::string experimentName(ExperimentTag tag) {
  switch (tag) {
  case ExperimentTag::Tables:
    return "tables";
  case ExperimentTag::RatioCurves:
    return "ratio_curves";
  case ExperimentTag::LevelSet:
    return "level_set";
  case ExperimentTag::Fields:
    return "fields";
  case ExperimentTag::L2Compare:
    return "l2_compare";
  case ExperimentTag::TrainOnly:
    return "train_only";
  }
  return "unknown";
}

ExperimentTag parseExperiment(const std::string& text) {
  for (ExperimentTag t : {ExperimentTag::Tables, ExperimentTag::RatioCurves, ExperimentTag::LevelSet,
                          ExperimentTag::Fields, ExperimentTag::L2Compare, ExperimentTag::TrainOnly}) {
    if (experimentName(t) == text) {
      return t;
    }
  }
  throw InputError("unknown experiment '" + text +
                   "' (expected tables, ratio_curves, level_set, fields, l2_compare or train_only)");
}

std::vector<TableCell> tableCells(TableVariant variant) {
  // reference order: DPG u-hat, FOSLS u, DPG q-hat, FOSLS q
  if (variant == TableVariant::VaryMean) {
    return {
        {"alpha1=0.01", {0.01, 1, 1, 0.01}, 0.1, {2.373e-08, 1.340e-07, 4.335e-02, 3.824e-02}},
        {"alpha1=0.1", {0.1, 1, 1, 0.1}, 0.1, {3.136e-08, 1.671e-08, 1.578e-03, 4.702e-03}},
        {"alpha1=10", {10, 1, 1, 10}, 0.1, {4.449e-07, 5.745e-07, 2.146e-04, 5.265e-05}},
        {"alpha1=100", {100, 1, 1, 100}, 0.1, {5.071e-05, 4.8261e-02, 1.830e-02, 5.454e-03}},
    };
  }
  const std::vector<double> mean{0.01, 1, 1, 0.01};
  return {
      {"sigma=0.1", mean, 0.1, {2.373e-08, 1.340e-07, 4.335e-02, 3.824e-02}},
      {"sigma=0.5", mean, 0.5, {3.300e-05, 5.900e-05, 3.301e-03, 6.015e-03}},
      {"sigma=1", mean, 1.0, {2.100e-05, 1.100e-05, 7.866e-03, 7.209e-03}},
      {"sigma=5", mean, 5.0, {2.335e-03, 3.284e-02, 1.930e-02, 6.965e-02}},
      {"sigma=10", mean, 10.0, {0.613, 3.520, 0.007, 0.037}},
  };
}

namespace {

std::string variantName(TableVariant v) {
  return v == TableVariant::VaryMean ? "vary_mean" : "vary_std";
}

TableVariant parseVariant(const std::string& text) {
  if (text == "vary_mean") {
    return TableVariant::VaryMean;
  }
  if (text == "vary_std") {
    return TableVariant::VaryStd;
  }
  throw InputError("tables.variant must be vary_mean or vary_std, got '" + text + "'");
}

std::string solverName(LinearSolverKind k) {
  return k == LinearSolverKind::Direct ? "direct" : "cg";
}

LinearSolverKind parseSolver(const std::string& text) {
  if (text == "direct") {
    return LinearSolverKind::Direct;
  }
  if (text == "cg") {
    return LinearSolverKind::ConjugateGradient;
  }
  throw InputError("solver.kind must be direct or cg, got '" + text + "'");
}

// One JSON object being read. Every key must be claimed by a read() or
// child() call before finish(), otherwise it is reported as unknown.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw InputError(where() + "must be a JSON object");
    }
  }

  bool has(const char* key) {
    claimed_.insert(key);
    return j_.contains(key);
  }

  void read(const char* key, double& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_number()) {
        throw InputError(where(key) + "must be a number");
      }
      out = v.get<double>();
    }
  }

  void read(const char* key, int& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_number_integer()) {
        throw InputError(where(key) + "must be an integer");
      }
      const auto x = v.get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw InputError(where(key) + "is out of range");
      }
      out = static_cast<int>(x);
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_number_unsigned()) {
        throw InputError(where(key) + "must be a nonnegative integer");
      }
      out = v.get<std::uint64_t>();
    }
  }

  void read(const char* key, bool& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_boolean()) {
        throw InputError(where(key) + "must be true or false");
      }
      out = v.get<bool>();
    }
  }

  void read(const char* key, std::string& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_string()) {
        throw InputError(where(key) + "must be a string");
      }
      out = v.get<std::string>();
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (has(key)) {
      out = numbers(j_.at(key), where(key));
    }
  }

  void read(const char* key, std::vector<int>& out) {
    if (has(key)) {
      const json& v = j_.at(key);
      if (!v.is_array()) {
        throw InputError(where(key) + "must be an array of integers");
      }
      out.clear();
      for (const json& x : v) {
        if (!x.is_number_integer()) {
          throw InputError(where(key) + "must be an array of integers");
        }
        out.push_back(x.get<int>());
      }
    }
  }

  const json* child(const char* key) {
    return has(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!claimed_.contains(key)) {
        throw InputError(where() + "unknown key '" + key + "'");
      }
    }
  }

  [[nodiscard]] std::string where(const char* key = nullptr) const {
    std::string p = path_;
    if (key) {
      p += p.empty() ? key : std::string(".") + key;
    }
    return p.empty() ? "config: " : "config." + p + ": ";
  }

  static std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array()) {
      throw InputError(where + "must be an array of numbers");
    }
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) {
        throw InputError(where + "must be an array of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> claimed_;
};

void readDistribution(const json& j, const std::string& path, ParamDistribution& d) {
  Section sec(j, path);
  sec.read("mean", d.mean);
  sec.read("sigma", d.sigma);
  if (const json* r = sec.child("s_range")) {
    if (r->is_null()) {
      d.s_range.reset();
    } else {
      const std::vector<double> v = Section::numbers(*r, sec.where("s_range"));
      if (v.size() != 2) {
        throw InputError(sec.where("s_range") + "must be [lo, hi] or null");
      }
      d.s_range = SRange{v[0], v[1]};
    }
  }
  sec.finish();
}

void readLoss(const json& j, LossKind& loss) {
  Section sec(j, "loss");
  std::string kind = loss.name();
  sec.read("kind", kind);
  loss.tag = LossKind::parseTag(kind);
  sec.read("s", loss.s);
  sec.read("s1", loss.s1);
  sec.read("s2", loss.s2);
  sec.finish();
}

void readNet(const json& j, NetConfig& net) {
  Section sec(j, "net");
  sec.read("width", net.width);
  sec.read("rank", net.rank);
  sec.read("blocks", net.blocks);
  sec.read("leaky_slope", net.leaky_slope);
  sec.read("log_inputs", net.log_inputs);
  sec.finish();
}

void readTrain(const json& j, TrainConfig& t) {
  Section sec(j, "train");
  sec.read("epochs", t.epochs);
  sec.read("batch_size", t.batch_size);
  sec.read("learning_rate", t.learning_rate);
  std::string opt = optimizerName(t.optimizer);
  sec.read("optimizer", opt);
  t.optimizer = parseOptimizer(opt);
  sec.read("num_samples", t.num_samples);
  sec.read("beta1", t.beta1);
  sec.read("beta2", t.beta2);
  sec.read("epsilon", t.epsilon);
  sec.read("log_every", t.log_every);
  sec.finish();
}

void readSolver(const json& j, SolverOptions& s) {
  Section sec(j, "solver");
  std::string kind = solverName(s.kind);
  sec.read("kind", kind);
  s.kind = parseSolver(kind);
  sec.read("cg_tolerance", s.cg_tolerance);
  sec.read("cg_max_iterations", s.cg_max_iterations);
  sec.finish();
}

json distributionJson(const ParamDistribution& d) {
  json j{{"mean", d.mean}, {"sigma", d.sigma}};
  j["s_range"] = d.s_range ? json::array({d.s_range->lo, d.s_range->hi}) : json(nullptr);
  return j;
}

json lossJson(const LossKind& k) {
  json j{{"kind", k.name()}};
  if (k.tag == LossKind::Tag::DpgTwoParam) {
    j["s1"] = k.s1;
    j["s2"] = k.s2;
  } else if (k.tag != LossKind::Tag::Fosls) {
    j["s"] = k.s;
  }
  return j;
}

} // namespace

void ExperimentConfig::validate() const {
  if (mesh_n < 1) {
    throw InputError("config.mesh_n must be at least 1");
  }
  if (test_count < 1) {
    throw InputError("config.test_count must be positive");
  }
  if (!(c0 > 0.0) || !std::isfinite(c0)) {
    throw InputError("config.c0 must be positive");
  }
  if (threads < 0) {
    throw InputError("config.threads must be nonnegative");
  }
  if (output_dir.empty()) {
    throw InputError("config.output_dir must not be empty");
  }
  train_distribution.validate();
  test_distribution.validate();
  if (train_distribution.mean.size() != test_distribution.mean.size()) {
    throw InputError("config: train and test distributions have different parameter counts");
  }
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(train_distribution.mean.size()))));
  if (k * k != train_distribution.mean.size()) {
    throw InputError("config: the number of alpha components must be a square (k x k subdomains)");
  }
  if (mesh_n % static_cast<int>(k) != 0) {
    throw InputError("config.mesh_n must be a multiple of " + std::to_string(k) + " so subdomains align with the mesh");
  }
  if (train_distribution.seed == test_distribution.seed) {
    throw InputError("config: test and training samples must use different seeds");
  }
  if (static_cast<bool>(train_distribution.s_range) != static_cast<bool>(test_distribution.s_range)) {
    throw InputError("config: s_range must be given for both distributions or neither");
  }
  loss.validate();
  if (train_distribution.s_range && loss.tag != LossKind::Tag::Dpg && loss.tag != LossKind::Tag::DpgScaled) {
    throw InputError("config: a sampled s needs the dpg or dpg_scaled loss");
  }
  if (train_distribution.s_range && experiment != ExperimentTag::LevelSet && experiment != ExperimentTag::TrainOnly) {
    throw InputError("config: only level_set and train_only sample s");
  }
  NetConfig shape = net;
  // input and output sizes are fixed later from the mesh and the loss
  shape.m_alpha = std::max(shape.m_alpha, 1);
  shape.m_h = std::max(shape.m_h, 1);
  shape.validate();
  train.validate();
  if (solver.cg_tolerance <= 0.0 || solver.cg_max_iterations <= 0) {
    throw InputError("config.solver: CG tolerance and iteration cap must be positive");
  }

  switch (experiment) {
  case ExperimentTag::Tables: {
    const auto cells = tableCells(tables.variant);
    for (int c : tables.cells) {
      if (c < 0 || c >= static_cast<int>(cells.size())) {
        throw InputError("config.tables.cells: index " + std::to_string(c) + " out of range");
      }
    }
    if (train_distribution.mean.size() != 4) {
      throw InputError("config: the table experiments use four subdomains");
    }
    break;
  }
  case ExperimentTag::RatioCurves:
    if (ratio_curves.s_values.empty()) {
      throw InputError("config.ratio_curves.s_values must not be empty");
    }
    for (double s : ratio_curves.s_values) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw InputError("config.ratio_curves.s_values must be positive");
      }
    }
    break;
  case ExperimentTag::LevelSet:
    if (!train_distribution.s_range) {
      throw InputError("config: level_set needs an s_range in the distributions");
    }
    if (loss.tag != LossKind::Tag::DpgScaled && loss.tag != LossKind::Tag::Dpg) {
      throw InputError("config: level_set trains with the dpg_scaled (or dpg) loss");
    }
    if (train_distribution.mean.size() != 4) {
      throw InputError("config: level_set samples alpha = (a, 1, 1, a) and needs four subdomains");
    }
    if (level_set.alpha_bins < 1 || level_set.s_bins < 1) {
      throw InputError("config.level_set: bin counts must be positive");
    }
    break;
  case ExperimentTag::Fields:
    if (fields.resolution < 1) {
      throw InputError("config.fields.resolution must be positive");
    }
    for (const AlphaParam& a : fields.alphas) {
      a.requirePositive("config.fields.alphas");
      if (a.size() != static_cast<int>(train_distribution.mean.size())) {
        throw InputError("config.fields.alphas: wrong number of components");
      }
    }
    break;
  case ExperimentTag::L2Compare:
    if (!loss.usesDpgSpace()) {
      throw InputError("config: l2_compare needs a DPG-family loss (usually dpg_two_param)");
    }
    break;
  case ExperimentTag::TrainOnly:
    break;
  }
}

void ExperimentConfig::deriveSeeds() {
  train_distribution.seed = deriveSeed(seed, 1);
  test_distribution.seed = deriveSeed(seed, 2);
  train.seed = deriveSeed(seed, 3);
}

ExperimentConfig defaultConfig(ExperimentTag tag) {
  ExperimentConfig c;
  c.experiment = tag;
  c.train_distribution.sigma = 0.1;
  switch (tag) {
  case ExperimentTag::RatioCurves:
    c.train_distribution.sigma = 0.5;
    break;
  case ExperimentTag::LevelSet:
    c.train_distribution.sigma = 0.5;
    c.train_distribution.s_range = SRange{1.0, 100.0};
    c.loss = LossKind::dpgScaled(1.0);
    c.train.learning_rate = 1e-3;
    break;
  case ExperimentTag::L2Compare:
    c.train_distribution.sigma = 0.5;
    c.loss = LossKind::dpgTwoParam(50.0, 100.0);
    c.train.learning_rate = 1e-3;
    break;
  default:
    break;
  }
  c.test_distribution = c.train_distribution;
  if (tag == ExperimentTag::LevelSet) {
    // wide enough that max alpha >= 10 occurs in a few percent of the draws
    c.test_distribution.sigma = 2.0;
  }
  c.output_dir = "vcl-" + experimentName(tag);
  c.deriveSeeds();
  return c;
}

ExperimentConfig parseConfig(std::string_view json_text, std::optional<ExperimentTag> tag) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("format")) {
    if (root["format"] != "vcl-run-manifest" || !root.contains("config")) {
      throw InputError("config: unrecognised document format");
    }
    root = root["config"];
  }
  if (!root.is_object()) {
    throw InputError("config must be a JSON object");
  }

  std::optional<ExperimentTag> named;
  if (root.contains("experiment")) {
    if (!root["experiment"].is_string()) {
      throw InputError("config.experiment must be a string");
    }
    named = parseExperiment(root["experiment"].get<std::string>());
  }
  if (tag && named && *tag != *named) {
    throw InputError("config names experiment '" + experimentName(*named) + "' but '" + experimentName(*tag) +
                     "' was requested");
  }
  if (!tag && !named) {
    throw InputError("config.experiment is missing");
  }

  ExperimentConfig c = defaultConfig(tag ? *tag : *named);
  Section sec(root, "");
  sec.has("experiment");
  sec.read("seed", c.seed);
  c.deriveSeeds();
  sec.read("mesh_n", c.mesh_n);
  if (const json* j = sec.child("train_distribution")) {
    readDistribution(*j, "train_distribution", c.train_distribution);
  }
  if (const json* j = sec.child("test_distribution")) {
    readDistribution(*j, "test_distribution", c.test_distribution);
  }
  if (const json* j = sec.child("loss")) {
    readLoss(*j, c.loss);
  }
  if (const json* j = sec.child("net")) {
    readNet(*j, c.net);
  }
  if (const json* j = sec.child("train")) {
    readTrain(*j, c.train);
  }
  sec.read("test_count", c.test_count);
  sec.read("c0", c.c0);
  sec.read("output_dir", c.output_dir);
  if (const json* j = sec.child("solver")) {
    readSolver(*j, c.solver);
  }
  sec.read("save_checkpoints", c.save_checkpoints);
  sec.read("threads", c.threads);
  if (const json* j = sec.child("tables")) {
    Section t(*j, "tables");
    std::string variant = variantName(c.tables.variant);
    t.read("variant", variant);
    c.tables.variant = parseVariant(variant);
    t.read("cells", c.tables.cells);
    t.finish();
  }
  if (const json* j = sec.child("ratio_curves")) {
    Section r(*j, "ratio_curves");
    r.read("s_values", c.ratio_curves.s_values);
    r.read("scaled_training", c.ratio_curves.scaled_training);
    r.finish();
  }
  if (const json* j = sec.child("level_set")) {
    Section l(*j, "level_set");
    l.read("alpha_bins", c.level_set.alpha_bins);
    l.read("s_bins", c.level_set.s_bins);
    l.read("high_alpha", c.level_set.high_alpha);
    l.read("high_s", c.level_set.high_s);
    l.read("low_s", c.level_set.low_s);
    l.finish();
  }
  if (const json* j = sec.child("fields")) {
    Section f(*j, "fields");
    f.read("resolution", c.fields.resolution);
    if (const json* a = f.child("alphas")) {
      if (!a->is_array()) {
        throw InputError(f.where("alphas") + "must be an array of alpha vectors");
      }
      c.fields.alphas.clear();
      for (const json& row : *a) {
        c.fields.alphas.emplace_back(Section::numbers(row, f.where("alphas")));
      }
    }
    f.finish();
  }
  sec.finish();
  c.validate();
  return c;
}

ExperimentConfig loadConfig(const std::filesystem::path& path, std::optional<ExperimentTag> tag) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open config file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parseConfig(text.str(), tag);
}

std::string configToJson(const ExperimentConfig& c) {
  json j;
  j["experiment"] = experimentName(c.experiment);
  j["seed"] = c.seed;
  j["mesh_n"] = c.mesh_n;
  j["train_distribution"] = distributionJson(c.train_distribution);
  j["test_distribution"] = distributionJson(c.test_distribution);
  j["loss"] = lossJson(c.loss);
  j["net"] = {{"width", c.net.width},
              {"rank", c.net.rank},
              {"blocks", c.net.blocks},
              {"leaky_slope", c.net.leaky_slope},
              {"log_inputs", c.net.log_inputs}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"optimizer", optimizerName(c.train.optimizer)},
                {"num_samples", c.train.num_samples},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"log_every", c.train.log_every}};
  j["test_count"] = c.test_count;
  j["c0"] = c.c0;
  j["output_dir"] = c.output_dir;
  j["solver"] = {{"kind", solverName(c.solver.kind)},
                 {"cg_tolerance", c.solver.cg_tolerance},
                 {"cg_max_iterations", c.solver.cg_max_iterations}};
  j["save_checkpoints"] = c.save_checkpoints;
  j["threads"] = c.threads;
  j["tables"] = {{"variant", variantName(c.tables.variant)}, {"cells", c.tables.cells}};
  j["ratio_curves"] = {{"s_values", c.ratio_curves.s_values}, {"scaled_training", c.ratio_curves.scaled_training}};
  j["level_set"] = {{"alpha_bins", c.level_set.alpha_bins},
                    {"s_bins", c.level_set.s_bins},
                    {"high_alpha", c.level_set.high_alpha},
                    {"high_s", c.level_set.high_s},
                    {"low_s", c.level_set.low_s}};
  json alphas = json::array();
  for (const AlphaParam& a : c.fields.alphas) {
    alphas.push_back(std::vector<double>(a.values().begin(), a.values().end()));
  }
  j["fields"] = {{"resolution", c.fields.resolution}, {"alphas", alphas}};
  return j.dump(2);
}

} // namespace vcl
