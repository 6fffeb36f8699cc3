#include "vcl/network.hpp"

#include "vcl/errors.hpp"
#include "vcl/sampling.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace vcl {

void NetConfig::validate() const {
  if (m_alpha <= 0 || m_h <= 0 || width <= 0 || rank <= 0 || blocks < 0) {
    throw InputError("network: dimensions must be positive");
  }
  if (rank > width) {
    throw InputError("network: rank must not exceed width");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw InputError("network: leaky slope must lie in [0, 1)");
  }
}

std::size_t NetConfig::numParams() const {
  return ParamLayout(*this).total;
}

ParamLayout::ParamLayout(const NetConfig& cfg) {
  cfg.validate();
  auto add = [this](std::string name, int rows, int cols, int fan_in) {
    slots.push_back({std::move(name), total, rows, cols, fan_in});
    total += static_cast<std::size_t>(rows) * cols;
  };
  add("A_in", cfg.width, cfg.m_alpha, cfg.m_alpha);
  add("b_in", cfg.width, 1, 0);
  for (int m = 0; m < cfg.blocks; ++m) {
    const std::string tag = std::to_string(m + 1);
    add("A_" + tag, cfg.width, cfg.rank, cfg.rank);
    add("W_" + tag, cfg.rank, cfg.width, cfg.width);
    add("b_" + tag, cfg.rank, 1, 0);
  }
  add("A_out", cfg.m_h, cfg.width, cfg.width);
  add("b_out", cfg.m_h, 1, 0);
}

NetParams::NetParams(const NetConfig& cfg) : cfg_(cfg), layout_(cfg), theta_(Vector::Zero(layout_.total)) {}

NetParams::MatrixView NetParams::matrix(int slot) {
  const auto& s = layout_.slots[slot];
  return {theta_.data() + s.offset, s.rows, s.cols};
}

NetParams::ConstMatrixView NetParams::matrix(int slot) const {
  const auto& s = layout_.slots[slot];
  return {theta_.data() + s.offset, s.rows, s.cols};
}

NetParams::VectorView NetParams::vector(int slot) {
  const auto& s = layout_.slots[slot];
  return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows) * s.cols};
}

NetParams::ConstVectorView NetParams::vector(int slot) const {
  const auto& s = layout_.slots[slot];
  return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows) * s.cols};
}

NetParams initParams(const NetConfig& cfg, std::uint64_t seed) {
  NetParams p(cfg);
  Rng rng(seed);
  for (const auto& slot : p.layout().slots) {
    if (slot.fan_in == 0) {
      continue;
    }
    const double bound = std::sqrt(1.0 / slot.fan_in);
    const std::size_t n = static_cast<std::size_t>(slot.rows) * slot.cols;
    for (std::size_t i = 0; i < n; ++i) {
      p.flat()(slot.offset + i) = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  return p;
}

Vector netInput(const AlphaParam& alpha, std::optional<double> s) {
  Vector p(alpha.size() + (s ? 1 : 0));
  for (int i = 0; i < alpha.size(); ++i) {
    p(i) = alpha[i];
  }
  if (s) {
    p(alpha.size()) = *s;
  }
  return p;
}

double leakyRelu(double y, double slope) {
  return std::max(y, slope * y);
}

namespace {

Matrix transformInputs(const NetConfig& cfg, const Matrix& inputs) {
  if (inputs.rows() != cfg.m_alpha) {
    throw InputError("forward: input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(cfg.m_alpha));
  }
  if (!cfg.log_inputs) {
    return inputs;
  }
  if ((inputs.array() <= 0.0).any()) {
    throw InputError("forward: log inputs require positive values");
  }
  return inputs.array().log().matrix();
}

} // namespace

Matrix forward(const NetParams& params, const Matrix& inputs, ForwardCache* cache) {
  const NetConfig& cfg = params.config();
  const Matrix p = transformInputs(cfg, inputs);
  const double slope = cfg.leaky_slope;

  Matrix z = params.inWeight() * p;
  z.colwise() += params.inBias();
  if (cache) {
    cache->input = p;
    cache->z.assign(1, z);
    cache->pre.clear();
  }
  for (int m = 0; m < cfg.blocks; ++m) {
    Matrix y = params.down(m) * z;
    y.colwise() += params.blockBias(m);
    if (cache) {
      cache->pre.push_back(y);
    }
    z.noalias() += params.up(m) * y.unaryExpr([slope](double v) { return leakyRelu(v, slope); });
    if (cache) {
      cache->z.push_back(z);
    }
  }
  Matrix out = params.outWeight() * z;
  out.colwise() += params.outBias();
  return out;
}

Vector forward(const NetParams& params, const Vector& input) {
  return forward(params, Matrix(input), nullptr).col(0);
}

NetParams backward(const NetParams& params, const ForwardCache& cache, const Matrix& d_out) {
  const NetConfig& cfg = params.config();
  if (cache.empty() || static_cast<int>(cache.z.size()) != cfg.blocks + 1) {
    throw InputError("backward: no cached activations for this network");
  }
  if (d_out.rows() != cfg.m_h || d_out.cols() != cache.batch()) {
    throw InputError("backward: output gradient shape does not match the cached batch");
  }
  const double slope = cfg.leaky_slope;
  const ParamLayout& lay = params.layout();
  NetParams grad(cfg);

  grad.matrix(lay.outWeight()).noalias() = d_out * cache.z.back().transpose();
  grad.vector(lay.outBias()) = d_out.rowwise().sum();
  Matrix dz = params.outWeight().transpose() * d_out;

  for (int m = cfg.blocks - 1; m >= 0; --m) {
    const Matrix& y = cache.pre[m];
    const Matrix& z_prev = cache.z[m];
    // the slope-1 branch at y = 0 is the subgradient used
    const Matrix act = y.unaryExpr([slope](double v) { return leakyRelu(v, slope); });
    grad.matrix(ParamLayout::blockUp(m)).noalias() = dz * act.transpose();
    Matrix dy = params.up(m).transpose() * dz;
    dy.array() *= y.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }).array();
    grad.matrix(ParamLayout::blockDown(m)).noalias() = dy * z_prev.transpose();
    grad.vector(ParamLayout::blockBias(m)) = dy.rowwise().sum();
    dz.noalias() += params.down(m).transpose() * dy;
  }
  grad.matrix(ParamLayout::inWeight()).noalias() = dz * cache.input.transpose();
  grad.vector(ParamLayout::inBias()) = dz.rowwise().sum();
  return grad;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using json = nlohmann::json;

constexpr const char* kCheckpointFormat = "vcl-net-checkpoint";
constexpr int kCheckpointVersion = 1;

} // namespace

void saveCheckpoint(std::ostream& out, const NetParams& params) {
  const NetConfig& cfg = params.config();
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = {{"m_alpha", cfg.m_alpha}, {"m_h", cfg.m_h},           {"width", cfg.width},
                 {"rank", cfg.rank},       {"blocks", cfg.blocks},     {"leaky_slope", cfg.leaky_slope},
                 {"log_inputs", cfg.log_inputs}};
  json tensors = json::array();
  for (const auto& slot : params.layout().slots) {
    json t;
    t["name"] = slot.name;
    t["shape"] = {slot.rows, slot.cols};
    std::vector<double> data(params.flat().data() + slot.offset,
                             params.flat().data() + slot.offset + static_cast<std::size_t>(slot.rows) * slot.cols);
    for (double v : data) {
      if (!std::isfinite(v)) {
        throw NumericalError("saveCheckpoint: tensor " + slot.name + " holds a non-finite value");
      }
    }
    t["data"] = std::move(data);
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  // nlohmann writes the shortest round-trip representation of each double
  out << j.dump() << '\n';
}

NetParams loadCheckpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
    if (j.at("format") != kCheckpointFormat || j.at("version") != kCheckpointVersion) {
      throw InputError("loadCheckpoint: unsupported checkpoint format");
    }
    const json& c = j.at("config");
    NetConfig cfg;
    cfg.m_alpha = c.at("m_alpha").get<int>();
    cfg.m_h = c.at("m_h").get<int>();
    cfg.width = c.at("width").get<int>();
    cfg.rank = c.at("rank").get<int>();
    cfg.blocks = c.at("blocks").get<int>();
    cfg.leaky_slope = c.at("leaky_slope").get<double>();
    cfg.log_inputs = c.at("log_inputs").get<bool>();
    NetParams p(cfg);
    const json& tensors = j.at("tensors");
    if (tensors.size() != p.layout().slots.size()) {
      throw InputError("loadCheckpoint: tensor count does not match the config");
    }
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const auto& slot = p.layout().slots[k];
      const json& t = tensors[k];
      if (t.at("name") != slot.name || t.at("shape")[0] != slot.rows || t.at("shape")[1] != slot.cols) {
        throw InputError("loadCheckpoint: tensor " + slot.name + " has the wrong name or shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != static_cast<std::size_t>(slot.rows) * slot.cols) {
        throw InputError("loadCheckpoint: tensor " + slot.name + " has the wrong length");
      }
      std::copy(data.begin(), data.end(), p.flat().data() + slot.offset);
    }
    return p;
  } catch (const json::exception& e) {
    throw InputError(std::string("loadCheckpoint: ") + e.what());
  }
}

void saveCheckpoint(const std::string& path, const NetParams& params) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("saveCheckpoint: cannot open " + path);
  }
  saveCheckpoint(out, params);
}

NetParams loadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("loadCheckpoint: cannot open " + path);
  }
  return loadCheckpoint(in);
}

} // namespace vcl
