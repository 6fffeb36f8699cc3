#pragma once

#include "vcl/assembly.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vcl {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Shape of the low-rank residual network
///   z0 = A_in p + b_in,  z_m = z_{m-1} + A_m rho(W_m z_{m-1} + b_m),  out = A_out z_l + b_out.
struct NetConfig {
  int m_alpha = 4;
  int m_h = 0;
  int width = 128;
  int rank = 32;
  int blocks = 13;
  double leaky_slope = 1e-3;
  /// Feed log(p) instead of p; off by default.
  bool log_inputs = false;

  /// Throws InputError unless all dims are positive and rank <= width.
  void validate() const;
  [[nodiscard]] std::size_t numParams() const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Offsets of every tensor inside the flat parameter vector. Matrices are
/// stored row-major, so the flat vector is also the checkpoint layout.
struct ParamLayout {
  struct Slot {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    /// Fan-in used by the initialiser; 0 for biases.
    int fan_in = 0;
  };

  ParamLayout() = default;
  explicit ParamLayout(const NetConfig& cfg);

  std::vector<Slot> slots;
  std::size_t total = 0;

  // slot indices
  [[nodiscard]] static int inWeight() { return 0; }
  [[nodiscard]] static int inBias() { return 1; }
  [[nodiscard]] static int blockUp(int m) { return 2 + 3 * m; }
  [[nodiscard]] static int blockDown(int m) { return 3 + 3 * m; }
  [[nodiscard]] static int blockBias(int m) { return 4 + 3 * m; }
  [[nodiscard]] int outWeight() const { return static_cast<int>(slots.size()) - 2; }
  [[nodiscard]] int outBias() const { return static_cast<int>(slots.size()) - 1; }
};

/// All trainable tensors theta, flattened. Gradients use the same type.
class NetParams {
public:
  NetParams() = default;
  explicit NetParams(const NetConfig& cfg);

  [[nodiscard]] const NetConfig& config() const { return cfg_; }
  [[nodiscard]] const ParamLayout& layout() const { return layout_; }
  [[nodiscard]] Vector& flat() { return theta_; }
  [[nodiscard]] const Vector& flat() const { return theta_; }

  using MatrixView = Eigen::Map<RowMatrix>;
  using ConstMatrixView = Eigen::Map<const RowMatrix>;
  using VectorView = Eigen::Map<Vector>;
  using ConstVectorView = Eigen::Map<const Vector>;

  [[nodiscard]] MatrixView matrix(int slot);
  [[nodiscard]] ConstMatrixView matrix(int slot) const;
  [[nodiscard]] VectorView vector(int slot);
  [[nodiscard]] ConstVectorView vector(int slot) const;

  // named views, in the order of the update rule above
  [[nodiscard]] ConstMatrixView inWeight() const { return matrix(ParamLayout::inWeight()); }
  [[nodiscard]] ConstVectorView inBias() const { return vector(ParamLayout::inBias()); }
  [[nodiscard]] ConstMatrixView up(int m) const { return matrix(ParamLayout::blockUp(m)); }
  [[nodiscard]] ConstMatrixView down(int m) const { return matrix(ParamLayout::blockDown(m)); }
  [[nodiscard]] ConstVectorView blockBias(int m) const { return vector(ParamLayout::blockBias(m)); }
  [[nodiscard]] ConstMatrixView outWeight() const { return matrix(layout_.outWeight()); }
  [[nodiscard]] ConstVectorView outBias() const { return vector(layout_.outBias()); }

private:
  NetConfig cfg_;
  ParamLayout layout_;
  Vector theta_;
};

/// Uniform in +-sqrt(1/fan_in) for weights, zero biases.
NetParams initParams(const NetConfig& cfg, std::uint64_t seed);

/// Network input for one sample: alpha values, then s when present.
Vector netInput(const AlphaParam& alpha, std::optional<double> s);

/// Activations kept by forward for the backward pass; one column per sample.
struct ForwardCache {
  Matrix input;
  /// z_0 .. z_l
  std::vector<Matrix> z;
  /// Pre-activations W_m z_{m-1} + b_m.
  std::vector<Matrix> pre;
  [[nodiscard]] bool empty() const { return z.empty(); }
  [[nodiscard]] int batch() const { return static_cast<int>(input.cols()); }
};

double leakyRelu(double y, double slope = 1e-3);

/// Batched forward pass; inputs and outputs hold one sample per column.
Matrix forward(const NetParams& params, const Matrix& inputs, ForwardCache* cache = nullptr);
Vector forward(const NetParams& params, const Vector& input);

/// Gradient of sum_j <d_out(:, j), F_theta(p_j)> with respect to theta.
/// Throws InputError if the cache is missing or does not match d_out.
NetParams backward(const NetParams& params, const ForwardCache& cache, const Matrix& d_out);

/// Checkpoint: config and row-major tensors with shape headers, as JSON.
void saveCheckpoint(std::ostream& out, const NetParams& params);
NetParams loadCheckpoint(std::istream& in);
void saveCheckpoint(const std::string& path, const NetParams& params);
NetParams loadCheckpoint(const std::string& path);

} // namespace vcl
