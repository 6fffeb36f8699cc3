#pragma once

#include "vcl/fespaces.hpp"
#include "vcl/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace vcl {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Piecewise-constant inverse diffusivity, one value per subdomain.
class AlphaParam {
public:
  AlphaParam() = default;
  explicit AlphaParam(std::vector<double> values);
  AlphaParam(std::initializer_list<double> values) : AlphaParam(std::vector<double>(values)) {}

  static AlphaParam constant(double value, int count = 4) {
    return AlphaParam(std::vector<double>(count, value));
  }

  [[nodiscard]] int size() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] double operator[](int i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double min() const;
  [[nodiscard]] double max() const;
  /// Throws InputError unless every value is strictly positive and finite.
  void requirePositive(const char* where) const;

  friend bool operator==(const AlphaParam&, const AlphaParam&) = default;

private:
  std::vector<double> values_;
};

/// f in -div(alpha^{-1} grad u) = f. The constant default is f = 1.
struct Source {
  std::function<double(const Point&)> fn = [](const Point&) { return 1.0; };

  static Source constant(double value) {
    return Source{[value](const Point&) { return value; }};
  }
  double operator()(const Point& x) const { return fn(x); }
};

/// CSC pattern shared by a family of symmetric matrices assembled from
/// element blocks. `slot(k, i, j)` is the position in the value array that
/// receives local entry (i, j) of element k, or -1 for inactive dofs.
class SymmetricPattern {
public:
  SymmetricPattern() = default;
  SymmetricPattern(int dim, const std::vector<std::vector<int>>& element_dofs);

  [[nodiscard]] int dim() const { return static_cast<int>(skeleton_.rows()); }
  [[nodiscard]] Eigen::Index nonZeros() const { return skeleton_.nonZeros(); }
  [[nodiscard]] int localDim(int elem) const { return local_dims_[elem]; }
  [[nodiscard]] int slot(int elem, int i, int j) const {
    return slots_[offsets_[elem] + i * local_dims_[elem] + j];
  }
  /// Matrix with this pattern and the given values.
  [[nodiscard]] SparseMatrix withValues(std::span<const double> values) const;

  template <class Block>
  void scatter(int elem, const Block& local, std::vector<double>& values) const {
    const int n = local_dims_[elem];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int s = slot(elem, i, j);
        if (s >= 0) {
          values[s] += local(i, j);
        }
      }
    }
  }

private:
  SparseMatrix skeleton_;
  std::vector<int> local_dims_;
  std::vector<std::size_t> offsets_;
  std::vector<int> slots_;
};

// ---------------------------------------------------------------------------
// FOSLS: S(alpha) = S0 + sum_i (alpha_i S1_i + alpha_i^2 S2_i)

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Local trial functions: three RT0 edge fluxes then three P1 vertex values.
struct FoslsElementBlock {
  std::array<int, 6> dofs{};
  Matrix6 alpha_sq;
  Matrix6 alpha;
  Matrix6 base;
  Vector6 load;
  Matrix6 mass;
};

struct FoslsOperators {
  ProductLayout layout;
  SymmetricPattern pattern;
  std::vector<int> elem_subdomain;
  std::vector<FoslsElementBlock> blocks;
  std::vector<double> base_values;
  std::vector<std::vector<double>> alpha_values;
  std::vector<std::vector<double>> alpha_sq_values;
  Vector rhs;
  SparseMatrix mass;
  double source_norm_sq = 0.0;

  [[nodiscard]] int dim() const { return layout.total_dim; }
  [[nodiscard]] int fluxDim() const { return layout.blocks[0].total_dim; }
  [[nodiscard]] std::vector<double> matrixValues(const AlphaParam& alpha) const;
  [[nodiscard]] SparseMatrix matrix(const AlphaParam& alpha) const;
  /// S0 for order 0, S1_i for order 1 and S2_i for order 2.
  [[nodiscard]] SparseMatrix component(int order, int subdomain) const;
};

FoslsOperators assembleFOSLS(const TriMesh& mesh, const Source& f = {});

// ---------------------------------------------------------------------------
// DPG: B(alpha) = B0 + sum_i alpha_i B1_i, block rows by element

using Matrix22 = Eigen::Matrix<double, kTestDofsPerElement, kTestDofsPerElement>;
using Vector22 = Eigen::Matrix<double, kTestDofsPerElement, 1>;
using TrialBlock = Eigen::Matrix<double, kTestDofsPerElement, 9>;
using Vector9 = Eigen::Matrix<double, 9, 1>;

/// Local trial layout: (q_x, q_y, u, u-hat at the three vertices, q-hat on
/// the three local edges); boundary u-hat entries carry dof -1.
struct DpgElementBlock {
  std::array<int, 9> dofs{};
  TrialBlock base;
  TrialBlock alpha;
  Vector22 load;
};

/// G_K(alpha_K, s) = alpha_K^2 Ga + alpha_K Gb + Gc + s^-2 Gm.
struct GramComponents {
  Matrix22 alpha_sq;
  Matrix22 alpha;
  Matrix22 base;
  Matrix22 mass;

  [[nodiscard]] Matrix22 combine(double alpha_k, double s) const;
};

struct DpgOperators {
  ProductLayout layout;
  std::vector<int> elem_subdomain;
  std::vector<DpgElementBlock> blocks;
  /// Congruent elements share Gram components.
  std::vector<GramComponents> gram_classes;
  std::vector<int> elem_gram_class;
  SymmetricPattern schur_pattern;
  std::vector<double> elem_area;

  [[nodiscard]] int dim() const { return layout.total_dim; }
  [[nodiscard]] int numElements() const { return static_cast<int>(blocks.size()); }
  [[nodiscard]] int testDim() const { return numElements() * kTestDofsPerElement; }
  [[nodiscard]] int interiorDim() const { return 3 * numElements(); }
  [[nodiscard]] int traceUOffset() const { return layout.offset(2); }
  [[nodiscard]] int traceQOffset() const { return layout.offset(3); }

  [[nodiscard]] RowSparseMatrix matrix(const AlphaParam& alpha) const;
  /// B0 for subdomain -1, otherwise B1_i.
  [[nodiscard]] RowSparseMatrix component(int subdomain) const;
  [[nodiscard]] Vector load() const;
  /// Throws InputError for alpha_k <= 0 or s <= 0.
  [[nodiscard]] Matrix22 gramMatrix(int elem, double alpha_k, double s) const;
  /// Local trial block of element k at the given alpha.
  [[nodiscard]] TrialBlock elementMatrix(int elem, const AlphaParam& alpha) const {
    return blocks[elem].base + alpha[elem_subdomain[elem]] * blocks[elem].alpha;
  }
};

DpgOperators assembleDPG(const TriMesh& mesh, const Source& f = {});

/// Everything needed per mesh; immutable once built.
struct ParametricOperators {
  TriMesh mesh;
  FoslsOperators fosls;
  DpgOperators dpg;
  int num_subdomains = 4;

  static ParametricOperators build(TriMesh mesh, const Source& f = {});

  /// Throws InputError unless alpha has one positive value per subdomain.
  void checkAlpha(const AlphaParam& alpha, const char* where) const;
};

} // namespace vcl
