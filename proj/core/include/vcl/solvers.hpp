#pragma once

#include "vcl/assembly.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <memory>
#include <span>
#include <vector>

namespace vcl {

enum class LinearSolverKind { Direct, ConjugateGradient };

struct SolverOptions {
  LinearSolverKind kind = LinearSolverKind::Direct;
  /// Relative residual target for the diagonally preconditioned CG path.
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 20000;
};

struct FoslsSolution {
  Vector coeffs;
  AlphaParam alpha;
};

struct DpgSolution {
  Vector coeffs;
  /// Error representation e_h, one 22-vector per element.
  std::vector<Vector22> err_rep;
  AlphaParam alpha;
  double s = 1.0;
  /// ||e_h||^2 in the s-scaled broken graph norm.
  double err_norm_sq = 0.0;
};

/// Cholesky factors of the element Gram matrices G_K(alpha_K, s).
///
/// G_K depends only on the element's congruence class and the subdomain
/// value alpha_K, so one factorization per (class, subdomain) pair serves
/// every element. Factors are computed on the diagonally scaled matrix.
class GramFactors {
public:
  GramFactors(const DpgOperators& ops, const AlphaParam& alpha, double s);

  [[nodiscard]] Vector22 solve(int elem, const Vector22& rhs) const;
  /// Applies G_K^{-1} to every column of a local block.
  [[nodiscard]] TrialBlock solve(int elem, const TrialBlock& rhs) const;
  /// Column k of `blocks` holds element k's right-hand side; overwritten by
  /// G_K^{-1} applied to it. Elements sharing a factor are solved together.
  void solveAll(Eigen::Matrix<double, kTestDofsPerElement, Eigen::Dynamic>& blocks) const;
  [[nodiscard]] const AlphaParam& alpha() const { return alpha_; }
  [[nodiscard]] double s() const { return s_; }
  /// Largest diagonally scaled condition estimate among the factors.
  [[nodiscard]] double conditionEstimate() const { return max_condition_; }

private:
  struct Factor {
    Vector22 scale;
    Eigen::LLT<Matrix22> llt;
  };
  [[nodiscard]] const Factor& factorFor(int elem) const;

  const DpgOperators* ops_;
  AlphaParam alpha_;
  double s_;
  int num_subdomains_;
  std::vector<Factor> factors_;
  /// Elements served by each factor.
  std::vector<std::vector<int>> groups_;
  double max_condition_ = 0.0;
};

/// Condition estimates above this trigger a warning.
inline constexpr double kGramConditionWarning = 1e12;

/// Solves G_K eps_K = r_K element by element.
std::vector<Vector22> localRieszSolve(const ParametricOperators& ops, const AlphaParam& alpha, double s,
                                      std::span<const Vector22> residual_blocks);
std::vector<Vector22> localRieszSolve(const GramFactors& factors, std::span<const Vector22> residual_blocks);

/// Reusable FOSLS solver: the sparsity analysis is done once per mesh.
class FoslsSolver {
public:
  explicit FoslsSolver(const ParametricOperators& ops, SolverOptions options = {});
  FoslsSolution solve(const AlphaParam& alpha);

private:
  const ParametricOperators* ops_;
  SolverOptions options_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;
};

/// Reusable DPG solver: condenses the element Gram blocks into the SPD
/// system B^T G^{-1} B x = B^T G^{-1} F and recovers e_h = G^{-1}(F - B x).
class DpgSolver {
public:
  explicit DpgSolver(const ParametricOperators& ops, SolverOptions options = {});
  DpgSolution solve(const AlphaParam& alpha, double s);

  /// Schur complement matrix and right-hand side for given factors.
  void condense(const GramFactors& factors, SparseMatrix& schur, Vector& rhs) const;

private:
  const ParametricOperators* ops_;
  SolverOptions options_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;
};

FoslsSolution solveFOSLS(const ParametricOperators& ops, const AlphaParam& alpha, SolverOptions options = {});
DpgSolution solveDPG(const ParametricOperators& ops, const AlphaParam& alpha, double s,
                     SolverOptions options = {});

/// Gathers the local coefficient vector of element k (zero for inactive dofs).
Vector9 gatherLocal(const DpgElementBlock& block, const Vector& coeffs);

} // namespace vcl
