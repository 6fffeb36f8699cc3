#include "vcl/solvers.hpp"

#include "vcl/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <spdlog/spdlog.h>

#include <atomic>
#include <sstream>
#include <string>

namespace vcl {

namespace {

std::string describe(const AlphaParam& alpha) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha = (";
  for (int i = 0; i < alpha.size(); ++i) {
    os << (i ? ", " : "") << alpha[i];
  }
  os << ')';
  return os.str();
}

std::atomic<int> g_condition_warnings{0};

Vector solveSpd(Eigen::SimplicialLDLT<SparseMatrix>& ldlt, bool& analyzed, const SparseMatrix& a, const Vector& b,
                const SolverOptions& options, const AlphaParam& alpha, const char* what) {
  if (options.kind == LinearSolverKind::ConjugateGradient) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(options.cg_tolerance);
    cg.setMaxIterations(options.cg_max_iterations);
    cg.compute(a);
    Vector x = cg.solve(b);
    if (cg.info() != Eigen::Success) {
      throw NumericalError(std::string(what) + ": conjugate gradient did not converge for " + describe(alpha));
    }
    return x;
  }
  if (!analyzed) {
    ldlt.analyzePattern(a);
    analyzed = true;
  }
  ldlt.factorize(a);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": factorization failed for " + describe(alpha));
  }
  Vector x = ldlt.solve(b);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) {
    throw NumericalError(std::string(what) + ": solve failed for " + describe(alpha));
  }
  return x;
}

} // namespace

// ---------------------------------------------------------------------------
// GramFactors

GramFactors::GramFactors(const DpgOperators& ops, const AlphaParam& alpha, double s)
    : ops_(&ops), alpha_(alpha), s_(s), num_subdomains_(alpha.size()) {
  if (!(s > 0.0)) {
    throw InputError("GramFactors: s must be positive");
  }
  alpha.requirePositive("GramFactors");
  const auto nclass = ops.gram_classes.size();
  factors_.resize(nclass * static_cast<std::size_t>(num_subdomains_));
  for (std::size_t c = 0; c < nclass; ++c) {
    for (int i = 0; i < num_subdomains_; ++i) {
      Matrix22 g = ops.gram_classes[c].combine(alpha[i], s);
      Factor& f = factors_[c * num_subdomains_ + i];
      f.scale = g.diagonal().cwiseSqrt().cwiseInverse();
      g = f.scale.asDiagonal() * g * f.scale.asDiagonal();
      f.llt.compute(g);
      if (f.llt.info() != Eigen::Success) {
        throw NumericalError("GramFactors: local Gram matrix is not positive definite (" + describe(alpha) +
                             ", s = " + std::to_string(s) + ")");
      }
      const auto diag = f.llt.matrixLLT().diagonal();
      const double ratio = diag.maxCoeff() / diag.minCoeff();
      max_condition_ = std::max(max_condition_, ratio * ratio);
    }
  }
  groups_.resize(factors_.size());
  for (int k = 0; k < ops.numElements(); ++k) {
    groups_[static_cast<std::size_t>(ops.elem_gram_class[k]) * num_subdomains_ + ops.elem_subdomain[k]].push_back(k);
  }
  if (max_condition_ > kGramConditionWarning && g_condition_warnings.fetch_add(1) < 5) {
    spdlog::warn("local Gram condition estimate {:.3e} exceeds {:.0e} ({}, s = {})", max_condition_,
                 kGramConditionWarning, describe(alpha), s);
  }
}

const GramFactors::Factor& GramFactors::factorFor(int elem) const {
  const int cls = ops_->elem_gram_class[elem];
  return factors_[static_cast<std::size_t>(cls) * num_subdomains_ + ops_->elem_subdomain[elem]];
}

Vector22 GramFactors::solve(int elem, const Vector22& rhs) const {
  const Factor& f = factorFor(elem);
  return f.scale.cwiseProduct(f.llt.solve(f.scale.cwiseProduct(rhs)));
}

TrialBlock GramFactors::solve(int elem, const TrialBlock& rhs) const {
  const Factor& f = factorFor(elem);
  return f.scale.asDiagonal() * f.llt.solve(f.scale.asDiagonal() * rhs);
}

void GramFactors::solveAll(Eigen::Matrix<double, kTestDofsPerElement, Eigen::Dynamic>& blocks) const {
  if (blocks.cols() != ops_->numElements()) {
    throw InputError("GramFactors::solveAll: expected one column per element");
  }
  Eigen::Matrix<double, kTestDofsPerElement, Eigen::Dynamic> work;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const std::vector<int>& elems = groups_[g];
    if (elems.empty()) {
      continue;
    }
    const Factor& f = factors_[g];
    work.resize(kTestDofsPerElement, static_cast<Eigen::Index>(elems.size()));
    for (std::size_t j = 0; j < elems.size(); ++j) {
      work.col(static_cast<Eigen::Index>(j)) = f.scale.cwiseProduct(blocks.col(elems[j]));
    }
    f.llt.solveInPlace(work);
    for (std::size_t j = 0; j < elems.size(); ++j) {
      blocks.col(elems[j]) = f.scale.cwiseProduct(work.col(static_cast<Eigen::Index>(j)));
    }
  }
}

std::vector<Vector22> localRieszSolve(const GramFactors& factors, std::span<const Vector22> residual_blocks) {
  std::vector<Vector22> eps(residual_blocks.size());
  for (std::size_t k = 0; k < residual_blocks.size(); ++k) {
    eps[k] = factors.solve(static_cast<int>(k), residual_blocks[k]);
  }
  return eps;
}

std::vector<Vector22> localRieszSolve(const ParametricOperators& ops, const AlphaParam& alpha, double s,
                                      std::span<const Vector22> residual_blocks) {
  if (static_cast<int>(residual_blocks.size()) != ops.dpg.numElements()) {
    throw InputError("localRieszSolve: expected one residual block per element");
  }
  ops.checkAlpha(alpha, "localRieszSolve");
  return localRieszSolve(GramFactors(ops.dpg, alpha, s), residual_blocks);
}

Vector9 gatherLocal(const DpgElementBlock& block, const Vector& coeffs) {
  Vector9 local;
  for (int j = 0; j < 9; ++j) {
    local(j) = block.dofs[j] >= 0 ? coeffs(block.dofs[j]) : 0.0;
  }
  return local;
}

// ---------------------------------------------------------------------------
// FOSLS

FoslsSolver::FoslsSolver(const ParametricOperators& ops, SolverOptions options) : ops_(&ops), options_(options) {}

FoslsSolution FoslsSolver::solve(const AlphaParam& alpha) {
  ops_->checkAlpha(alpha, "solveFOSLS");
  FoslsSolution sol;
  sol.alpha = alpha;
  sol.coeffs = solveSpd(ldlt_, analyzed_, ops_->fosls.matrix(alpha), ops_->fosls.rhs, options_, alpha, "solveFOSLS");
  return sol;
}

FoslsSolution solveFOSLS(const ParametricOperators& ops, const AlphaParam& alpha, SolverOptions options) {
  FoslsSolver solver(ops, options);
  return solver.solve(alpha);
}

// ---------------------------------------------------------------------------
// DPG

DpgSolver::DpgSolver(const ParametricOperators& ops, SolverOptions options) : ops_(&ops), options_(options) {}

void DpgSolver::condense(const GramFactors& factors, SparseMatrix& schur, Vector& rhs) const {
  const DpgOperators& dpg = ops_->dpg;
  std::vector<double> values(static_cast<std::size_t>(dpg.schur_pattern.nonZeros()), 0.0);
  rhs = Vector::Zero(dpg.dim());
  for (int k = 0; k < dpg.numElements(); ++k) {
    const DpgElementBlock& blk = dpg.blocks[k];
    const TrialBlock b = dpg.elementMatrix(k, factors.alpha());
    const TrialBlock ginv_b = factors.solve(k, b);
    const Eigen::Matrix<double, 9, 9> local = b.transpose() * ginv_b;
    const Vector9 local_rhs = ginv_b.transpose() * blk.load;
    dpg.schur_pattern.scatter(k, local, values);
    for (int j = 0; j < 9; ++j) {
      if (blk.dofs[j] >= 0) {
        rhs(blk.dofs[j]) += local_rhs(j);
      }
    }
  }
  schur = dpg.schur_pattern.withValues(values);
}

DpgSolution DpgSolver::solve(const AlphaParam& alpha, double s) {
  ops_->checkAlpha(alpha, "solveDPG");
  if (!(s > 0.0)) {
    throw InputError("solveDPG: s must be positive");
  }
  const DpgOperators& dpg = ops_->dpg;
  const GramFactors factors(dpg, alpha, s);
  SparseMatrix schur;
  Vector rhs;
  condense(factors, schur, rhs);

  DpgSolution sol;
  sol.alpha = alpha;
  sol.s = s;
  sol.coeffs = solveSpd(ldlt_, analyzed_, schur, rhs, options_, alpha, "solveDPG");
  sol.err_rep.resize(dpg.numElements());
  for (int k = 0; k < dpg.numElements(); ++k) {
    const DpgElementBlock& blk = dpg.blocks[k];
    const Vector22 r = blk.load - dpg.elementMatrix(k, alpha) * gatherLocal(blk, sol.coeffs);
    // the same factors that built the Schur system keep B^T e orthogonal
    sol.err_rep[k] = factors.solve(k, r);
    sol.err_norm_sq += r.dot(sol.err_rep[k]);
  }
  return sol;
}

DpgSolution solveDPG(const ParametricOperators& ops, const AlphaParam& alpha, double s, SolverOptions options) {
  DpgSolver solver(ops, options);
  return solver.solve(alpha, s);
}

} // namespace vcl
