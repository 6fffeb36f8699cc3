#include "oracles.hpp"

#include "vcl/errors.hpp"
#include "vcl/fields.hpp"
#include "vcl/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace vcl {
namespace {

using std::numbers::pi;

const ParametricOperators& mesh4() {
  static const ParametricOperators ops = ParametricOperators::build(buildMesh(4));
  return ops;
}

TEST(FoslsSolve, ResidualIsSmall) {
  const auto& ops = mesh4();
  const AlphaParam a{0.01, 1.0, 1.0, 0.01};
  const FoslsSolution sol = solveFOSLS(ops, a);
  const Vector r = ops.fosls.matrix(a) * sol.coeffs - ops.fosls.rhs;
  EXPECT_LE(r.norm(), 1e-10 * ops.fosls.rhs.norm());
}

TEST(FoslsSolve, ZeroSourceGivesZeroSolution) {
  const ParametricOperators ops = ParametricOperators::build(buildMesh(4), Source::constant(0.0));
  EXPECT_EQ(solveFOSLS(ops, AlphaParam{1, 2, 3, 4}).coeffs.norm(), 0.0);
}

TEST(FoslsSolve, RejectsNonPositiveAlpha) {
  EXPECT_THROW(solveFOSLS(mesh4(), AlphaParam{1, 0, 1, 1}), InputError);
  EXPECT_THROW(solveFOSLS(mesh4(), AlphaParam{1, 1, 1}), InputError);
}

TEST(FoslsSolve, RotationSymmetry) {
  const ParametricOperators ops = ParametricOperators::build(buildMesh(6));
  const RotationMap rot = rotation180(ops.mesh);
  const AlphaParam a{0.3, 2.0, 7.0, 0.05};
  const AlphaParam b{0.05, 7.0, 2.0, 0.3};
  const Vector x = solveFOSLS(ops, a).coeffs;
  const Vector y = solveFOSLS(ops, b).coeffs;
  const int ne = ops.fosls.fluxDim();
  const auto& p1 = ops.fosls.layout.blocks[1];
  double worst = 0.0;
  for (int e = 0; e < ne; ++e) {
    worst = std::max(worst, std::abs(y(rot.edge[e]) + x(e)));
  }
  for (std::size_t v = 0; v < ops.mesh.numVertices(); ++v) {
    const int g = p1.entity_to_global[v];
    if (g >= 0) {
      worst = std::max(worst, std::abs(y(ne + p1.entity_to_global[rot.vertex[v]]) - x(ne + g)));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(FoslsSolve, ConjugateGradientAgreesWithDirect) {
  const auto& ops = mesh4();
  const AlphaParam a{0.5, 1.5, 2.5, 3.5};
  SolverOptions cg;
  cg.kind = LinearSolverKind::ConjugateGradient;
  const Vector x = solveFOSLS(ops, a).coeffs;
  const Vector y = solveFOSLS(ops, a, cg).coeffs;
  EXPECT_LT((x - y).norm(), 1e-8 * x.norm());
}

TEST(FoslsSolve, ReusedSolverIsDeterministic) {
  const auto& ops = mesh4();
  FoslsSolver solver(ops);
  const AlphaParam a{0.2, 3.0, 1.0, 9.0};
  const Vector x = solver.solve(a).coeffs;
  solver.solve(AlphaParam{1, 1, 1, 1});
  const Vector y = solver.solve(a).coeffs;
  EXPECT_EQ(x, y);
}

TEST(FoslsSolve, ConvergesForSmoothSolution) {
  const Source f{[](const Point& p) { return 2.0 * pi * pi * std::sin(pi * p.x()) * std::sin(pi * p.y()); }};
  const ScalarFn u = [](const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
  const VectorFn q = [](const Point& p) {
    return Vec2(-pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), -pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
  };
  std::vector<SquaredErrors> errs;
  for (int n : {4, 8, 16}) {
    const ParametricOperators ops = ParametricOperators::build(buildMesh(n), f);
    errs.push_back(foslsL2Error(ops, solveFOSLS(ops, AlphaParam::constant(1.0)).coeffs, q, u));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GT(0.5 * std::log2(errs[i - 1].u / errs[i].u), 1.7);
    EXPECT_GT(0.5 * std::log2(errs[i - 1].q / errs[i].q), 0.85);
  }
}

TEST(DpgSolve, MatchesDenseSaddleSystem) {
  const auto& ops = mesh4();
  const AlphaParam a = AlphaParam::constant(1.0);
  const DpgSolution sol = solveDPG(ops, a, 1.0);
  const oracle::SaddleSolution ref = oracle::denseSaddleSolve(ops, a, 1.0);
  EXPECT_LT((sol.coeffs - ref.x).norm(), 1e-10 * ref.x.norm());
  Vector e(ops.dpg.testDim());
  for (int k = 0; k < ops.dpg.numElements(); ++k) {
    e.segment<kTestDofsPerElement>(kTestDofsPerElement * k) = sol.err_rep[k];
  }
  EXPECT_LT((e - ref.err_rep).norm(), 1e-10 * ref.err_rep.norm());
}

TEST(DpgSolve, ErrorRepresentationIsOrthogonalToTrialSpace) {
  const auto& ops = mesh4();
  const Vector f = ops.dpg.load();
  for (const AlphaParam& a : {AlphaParam{1, 1, 1, 1}, AlphaParam{0.01, 1, 1, 0.01}, AlphaParam{100, 0.1, 3, 40}}) {
    for (double s : {1.0, 10.0, 100.0}) {
      const DpgSolution sol = solveDPG(ops, a, s);
      Vector e(ops.dpg.testDim());
      for (int k = 0; k < ops.dpg.numElements(); ++k) {
        e.segment<kTestDofsPerElement>(kTestDofsPerElement * k) = sol.err_rep[k];
      }
      const RowSparseMatrix b = ops.dpg.matrix(a);
      const Vector bte = b.transpose() * e;
      if (s <= 10.0) {
        EXPECT_LE(bte.cwiseAbs().maxCoeff(), 1e-9 * f.norm());
      } else {
        // e grows like s^2, so the attainable accuracy is relative to |B|^T |e|
        const Vector scale = b.cwiseAbs().transpose() * e.cwiseAbs();
        EXPECT_LE(bte.cwiseAbs().maxCoeff(), 1e-12 * scale.maxCoeff());
      }
    }
  }
}

TEST(DpgSolve, ZeroSourceGivesZeroSolution) {
  const ParametricOperators ops = ParametricOperators::build(buildMesh(4), Source::constant(0.0));
  const DpgSolution sol = solveDPG(ops, AlphaParam{1, 2, 3, 4}, 2.0);
  EXPECT_EQ(sol.coeffs.norm(), 0.0);
  EXPECT_EQ(sol.err_norm_sq, 0.0);
}

TEST(DpgSolve, RejectsBadInputs) {
  EXPECT_THROW(solveDPG(mesh4(), AlphaParam{1, 1, 1, 1}, 0.0), InputError);
  EXPECT_THROW(solveDPG(mesh4(), AlphaParam{1, -1, 1, 1}, 1.0), InputError);
}

TEST(DpgSolve, RotationSymmetry) {
  const ParametricOperators ops = ParametricOperators::build(buildMesh(6));
  const RotationMap rot = rotation180(ops.mesh);
  const Vector x = solveDPG(ops, AlphaParam{0.3, 2.0, 7.0, 0.05}, 3.0).coeffs;
  const Vector y = solveDPG(ops, AlphaParam{0.05, 7.0, 2.0, 0.3}, 3.0).coeffs;
  const int nt = ops.dpg.numElements();
  double worst = 0.0;
  for (int k = 0; k < nt; ++k) {
    const int r = rot.elem[k];
    worst = std::max(worst, std::abs(y(2 * r) + x(2 * k)));
    worst = std::max(worst, std::abs(y(2 * r + 1) + x(2 * k + 1)));
    worst = std::max(worst, std::abs(y(2 * nt + r) - x(2 * nt + k)));
  }
  const int qo = ops.dpg.traceQOffset();
  for (std::size_t e = 0; e < ops.mesh.numEdges(); ++e) {
    worst = std::max(worst, std::abs(y(qo + rot.edge[e]) + x(qo + static_cast<int>(e))));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(DpgSolve, CloseToFoslsForBenignAlpha) {
  // the difference of the two scalar fields should shrink under refinement
  const AlphaParam a{0.0904, 0.7255, 0.9192, 0.1948};
  std::vector<double> diff;
  for (int n : {4, 8, 16}) {
    const ParametricOperators ops = ParametricOperators::build(buildMesh(n));
    const Vector fos = solveFOSLS(ops, a).coeffs;
    const Vector dpg = liftTraces(ops, solveDPG(ops, a, 1.0).coeffs);
    diff.push_back(std::sqrt(foslsMassNorms(ops, fos - dpg).u));
  }
  EXPECT_LT(diff[1], 0.6 * diff[0]);
  EXPECT_LT(diff[2], 0.6 * diff[1]);
  EXPECT_LT(diff[2], 1e-3);
}

TEST(DpgSolve, InteriorConvergesForSmoothSolution) {
  const Source f{[](const Point& p) { return 2.0 * pi * pi * std::sin(pi * p.x()) * std::sin(pi * p.y()); }};
  const ScalarFn u = [](const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
  const VectorFn q = [](const Point& p) {
    return Vec2(-pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), -pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
  };
  std::vector<double> err;
  for (int n : {4, 8, 16}) {
    const ParametricOperators ops = ParametricOperators::build(buildMesh(n), f);
    err.push_back(dpgInteriorL2Error(ops, solveDPG(ops, AlphaParam::constant(1.0), 1.0).coeffs, q, u).u);
  }
  EXPECT_GT(0.5 * std::log2(err[1] / err[2]), 0.9);
}

TEST(RieszSolve, ZeroResidualGivesZero) {
  const auto& ops = mesh4();
  const std::vector<Vector22> r(ops.dpg.numElements(), Vector22::Zero());
  for (const auto& e : localRieszSolve(ops, AlphaParam{1, 2, 3, 4}, 2.0, r)) {
    EXPECT_EQ(e.norm(), 0.0);
  }
}

TEST(RieszSolve, MatchesBlockDiagonalDenseSolve) {
  const ParametricOperators ops = ParametricOperators::build(buildMesh(2));
  std::mt19937_64 rng(5);
  const AlphaParam a = oracle::randomAlpha(rng);
  const double s = 4.0;
  std::vector<Vector22> r(ops.dpg.numElements());
  Vector flat(ops.dpg.testDim());
  for (int k = 0; k < ops.dpg.numElements(); ++k) {
    r[k] = oracle::randomVector(rng, kTestDofsPerElement);
    flat.segment<kTestDofsPerElement>(kTestDofsPerElement * k) = r[k];
  }
  const Vector ref = oracle::globalGram(ops, a, s).ldlt().solve(flat);
  const auto eps = localRieszSolve(ops, a, s, r);
  for (int k = 0; k < ops.dpg.numElements(); ++k) {
    const Vector22 e = ref.segment<kTestDofsPerElement>(kTestDofsPerElement * k);
    EXPECT_LT((eps[k] - e).norm(), 1e-12 * e.norm());
  }
}

TEST(RieszSolve, RejectsWrongBlockCount) {
  const std::vector<Vector22> r(3, Vector22::Zero());
  EXPECT_THROW(localRieszSolve(mesh4(), AlphaParam{1, 1, 1, 1}, 1.0, r), InputError);
}

TEST(GramFactors, ConditionEstimateGrowsWithS) {
  const auto& ops = mesh4();
  const AlphaParam a{1, 1, 1, 1};
  EXPECT_LT(GramFactors(ops.dpg, a, 1.0).conditionEstimate(), GramFactors(ops.dpg, a, 1e4).conditionEstimate());
}

} // namespace
} // namespace vcl
