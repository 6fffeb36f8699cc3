// Per-sample costs that dominate training and evaluation at the published
// mesh size (n = 10).

#include "vcl/losses.hpp"
#include "vcl/network.hpp"
#include "vcl/solvers.hpp"
#include "vcl/trainer.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace vcl;

const ParametricOperators& ops(int n) {
  static std::map<int, ParametricOperators> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, ParametricOperators::build(buildMesh(n))).first;
  }
  return it->second;
}

const AlphaParam kAlpha{0.1, 1.0, 1.0, 0.1};

void BM_BuildOperators(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ParametricOperators::build(buildMesh(n)));
  }
}
BENCHMARK(BM_BuildOperators)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SolveFosls(benchmark::State& state) {
  const auto& o = ops(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solveFOSLS(o, kAlpha).coeffs);
  }
}
BENCHMARK(BM_SolveFosls)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_SolveDpg(benchmark::State& state) {
  const auto& o = ops(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solveDPG(o, kAlpha, 1.0).coeffs);
  }
}
BENCHMARK(BM_SolveDpg)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_FoslsLossGrad(benchmark::State& state) {
  const auto& o = ops(10);
  const Vector w = Vector::Constant(o.fosls.dim(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(foslsLossAndGrad(o, w, kAlpha).value);
  }
}
BENCHMARK(BM_FoslsLossGrad)->Unit(benchmark::kMicrosecond);

void BM_DpgLossGrad(benchmark::State& state) {
  const auto& o = ops(10);
  const Vector w = Vector::Constant(o.dpg.dim(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluateLoss(o, LossKind::dpg(1.0), kAlpha, w, true).value);
  }
}
BENCHMARK(BM_DpgLossGrad)->Unit(benchmark::kMicrosecond);

void BM_TwoParamLossGrad(benchmark::State& state) {
  const auto& o = ops(10);
  const Vector w = Vector::Constant(o.dpg.dim(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluateLoss(o, LossKind::dpgTwoParam(50.0, 100.0), kAlpha, w, true).value);
  }
}
BENCHMARK(BM_TwoParamLossGrad)->Unit(benchmark::kMicrosecond);

// one minibatch of 32 through the default network, forward then backward
void BM_NetworkStep(benchmark::State& state) {
  const auto& o = ops(10);
  const LossKind kind = state.range(0) == 0 ? LossKind::fosls() : LossKind::dpg(1.0);
  const NetParams p = initParams(netConfigFor(NetConfig{}, o, kind, false), 1);
  Matrix inputs(4, 32);
  for (int j = 0; j < 32; ++j) {
    inputs.col(j) = netInput(kAlpha, std::nullopt) * (1.0 + 0.01 * j);
  }
  ForwardCache cache;
  for (auto _ : state) {
    const Matrix w = forward(p, inputs, &cache);
    benchmark::DoNotOptimize(backward(p, cache, w).flat().data());
  }
}
BENCHMARK(BM_NetworkStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
