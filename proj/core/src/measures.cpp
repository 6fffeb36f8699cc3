#include "vcl/measures.hpp"

#include "vcl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace vcl {

std::vector<double> cumulativeMax(std::span<const double> values) {
  std::vector<double> out(values.size());
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    running = std::max(running, values[i]);
    out[i] = running;
  }
  return out;
}

ErrorMeasures errorMeasures(const ParametricOperators& ops, Method method, const Vector& prediction,
                            const Vector& galerkin, const AlphaParam& alpha) {
  ops.checkAlpha(alpha, "errorMeasures");
  const Eigen::Index dim = method == Method::Fosls ? ops.fosls.dim() : ops.dpg.dim();
  const char* space = method == Method::Fosls ? "FOSLS" : "DPG";
  if (prediction.size() != dim || galerkin.size() != dim) {
    throw InputError(std::string("errorMeasures: vectors of size ") + std::to_string(prediction.size()) + " and " +
                     std::to_string(galerkin.size()) + " do not belong to the " + space + " trial space (" +
                     std::to_string(dim) + ")");
  }
  const Vector delta = prediction - galerkin;
  ErrorMeasures m;
  if (method == Method::Fosls) {
    m.interior = foslsMassNorms(ops, delta);
    m.conforming = m.interior;
    m.e_hat = foslsEnergy(ops, delta, alpha);
  } else {
    m.interior = dpgInteriorMassNorms(ops, delta);
    const Vector lifted = liftTraces(ops, delta);
    m.conforming = foslsMassNorms(ops, lifted);
    m.e_hat = foslsEnergy(ops, lifted, alpha);
  }
  m.e0 = m.interior.total();
  return m;
}

double safeRatio(double x, double d) {
  if (x == 0.0) {
    return 0.0;
  }
  return x / d;
}

FoslsRatios foslsRatios(const ParametricOperators& ops, const Vector& prediction, const Vector& galerkin,
                        const AlphaParam& alpha) {
  FoslsRatios r;
  r.loss_pred = foslsLoss(ops, prediction, alpha);
  r.loss_galerkin = foslsLoss(ops, galerkin, alpha);
  const ErrorMeasures m = errorMeasures(ops, Method::Fosls, prediction, galerkin, alpha);
  r.e0 = m.e0;
  r.e_hat = m.e_hat;
  const double denom = r.loss_pred + r.loss_galerkin;
  r.rho_hat = safeRatio(r.e_hat, denom);
  r.rho0 = safeRatio(r.e0, denom);
  r.rho = safeRatio(r.e0 + r.e_hat, denom);
  return r;
}

DpgRatios dpgRatios(const ParametricOperators& ops, const Vector& prediction, const DpgSolution& galerkin,
                    const AlphaParam& alpha, double s) {
  DpgRatios r;
  r.s = s;
  r.loss_pred = dpgLoss(ops, prediction, alpha, s);
  r.loss_galerkin = galerkin.err_norm_sq;
  const ErrorMeasures m = errorMeasures(ops, Method::Dpg, prediction, galerkin.coeffs, alpha);
  r.e0 = m.e0;
  r.e_hat = m.e_hat;
  r.rho = safeRatio(r.e0 + s * s * r.e_hat, r.loss_pred + r.loss_galerkin);
  return r;
}

void parallelFor(int count, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  }
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

} // namespace vcl
