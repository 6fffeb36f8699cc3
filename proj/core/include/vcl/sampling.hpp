#pragma once

#include "vcl/assembly.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace vcl {

/// splitmix64 finaliser: derives independent stream seeds from one base seed.
std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t stream);

/// Seeded generator with platform-independent uniform and normal variates.
///
/// std::normal_distribution and std::uniform_int_distribution are
/// implementation-defined, so sample sets would differ between standard
/// libraries; the transforms here are written out instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal variate (Box-Muller, second value cached).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// In-place Fisher-Yates shuffle driven by `rng`.
void shuffle(std::span<int> items, Rng& rng);

struct SRange {
  double lo = 1.0;
  double hi = 1.0;
};

/// alpha_i = (sqrt(mean_i) + sigma Z)^2, optionally paired with s ~ U[lo, hi].
struct ParamDistribution {
  std::vector<double> mean{0.1, 1.0, 1.0, 0.1};
  double sigma = 0.5;
  std::optional<SRange> s_range;
  std::uint64_t seed = 0;

  /// Throws InputError for non-positive means, negative sigma or an empty range.
  void validate() const;
};

struct ParamSample {
  AlphaParam alpha;
  std::optional<double> s;
};

/// The squared-normal transform for a single component.
inline double alphaFromNormal(double mean, double sigma, double z) {
  const double root = std::sqrt(mean) + sigma * z;
  return root * root;
}

std::vector<AlphaParam> sampleAlpha(const ParamDistribution& dist, int count);
/// Alpha part equals sampleAlpha(dist, count); s comes from a separate stream.
std::vector<ParamSample> sampleAlphaS(const ParamDistribution& dist, int count);
/// sampleAlphaS when the distribution carries an s range, sampleAlpha otherwise.
std::vector<ParamSample> sampleParams(const ParamDistribution& dist, int count);

/// a <= min alpha_i and max alpha_i <= b.
bool inBoundedDomain(const AlphaParam& alpha, double a, double b);

/// CSV with header alpha1,...,alphaK[,s] and 17 significant digits.
void writeSamplesCsv(std::ostream& out, std::span<const ParamSample> samples);
std::vector<ParamSample> readSamplesCsv(std::istream& in);

} // namespace vcl
