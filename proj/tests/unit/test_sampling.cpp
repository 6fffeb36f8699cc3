#include "vcl/errors.hpp"
#include "vcl/sampling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vcl {
namespace {

ParamDistribution dist(std::vector<double> mean, double sigma, std::uint64_t seed = 7) {
  ParamDistribution d;
  d.mean = std::move(mean);
  d.sigma = sigma;
  d.seed = seed;
  return d;
}

TEST(Rng, NormalMomentsAndUniformRange) {
  Rng rng(11);
  const int n = 400000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  shuffle(v, rng);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sorted[i], i);
  }
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng rng(5);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) {
    ++counts[rng.below(6)];
  }
  for (int c : counts) {
    EXPECT_NEAR(c, 10000, 400);
  }
  EXPECT_THROW(rng.below(0), InputError);
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(deriveSeed(1, 0), deriveSeed(1, 1));
  EXPECT_NE(deriveSeed(1, 0), deriveSeed(2, 0));
  EXPECT_EQ(deriveSeed(9, 4), deriveSeed(9, 4));
}

TEST(SampleAlpha, ZeroSigmaReturnsMean) {
  for (const AlphaParam& a : sampleAlpha(dist({4, 1, 1, 4}, 0.0), 50)) {
    EXPECT_EQ(a, (AlphaParam{4, 1, 1, 4}));
  }
}

TEST(SampleAlpha, PinnedNormalDraw) {
  EXPECT_DOUBLE_EQ(alphaFromNormal(1.0, 0.5, -1.0), 0.25);
  EXPECT_DOUBLE_EQ(alphaFromNormal(4.0, 1.0, 1.0), 9.0);
}

TEST(SampleAlpha, MeanIsShiftedBySigmaSquared) {
  // E(sqrt(m) + sigma Z)^2 = m + sigma^2
  const std::vector<double> mean{0.1, 1.0, 1.0, 0.1};
  const double sigma = 0.5;
  const int n = 1000000;
  std::vector<double> sum(4, 0.0);
  for (const AlphaParam& a : sampleAlpha(dist(mean, sigma), n)) {
    for (int i = 0; i < 4; ++i) {
      sum[i] += a[i];
    }
  }
  for (int i = 0; i < 4; ++i) {
    const double expected = mean[i] + sigma * sigma;
    EXPECT_LT(std::abs(sum[i] / n - expected), 0.01 * expected) << "component " << i;
  }
}

TEST(SampleAlpha, ComponentsAreUncorrelated) {
  const int n = 100000;
  const auto samples = sampleAlpha(dist({1, 1, 1, 1}, 0.5), n);
  double m1 = 0.0;
  double m2 = 0.0;
  for (const auto& a : samples) {
    m1 += a[0];
    m2 += a[1];
  }
  m1 /= n;
  m2 /= n;
  double c = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  for (const auto& a : samples) {
    c += (a[0] - m1) * (a[1] - m2);
    v1 += (a[0] - m1) * (a[0] - m1);
    v2 += (a[1] - m2) * (a[1] - m2);
  }
  EXPECT_LT(std::abs(c / std::sqrt(v1 * v2)), 0.01);
}

TEST(SampleAlpha, NonnegativeAndDeterministic) {
  const auto a = sampleAlpha(dist({0.01, 1, 1, 0.01}, 10.0, 3), 1000);
  const auto b = sampleAlpha(dist({0.01, 1, 1, 0.01}, 10.0, 3), 1000);
  const auto c = sampleAlpha(dist({0.01, 1, 1, 0.01}, 10.0, 4), 1000);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& x : a) {
    EXPECT_GT(x.min(), 0.0);
  }
}

TEST(SampleAlphaS, DegenerateRange) {
  ParamDistribution d = dist({1, 1, 1, 1}, 0.3);
  d.s_range = SRange{7.0, 7.0};
  for (const auto& p : sampleAlphaS(d, 20)) {
    EXPECT_EQ(*p.s, 7.0);
  }
}

TEST(SampleAlphaS, UniformMeanAndAlphaStreamShared) {
  ParamDistribution d = dist({0.1, 1, 1, 0.1}, 0.5);
  d.s_range = SRange{1.0, 100.0};
  const int n = 1000000;
  const auto joint = sampleAlphaS(d, n);
  double sum = 0.0;
  for (const auto& p : joint) {
    ASSERT_GE(*p.s, 1.0);
    ASSERT_LE(*p.s, 100.0);
    sum += *p.s;
  }
  EXPECT_LT(std::abs(sum / n - 50.5), 0.01 * 50.5);
  const auto alphas = sampleAlpha(d, 100);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(joint[i].alpha, alphas[i]);
  }
}

TEST(SampleAlphaS, RequiresRange) {
  EXPECT_THROW(sampleAlphaS(dist({1, 1, 1, 1}, 0.1), 3), InputError);
}

TEST(ParamDistribution, Validation) {
  EXPECT_THROW(sampleAlpha(dist({1, 0, 1, 1}, 0.1), 1), InputError);
  EXPECT_THROW(sampleAlpha(dist({1, 1, 1, 1}, -0.1), 1), InputError);
  ParamDistribution d = dist({1, 1, 1, 1}, 0.1);
  d.s_range = SRange{5.0, 2.0};
  EXPECT_THROW(d.validate(), InputError);
  d.s_range = SRange{0.0, 2.0};
  EXPECT_THROW(d.validate(), InputError);
}

TEST(InBoundedDomain, Examples) {
  EXPECT_TRUE(inBoundedDomain(AlphaParam{1, 1, 1, 1}, 0.5, 2.0));
  EXPECT_FALSE(inBoundedDomain(AlphaParam{0.01, 1, 1, 0.01}, 0.1, 10.0));
  EXPECT_TRUE(inBoundedDomain(AlphaParam{1e-8, 1, 1, 1e8}, 0.0, std::numeric_limits<double>::infinity()));
}

TEST(SamplesCsv, RoundTripIsBitExact) {
  ParamDistribution d = dist({0.1, 1, 1, 0.1}, 0.5);
  d.s_range = SRange{1.0, 100.0};
  const auto samples = sampleAlphaS(d, 200);
  std::stringstream ss;
  writeSamplesCsv(ss, samples);
  EXPECT_EQ(ss.str().substr(0, 30), "alpha1,alpha2,alpha3,alpha4,s\n");
  const auto back = readSamplesCsv(ss);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].alpha, samples[i].alpha);
    EXPECT_EQ(*back[i].s, *samples[i].s);
  }
}

TEST(SamplesCsv, WithoutS) {
  std::stringstream ss("alpha1,alpha2,alpha3,alpha4\n1,2,3,4\n0.5,0.25,1e-3,7\n");
  const auto s = readSamplesCsv(ss);
  ASSERT_EQ(s.size(), 2U);
  EXPECT_FALSE(s[0].s.has_value());
  EXPECT_EQ(s[1].alpha, (AlphaParam{0.5, 0.25, 1e-3, 7}));
}

TEST(SamplesCsv, RejectsMalformedInput) {
  std::stringstream bad_header("alpha1,beta\n1,2\n");
  EXPECT_THROW(readSamplesCsv(bad_header), InputError);
  std::stringstream bad_cell("alpha1,alpha2\n1,x\n");
  EXPECT_THROW(readSamplesCsv(bad_cell), InputError);
  std::stringstream short_row("alpha1,alpha2\n1\n");
  EXPECT_THROW(readSamplesCsv(short_row), InputError);
}

} // namespace
} // namespace vcl
