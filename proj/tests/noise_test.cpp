//
// Copyright 2026 The dpcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpcore/noise.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <type_traits>
#include <vector>

#include "boost/multiprecision/cpp_dec_float.hpp"
#include "dpcore/audit/gof.h"
#include "dpcore/random_source.h"
#include "dpcore/testing/scripted_source.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpcore {
namespace {

using testing::ScriptedSourceFactory;
using testing::ValueOrDie;
using BigFloat = boost::multiprecision::number<
    boost::multiprecision::cpp_dec_float<200>>;

static_assert(!std::is_constructible_v<RandomSource, std::uint64_t>);
static_assert(!std::is_constructible_v<RandomSource, int>);
static_assert(!std::is_default_constructible_v<RandomSource>);
static_assert(!std::is_copy_constructible_v<RandomSource>);

std::vector<double> Draw(std::size_t n, auto&& sample) {
  std::vector<double> out(n);
  for (double& x : out) x = sample();
  return out;
}

double Mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double Variance(const std::vector<double>& xs) {
  double m = Mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

TEST(RandomSourceTest, DerivedStreamsDiffer) {
  RandomSource parent = RandomSource::FromOsEntropy();
  RandomSource a = parent.Derive();
  RandomSource b = parent.Derive();
  std::vector<std::uint8_t> x(1024), y(1024), z(1024);
  a.Fill(x);
  b.Fill(y);
  parent.Fill(z);
  EXPECT_NE(x, y);
  EXPECT_NE(x, z);
  EXPECT_NE(y, z);
}

TEST(RandomSourceTest, DerivedUniformsPassChiSquared) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(11).Derive();
  constexpr int kBins = 100;
  std::vector<std::uint64_t> counts(kBins, 0);
  for (int i = 0; i < 1'000'000; ++i) {
    double u = UniformOpenClosed(rng);
    int bin = std::min(kBins - 1, static_cast<int>((1 - u) * kBins));
    ++counts[bin];
  }
  std::vector<double> expected(kBins, 1.0 / kBins);
  audit::ChiSquaredResult r = ValueOrDie(audit::ChiSquaredGof(counts, expected));
  EXPECT_GT(r.p_value, 0.01);
}

TEST(UniformTest, RangeAndScriptedExtremes) {
  RandomSource ones = ScriptedSourceFactory::ZeroNoise();
  EXPECT_EQ(UniformOpenClosed(ones), 1.0);
  RandomSource zeros = ScriptedSourceFactory::FromWords({0});
  EXPECT_EQ(UniformOpenClosed(zeros), std::numeric_limits<double>::denorm_min());
  RandomSource half = ScriptedSourceFactory::FromWords({std::uint64_t{1} << 63});
  EXPECT_NEAR(UniformOpenClosed(half), 0.5, 1e-15);
}

TEST(UniformTest, ScriptedSourceMakesSamplersDeterministic) {
  RandomSource a = ScriptedSourceFactory::FromWords({1, 2, 3, 4, 5});
  RandomSource b = ScriptedSourceFactory::FromWords({1, 2, 3, 4, 5});
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(ValueOrDie(SampleLaplace(a, 2)), ValueOrDie(SampleLaplace(b, 2)));
  }
}

// Independent closed forms for the goodness-of-fit oracles.
double LaplaceCdf(double b, double x) {
  return x < 0 ? std::exp(x / b) / 2 : 1 - std::exp(-x / b) / 2;
}
double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double ExponentialCdf(double b, double x) { return x <= 0 ? 0 : 1 - std::exp(-x / b); }

TEST(LaplaceTest, AndersonDarlingAndMedian) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(1);
  std::vector<double> xs =
      Draw(1'000'000, [&] { return ValueOrDie(SampleLaplace(rng, 1)); });
  std::vector<double> sorted = xs;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  EXPECT_NEAR(sorted[sorted.size() / 2], 0, 0.01);
  audit::AndersonDarlingResult r = ValueOrDie(
      audit::AndersonDarling(xs, [](double x) { return LaplaceCdf(1, x); }));
  EXPECT_TRUE(r.pass) << r.statistic;
}

TEST(LaplaceTest, VarianceMatchesMoment) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(2);
  std::vector<double> xs =
      Draw(1'000'000, [&] { return ValueOrDie(SampleLaplace(rng, 2)); });
  EXPECT_NEAR(Variance(xs), 8.0, 0.4);
}

TEST(LaplaceTest, RejectsBadScale) {
  RandomSource rng = RandomSource::FromOsEntropy();
  EXPECT_FALSE(SampleLaplace(rng, 0).ok());
  EXPECT_FALSE(SampleLaplace(rng, -1).ok());
  EXPECT_FALSE(SampleLaplace(rng, NAN).ok());
  EXPECT_FALSE(SampleLaplace(rng, INFINITY).ok());
}

TEST(SnappingTest, LadderRule) {
  EXPECT_EQ(SnappingMechanism::LadderFor(1), 1);
  EXPECT_EQ(SnappingMechanism::LadderFor(0.75), 1);
  EXPECT_EQ(SnappingMechanism::LadderFor(3), 4);
  EXPECT_EQ(SnappingMechanism::LadderFor(0.001), 1.0 / 512);
}

TEST(SnappingTest, OutputsLandOnLadder) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(3);
  SnappingMechanism m = ValueOrDie(SnappingMechanism::Create(3, 100));
  for (int i = 0; i < 1'000'000; ++i) {
    double y = m.Sample(rng, 7.3);
    double q = y / m.ladder();
    ASSERT_TRUE(q == std::nearbyint(q) || std::fabs(y) == 100) << y;
  }
}

TEST(SnappingTest, ClampsToBound) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(4);
  for (int i = 0; i < 10000; ++i) {
    double y = ValueOrDie(SampleSnappedLaplace(rng, 5, 1, 3));
    ASSERT_GE(y, -3);
    ASSERT_LE(y, 3);
  }
  EXPECT_FALSE(SampleSnappedLaplace(rng, 0, 0, 3).ok());
  EXPECT_FALSE(SampleSnappedLaplace(rng, 0, 1, -3).ok());
}

TEST(SnappingTest, AdjacentInputsHitTheSameLadderPoints) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(5);
  SnappingMechanism m = ValueOrDie(SnappingMechanism::Create(1, 8));
  std::set<double> from0, from1;
  for (int i = 0; i < 10'000'000; ++i) {
    from0.insert(m.Sample(rng, 0));
    from1.insert(m.Sample(rng, 1));
  }
  EXPECT_EQ(from0, from1);
  EXPECT_EQ(from0.size(), 17u);
}

TEST(GaussianTest, AndersonDarlingMeanAndTail) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(6);
  const double sigma = 1.5;
  std::vector<double> xs =
      Draw(1'000'000, [&] { return ValueOrDie(SampleGaussian(rng, sigma)); });
  EXPECT_NEAR(Mean(xs), 0, 4 * sigma / 1000);
  double tail = 0;
  for (double x : xs) tail += std::fabs(x) > 2 * sigma;
  EXPECT_NEAR(tail / 1e6, 0.0455, 0.002);
  audit::AndersonDarlingResult r = ValueOrDie(audit::AndersonDarling(
      xs, [&](double x) { return NormalCdf(x / sigma); }));
  EXPECT_TRUE(r.pass) << r.statistic;
  EXPECT_FALSE(SampleGaussian(rng, 0).ok());
}

TEST(ExponentialTest, SupportMomentAndFit) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(7);
  std::vector<double> xs =
      Draw(1'000'000, [&] { return ValueOrDie(SampleExponential(rng, 3)); });
  EXPECT_GE(*std::min_element(xs.begin(), xs.end()), 0);
  EXPECT_NEAR(Mean(xs), 3, 0.03);
  audit::AndersonDarlingResult r = ValueOrDie(audit::AndersonDarling(
      xs, [](double x) { return ExponentialCdf(3, x); }));
  EXPECT_TRUE(r.pass) << r.statistic;
  EXPECT_FALSE(SampleExponential(rng, -3).ok());
}

TEST(TwoSidedGeometricTest, ChiSquaredFit) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(8);
  const double a = 0.5;
  // Bins -10..10 plus one tail bin for |k| > 10.
  std::vector<std::uint64_t> counts(22, 0);
  for (int i = 0; i < 10'000'000; ++i) {
    std::int64_t k = ValueOrDie(SampleTwoSidedGeometric(rng, a));
    ++counts[k < -10 || k > 10 ? 21 : static_cast<std::size_t>(k + 10)];
  }
  std::vector<double> expected(22);
  for (int k = -10; k <= 10; ++k) {
    expected[k + 10] = (1 - a) / (1 + a) * std::pow(a, std::abs(k));
  }
  expected[21] = 2 * std::pow(a, 11) / (1 + a);
  audit::ChiSquaredResult r = ValueOrDie(audit::ChiSquaredGof(counts, expected));
  EXPECT_GT(r.p_value, 0.01) << r.statistic;
  for (int k = 1; k <= 5; ++k) {
    double ratio = static_cast<double>(counts[10 + k]) /
                   static_cast<double>(counts[10 - k]);
    EXPECT_GE(ratio, 0.95);
    EXPECT_LE(ratio, 1.05);
  }
}

TEST(TwoSidedGeometricTest, SmallAlphaMassAtZero) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(9);
  int zeros = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    zeros += ValueOrDie(SampleTwoSidedGeometric(rng, 0.01)) == 0;
  }
  EXPECT_NEAR(zeros / 1e6, 0.99 / 1.01, 0.002);
  EXPECT_FALSE(SampleTwoSidedGeometric(rng, 0).ok());
  EXPECT_FALSE(SampleTwoSidedGeometric(rng, 1).ok());
}

BigFloat ExactLogAdd(double x, double y) {
  return boost::multiprecision::log(boost::multiprecision::exp(BigFloat(x)) +
                                    boost::multiprecision::exp(BigFloat(y)));
}

TEST(LogAddTest, Examples) {
  EXPECT_DOUBLE_EQ(LogAdd(LogWeight{0}, LogWeight{0}).value, std::log(2.0));
  double got = LogAdd(LogWeight{-800}, LogWeight{-801}).value;
  double want = static_cast<double>(ExactLogAdd(-800, -801));
  EXPECT_LT(std::fabs(got - want) / std::fabs(want), 1e-12);
  EXPECT_NEAR(got, -799.686738, 1e-6);
  EXPECT_EQ(LogAdd(LogWeight{-3.5}, LogWeight::Zero()).value, -3.5);
  EXPECT_EQ(LogAdd(LogWeight::Zero(), LogWeight::Zero()), LogWeight::Zero());
}

TEST(LogAddTest, NoOverflowForLargeInputs) {
  double got = LogAdd(LogWeight{1000}, LogWeight{1000}).value;
  EXPECT_DOUBLE_EQ(got, 1000 + std::log(2.0));
  EXPECT_TRUE(std::isfinite(LogAdd(LogWeight{1e300}, LogWeight{1e300}).value));
}

// Commutativity exactly, associativity to within 1 ulp of the exact result.
TEST(LogAddTest, CommutativeAndAssociativeAgainstOracle) {
  RandomSource rng = ScriptedSourceFactory::FromSeed(10);
  auto draw = [&] { return 40 * (UniformOpenClosed(rng) - 0.5) - 100; };
  for (int i = 0; i < 2000; ++i) {
    LogWeight x{draw()}, y{draw()}, z{draw()};
    EXPECT_EQ(LogAdd(x, y), LogAdd(y, x));
    double left = LogAdd(LogAdd(x, y), z).value;
    double right = LogAdd(x, LogAdd(y, z)).value;
    BigFloat exact = boost::multiprecision::log(
        boost::multiprecision::exp(BigFloat(x.value)) +
        boost::multiprecision::exp(BigFloat(y.value)) +
        boost::multiprecision::exp(BigFloat(z.value)));
    double e = static_cast<double>(exact);
    double ulp = std::nextafter(std::fabs(e), INFINITY) - std::fabs(e);
    EXPECT_LE(std::fabs(left - right), 2 * ulp);
    EXPECT_LE(std::fabs(left - e), 2 * ulp);
  }
}

TEST(LogSumExpTest, MatchesOracleWhereNaiveSumUnderflows) {
  std::vector<double> w = {-1000, -1001, -1002, -999.5};
  double got = LogSumExp(w).value;
  BigFloat total = 0;
  for (double v : w) total += boost::multiprecision::exp(BigFloat(v));
  double want = static_cast<double>(boost::multiprecision::log(total));
  EXPECT_NEAR(got, want, 1e-12 * std::fabs(want));
  EXPECT_EQ(std::exp(-1000.0), 0.0);
}

}  // namespace
}  // namespace dpcore
