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

// Goodness-of-fit tests for samplers.

#ifndef DPCORE_AUDIT_GOF_H_
#define DPCORE_AUDIT_GOF_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "boost/math/special_functions/gamma.hpp"
#include "dpcore/internal/format.h"

namespace dpcore {
namespace audit {

// 99th percentile of the asymptotic Anderson-Darling null distribution.
inline constexpr double kAndersonDarlingCritical99 = 3.8781250216053948842;

struct AndersonDarlingResult {
  double statistic = 0;
  bool pass = false;
};

// A² = -n - Σ_i (2i-1)/n [ln F(y_i) + ln(1 - F(y_{n+1-i}))] over the sorted
// sample. F values are kept inside [eps, 1 - eps] before taking logs.
// Defined for n >= 1; `samples` is sorted in place.
template <typename Cdf>
double AndersonDarlingStatistic(std::vector<double>& samples, const Cdf& cdf) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  constexpr double kGuard = std::numeric_limits<double>::epsilon();
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = std::clamp(static_cast<double>(cdf(samples[i])), kGuard,
                      1.0 - kGuard);
  }
  const double dn = static_cast<double>(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double weight = (2.0 * static_cast<double>(i) + 1.0) / dn;
    acc += weight * (std::log(f[i]) + std::log1p(-f[n - 1 - i]));
  }
  return -dn - acc;
}

template <typename Cdf>
absl::StatusOr<AndersonDarlingResult> AndersonDarling(
    std::vector<double> samples, const Cdf& cdf,
    double critical = kAndersonDarlingCritical99) {
  if (samples.size() < 2) {
    return absl::InvalidArgumentError(
        "Anderson-Darling needs at least two samples");
  }
  for (double x : samples) {
    if (!std::isfinite(x)) {
      return absl::InvalidArgumentError(
          "Anderson-Darling samples must be finite");
    }
  }
  AndersonDarlingResult result;
  result.statistic = AndersonDarlingStatistic(samples, cdf);
  result.pass = result.statistic <= critical;
  return result;
}

struct ChiSquaredResult {
  double statistic = 0;
  double degrees_of_freedom = 0;
  double p_value = 1;
};

// Pearson's statistic against `expected` probabilities and its upper-tail
// p-value with (k - 1) degrees of freedom, k = outcomes of positive
// probability. Probabilities are renormalized to sum to 1.
inline absl::StatusOr<ChiSquaredResult> ChiSquaredGof(
    std::span<const std::uint64_t> observed,
    std::span<const double> expected) {
  if (observed.size() != expected.size()) {
    return absl::InvalidArgumentError(
        "chi-squared needs one expected probability per outcome");
  }
  double total_p = 0;
  double total_n = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] >= 0) || !std::isfinite(expected[i])) {
      return absl::InvalidArgumentError(
          "expected probabilities must be finite and nonnegative");
    }
    if (expected[i] == 0 && observed[i] != 0) {
      return absl::InvalidArgumentError(dpcore::internal::StrCat(
          "outcome ", i, " has expected probability 0 but was observed ",
          observed[i], " times"));
    }
    total_p += expected[i];
    total_n += static_cast<double>(observed[i]);
  }
  if (total_p <= 0 || total_n <= 0) {
    return absl::InvalidArgumentError(
        "chi-squared needs observations and positive expected mass");
  }
  ChiSquaredResult result;
  int k = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] == 0) continue;
    ++k;
    double e = total_n * expected[i] / total_p;
    double d = static_cast<double>(observed[i]) - e;
    result.statistic += d * d / e;
  }
  if (k < 2) {
    return absl::InvalidArgumentError(
        "chi-squared needs at least two outcomes of positive probability");
  }
  result.degrees_of_freedom = k - 1;
  result.p_value =
      result.statistic <= 0
          ? 1.0
          : boost::math::gamma_q(result.degrees_of_freedom / 2,
                                 result.statistic / 2);
  return result;
}

}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_GOF_H_
