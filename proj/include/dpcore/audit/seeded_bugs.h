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

// Deliberately broken mechanisms. Each one is a known way DP code goes
// wrong; the audit suite must flag every entry.
//
//   HalfScaleLaplace            charges eps, adds Lap(Δ / (2 eps)).
//   DataDependentHistogram      releases only cells whose true count is > 0.
//   CumulativeSumExponential    linear-scale weights, cumulative-sum draw.
//   BypassLaplace               correct noise, never touches the accountant.
//   TieBiasedNoisyMax           noisy scores snapped to multiples of 4,
//                               ties to the smallest index.

#ifndef DPCORE_AUDIT_SEEDED_BUGS_H_
#define DPCORE_AUDIT_SEEDED_BUGS_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/mechanisms.h"
#include "dpcore/noise.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {
namespace audit {
namespace bugs {

inline absl::StatusOr<std::vector<double>> HalfScaleLaplace(
    const StatVector& v, double eps, PrivacyContext& ctx) {
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, eps, "laplace",
                             BudgetKind::kPureEpsilon));
  (void)receipt;
  std::vector<double> out(v.values().begin(), v.values().end());
  double scale = v.l1_sensitivity() / (2 * eps);  // should be Δ / eps
  if (scale > 0) {
    LaplaceDistribution lap = *LaplaceDistribution::Create(scale);
    for (double& x : out) x += lap.Sample(*ctx.rng);
  }
  return out;
}

// Correct noise on the cells it keeps, but which cells are kept depends on
// the data, so the number of released cells leaks.
inline absl::StatusOr<std::vector<double>> DataDependentHistogram(
    const StatVector& cells, double eps, PrivacyContext& ctx) {
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, eps, "noisy_histogram",
                             BudgetKind::kPureEpsilon));
  (void)receipt;
  LaplaceDistribution lap =
      *LaplaceDistribution::Create(cells.l1_sensitivity() / eps);
  std::vector<double> out;
  for (double c : cells.values()) {
    if (c > 0) out.push_back(c + lap.Sample(*ctx.rng));
  }
  return out;
}

// exp(eps q / (2 Δq)) in linear scale, normalized by its sum. Returned as
// logs for comparison with the log-domain implementation; underflowed
// weights come back as -inf and overflowed ones as NaN.
inline absl::StatusOr<std::vector<double>> LinearScaleExpMechLogProbabilities(
    std::span<const double> quality, double delta_q, double eps) {
  std::vector<double> weights;
  double total = 0;
  for (double q : quality) {
    double w = std::exp(eps * q / (2 * delta_q));
    weights.push_back(w);
    total += w;
  }
  for (double& w : weights) w = std::log(w / total);
  return weights;
}

inline absl::StatusOr<std::size_t> CumulativeSumExponential(
    std::span<const double> quality, double delta_q, double eps,
    PrivacyContext& ctx) {
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, eps, "exponential_mechanism",
                             BudgetKind::kPureEpsilon));
  (void)receipt;
  std::vector<double> cumulative;
  double total = 0;
  for (double q : quality) {
    total += std::exp(eps * q / (2 * delta_q));
    cumulative.push_back(total);
  }
  double u = UniformOpenClosed(*ctx.rng) * total;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (u <= cumulative[i]) return i;
  }
  return cumulative.size() - 1;
}

// Real Laplace noise, but no charge is made: results appear without ledger
// entries.
inline std::vector<double> BypassLaplace(const StatVector& v, double eps,
                                         RandomSource& rng) {
  std::vector<double> out(v.values().begin(), v.values().end());
  double scale = v.l1_sensitivity() / eps;
  if (scale > 0) {
    LaplaceDistribution lap = *LaplaceDistribution::Create(scale);
    for (double& x : out) x += lap.Sample(rng);
  }
  return out;
}

inline constexpr double kTieGrid = 4.0;

inline absl::StatusOr<std::size_t> TieBiasedNoisyMax(const StatVector& v,
                                                     double eps,
                                                     PrivacyContext& ctx) {
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, eps, "report_noisy_max",
                             BudgetKind::kPureEpsilon));
  (void)receipt;
  ExponentialDistribution noise =
      *ExponentialDistribution::Create(2 * v.l1_sensitivity() / eps);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double noisy = v.values()[i] + noise.Sample(*ctx.rng);
    noisy = std::nearbyint(noisy / kTieGrid) * kTieGrid;
    if (noisy > best_value) {
      best = i;
      best_value = noisy;
    }
  }
  return best;
}

}  // namespace bugs
}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_SEEDED_BUGS_H_
