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

// Base private computations. Each mechanism validates its parameters, obtains
// a grant from the accountant and only then draws randomness. A result object
// can only be produced after the charge went through.

#ifndef DPCORE_MECHANISMS_H_
#define DPCORE_MECHANISMS_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/internal/format.h"
#include "dpcore/noise.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {

struct MechanismOptions {
  // Smallest eps / sensitivity a Laplace-type mechanism accepts. Large noise
  // scales make floating-point holes likelier. 0 disables the check.
  double epsilon_floor = 1e-3;
  // Round Laplace outputs to the nearest integer.
  bool discretize = false;
};

// What a mechanism needs besides its data: where to charge and where to draw
// randomness from. The caller keeps both alive for the call.
struct PrivacyContext {
  Accountant* accountant = nullptr;
  std::string scope;
  RandomSource* rng = nullptr;
  MechanismOptions options;
};

class MechanismResult;
class SelectionResult;
class KeySetResult;

namespace internal {
MechanismResult MakeMechanismResult(std::vector<double> values,
                                    std::vector<std::string> labels,
                                    double noise_scale, PrivacyCharge receipt);
SelectionResult MakeSelectionResult(std::size_t index, std::string label,
                                    PrivacyCharge receipt);
KeySetResult MakeKeySetResult(std::vector<std::size_t> indices,
                              std::vector<std::string> keys,
                              PrivacyCharge receipt);
}  // namespace internal

class MechanismResult {
 public:
  std::span<const double> values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }
  // Laplace scale b or Gaussian sigma; 0 when the sensitivity was 0.
  double noise_scale() const { return noise_scale_; }
  const PrivacyCharge& receipt() const { return receipt_; }

 private:
  friend MechanismResult internal::MakeMechanismResult(
      std::vector<double>, std::vector<std::string>, double, PrivacyCharge);
  MechanismResult() = default;

  std::vector<double> values_;
  std::vector<std::string> labels_;
  double noise_scale_ = 0;
  PrivacyCharge receipt_;
};

class SelectionResult {
 public:
  std::size_t index() const { return index_; }
  const std::string& label() const { return label_; }
  const PrivacyCharge& receipt() const { return receipt_; }

 private:
  friend SelectionResult internal::MakeSelectionResult(std::size_t,
                                                       std::string,
                                                       PrivacyCharge);
  SelectionResult() = default;

  std::size_t index_ = 0;
  std::string label_;
  PrivacyCharge receipt_;
};

class KeySetResult {
 public:
  const std::vector<std::size_t>& indices() const { return indices_; }
  const std::vector<std::string>& keys() const { return keys_; }
  const PrivacyCharge& receipt() const { return receipt_; }

 private:
  friend KeySetResult internal::MakeKeySetResult(std::vector<std::size_t>,
                                                 std::vector<std::string>,
                                                 PrivacyCharge);
  KeySetResult() = default;

  std::vector<std::size_t> indices_;
  std::vector<std::string> keys_;
  PrivacyCharge receipt_;
};

namespace internal {

inline MechanismResult MakeMechanismResult(std::vector<double> values,
                                           std::vector<std::string> labels,
                                           double noise_scale,
                                           PrivacyCharge receipt) {
  MechanismResult r;
  r.values_ = std::move(values);
  r.labels_ = std::move(labels);
  r.noise_scale_ = noise_scale;
  r.receipt_ = std::move(receipt);
  return r;
}

inline SelectionResult MakeSelectionResult(std::size_t index,
                                           std::string label,
                                           PrivacyCharge receipt) {
  SelectionResult r;
  r.index_ = index;
  r.label_ = std::move(label);
  r.receipt_ = std::move(receipt);
  return r;
}

inline KeySetResult MakeKeySetResult(std::vector<std::size_t> indices,
                                     std::vector<std::string> keys,
                                     PrivacyCharge receipt) {
  KeySetResult r;
  r.indices_ = std::move(indices);
  r.keys_ = std::move(keys);
  r.receipt_ = std::move(receipt);
  return r;
}

inline absl::Status CheckContext(const PrivacyContext& ctx) {
  if (ctx.accountant == nullptr || ctx.rng == nullptr) {
    return absl::FailedPreconditionError(
        "mechanism needs an accountant and a random source");
  }
  return absl::OkStatus();
}

inline absl::Status CheckEpsilon(double eps) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError("eps must be positive and finite");
  }
  return absl::OkStatus();
}

inline absl::Status CheckFloor(double eps, double sensitivity,
                               const MechanismOptions& options) {
  if (sensitivity > 0 && eps / sensitivity < options.epsilon_floor) {
    return absl::InvalidArgumentError(StrCat(
        "eps / sensitivity = ", FormatDouble(eps / sensitivity),
        " is below the floor of ", FormatDouble(options.epsilon_floor),
        " (eps / sensitivity must be at least 10^-3 by default) so the noise "
        "scale stays small enough to avoid floating-point holes"));
  }
  return absl::OkStatus();
}

inline std::vector<double> AddLaplace(std::span<const double> values,
                                      double scale, bool discretize,
                                      RandomSource& rng) {
  std::vector<double> out(values.begin(), values.end());
  if (scale > 0) {
    LaplaceDistribution lap = *LaplaceDistribution::Create(scale);
    for (double& x : out) x += lap.Sample(rng);
  }
  if (discretize) {
    for (double& x : out) x = std::nearbyint(x);
  }
  return out;
}

inline absl::StatusOr<MechanismResult> RunLaplace(const StatVector& v,
                                                  double eps,
                                                  std::string_view name,
                                                  PrivacyContext& ctx) {
  DPCORE_RETURN_IF_ERROR(CheckContext(ctx));
  DPCORE_RETURN_IF_ERROR(CheckEpsilon(eps));
  double delta = v.l1_sensitivity();
  DPCORE_RETURN_IF_ERROR(CheckFloor(eps, delta, ctx.options));
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, eps, name, BudgetKind::kPureEpsilon));
  double scale = delta / eps;
  return MakeMechanismResult(
      AddLaplace(v.values(), scale, ctx.options.discretize, *ctx.rng),
      v.labels(), scale, std::move(receipt));
}

}  // namespace internal

// v + Lap(Δ/eps) per coordinate. Outputs are not clamped.
inline absl::StatusOr<MechanismResult> LaplaceMechanism(const StatVector& v,
                                                        double eps,
                                                        PrivacyContext& ctx) {
  return internal::RunLaplace(v, eps, "laplace", ctx);
}

// v + N(0, σ²) with σ = Δ / sqrt(2 rho), charged as rho against a zCDP
// scope. Δ is the L1 sensitivity, which bounds the L2 sensitivity.
inline absl::StatusOr<MechanismResult> GaussianMechanism(const StatVector& v,
                                                         double rho,
                                                         PrivacyContext& ctx) {
  DPCORE_RETURN_IF_ERROR(internal::CheckContext(ctx));
  if (!(rho > 0) || !std::isfinite(rho)) {
    return absl::InvalidArgumentError("rho must be positive and finite");
  }
  DPCORE_ASSIGN_OR_RETURN(
      PrivacyCharge receipt,
      ctx.accountant->Charge(ctx.scope, rho, "gaussian", BudgetKind::kZcdpRho));
  double sigma = v.l1_sensitivity() / std::sqrt(2 * rho);
  std::vector<double> out(v.values().begin(), v.values().end());
  if (sigma > 0) {
    GaussianDistribution gauss = *GaussianDistribution::Create(sigma);
    for (double& x : out) x += gauss.Sample(*ctx.rng);
  }
  return internal::MakeMechanismResult(std::move(out), v.labels(), sigma,
                                       std::move(receipt));
}

// Index of the largest answer after adding Exp(2Δ/eps) noise to each. Only
// the index is released. Ties go to the smallest index.
inline absl::StatusOr<SelectionResult> ReportNoisyMax(const StatVector& v,
                                                      double eps,
                                                      PrivacyContext& ctx) {
  DPCORE_RETURN_IF_ERROR(internal::CheckContext(ctx));
  DPCORE_RETURN_IF_ERROR(internal::CheckEpsilon(eps));
  if (v.size() == 0) {
    return absl::InvalidArgumentError("report_noisy_max needs answers");
  }
  double delta = v.l1_sensitivity();
  DPCORE_RETURN_IF_ERROR(internal::CheckFloor(eps, delta, ctx.options));
  DPCORE_ASSIGN_OR_RETURN(PrivacyCharge receipt,
                          ctx.accountant->Charge(ctx.scope, eps,
                                                 "report_noisy_max",
                                                 BudgetKind::kPureEpsilon));
  double scale = 2 * delta / eps;
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double noisy = v.values()[i];
    if (scale > 0) {
      noisy += ExponentialDistribution::Create(scale)->Sample(*ctx.rng);
    }
    if (noisy > best_value) {
      best = i;
      best_value = noisy;
    }
  }
  return internal::MakeSelectionResult(best, v.labels()[best],
                                       std::move(receipt));
}

// log P(i) = eps (q_i - q_max) / (2 Δq) - log Z, computed in log space.
inline absl::StatusOr<std::vector<double>> ExponentialMechanismLogProbabilities(
    std::span<const double> quality, double delta_q, double eps) {
  DPCORE_RETURN_IF_ERROR(internal::CheckEpsilon(eps));
  if (!(delta_q > 0) || !std::isfinite(delta_q)) {
    return absl::InvalidArgumentError("quality sensitivity must be positive");
  }
  if (quality.empty()) {
    return absl::InvalidArgumentError("exponential mechanism needs candidates");
  }
  double q_max = -std::numeric_limits<double>::infinity();
  for (double q : quality) {
    if (!std::isfinite(q)) {
      return absl::InvalidArgumentError("quality scores must be finite");
    }
    q_max = std::fmax(q_max, q);
  }
  std::vector<double> log_weights;
  log_weights.reserve(quality.size());
  for (double q : quality) {
    log_weights.push_back(eps * (q - q_max) / (2 * delta_q));
  }
  double log_z = LogSumExp(log_weights).value;
  for (double& w : log_weights) w -= log_z;
  return log_weights;
}

// log of the smallest positive uniform the sampler can produce. Candidates
// with a log-probability above this are reachable.
inline constexpr double kLogSmallestUniform = -744.44007192138126;

// Samples candidate i with probability proportional to exp(eps q_i / (2 Δq)).
// The inverse CDF runs over log-probabilities in ascending order against
// log U, so even very unlikely candidates keep their exact share of the
// full-precision uniform. Prefer ReportNoisyMax where it fits.
inline absl::StatusOr<SelectionResult> ExponentialMechanism(
    std::span<const double> quality, double delta_q, double eps,
    PrivacyContext& ctx, std::span<const std::string> labels = {}) {
  DPCORE_RETURN_IF_ERROR(internal::CheckContext(ctx));
  DPCORE_ASSIGN_OR_RETURN(
      std::vector<double> log_p,
      ExponentialMechanismLogProbabilities(quality, delta_q, eps));
  if (!labels.empty() && labels.size() != quality.size()) {
    return absl::InvalidArgumentError("one label per candidate required");
  }
  DPCORE_ASSIGN_OR_RETURN(PrivacyCharge receipt,
                          ctx.accountant->Charge(ctx.scope, eps,
                                                 "exponential_mechanism",
                                                 BudgetKind::kPureEpsilon));
  std::vector<std::size_t> order(log_p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return log_p[a] < log_p[b];
  });
  double log_u = std::log(UniformOpenClosed(*ctx.rng));
  LogWeight cumulative = LogWeight::Zero();
  std::size_t chosen = order.back();
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    cumulative = LogAdd(cumulative, LogWeight{log_p[order[k]]});
    if (log_u <= cumulative.value) {
      chosen = order[k];
      break;
    }
  }
  std::string label =
      labels.empty() ? internal::StrCat(chosen) : labels[chosen];
  return internal::MakeSelectionResult(chosen, std::move(label),
                                       std::move(receipt));
}

// Laplace noise on every cell of a grouped count. The cell set is the group
// domain and never depends on the data.
inline absl::StatusOr<MechanismResult> NoisyHistogram(const StatVector& cells,
                                                      double eps,
                                                      PrivacyContext& ctx) {
  return internal::RunLaplace(cells, eps, "noisy_histogram", ctx);
}

inline constexpr double kDefaultSoftThreshold = 100;
inline constexpr double kDefaultSoftThresholdScale = 5;

// Keys whose count exceeds threshold + Lap(scale), fresh noise per key.
// Charged as a Laplace release of the whole vector: eps = Δ / scale.
inline absl::StatusOr<KeySetResult> SoftThresholdFilter(
    const StatVector& counts, double threshold, double scale,
    PrivacyContext& ctx) {
  DPCORE_RETURN_IF_ERROR(internal::CheckContext(ctx));
  if (!std::isfinite(threshold)) {
    return absl::InvalidArgumentError("threshold must be finite");
  }
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError("Laplace scale must be positive");
  }
  double delta = counts.l1_sensitivity();
  double eps = delta / scale;
  if (delta > 0) {
    DPCORE_RETURN_IF_ERROR(internal::CheckFloor(eps, delta, ctx.options));
  }
  DPCORE_ASSIGN_OR_RETURN(PrivacyCharge receipt,
                          ctx.accountant->Charge(ctx.scope, eps,
                                                 "soft_threshold_filter",
                                                 BudgetKind::kPureEpsilon));
  LaplaceDistribution lap = *LaplaceDistribution::Create(scale);
  std::vector<std::size_t> indices;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts.values()[i] > threshold + lap.Sample(*ctx.rng)) {
      indices.push_back(i);
      keys.push_back(counts.labels()[i]);
    }
  }
  return internal::MakeKeySetResult(std::move(indices), std::move(keys),
                                    std::move(receipt));
}

// Noisy sum / noisy count with the count floored at 1. Post-processing only.
inline double DerivedMean(double noisy_sum, double noisy_count) {
  return noisy_sum / std::fmax(noisy_count, 1.0);
}

}  // namespace dpcore

#endif  // DPCORE_MECHANISMS_H_
