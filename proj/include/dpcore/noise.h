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

// Noise samplers and log-domain arithmetic for the privacy layer. Every
// sampler draws only from the RandomSource it is handed.

#ifndef DPCORE_NOISE_H_
#define DPCORE_NOISE_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"
#include "dpcore/random_source.h"
#include "dpcore/status_macros.h"

namespace dpcore {

// Uniform double in (0, 1]. The exponent is drawn geometrically and all 53
// significand bits are filled, so every representable value in (0, 1] is
// reachable with its correct probability (down to 2^-1074).
inline double UniformOpenClosed(RandomSource& rng) {
  int exponent = -64;
  std::uint64_t significand = rng.NextU64();
  while (significand == 0) {
    exponent -= 64;
    if (exponent < -1074) return std::numeric_limits<double>::denorm_min();
    significand = rng.NextU64();
  }
  int shift = std::countl_zero(significand);
  if (shift != 0) {
    exponent -= shift;
    significand <<= shift;
    significand |= rng.NextU64() >> (64 - shift);
  }
  // Sticky bit: makes round-to-nearest behave like rounding the infinite
  // binary expansion.
  significand |= 1;
  return std::ldexp(static_cast<double>(significand), exponent);
}

inline bool RandomSign(RandomSource& rng) { return (rng.NextU64() >> 63) != 0; }

// Bernoulli(p) by comparing a 64-bit word with floor(p * 2^64): integer only.
inline bool BernoulliTrial(RandomSource& rng, std::uint64_t threshold) {
  return rng.NextU64() < threshold;
}

inline std::uint64_t BernoulliThreshold(double p) {
  if (p <= 0) return 0;
  if (p >= 1) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(p, 64));
}

class LaplaceDistribution {
 public:
  static absl::StatusOr<LaplaceDistribution> Create(double scale) {
    if (!(scale > 0) || !std::isfinite(scale)) {
      return absl::InvalidArgumentError(
          "Laplace scale must be positive and finite");
    }
    return LaplaceDistribution(scale);
  }

  // Inverse CDF on |X|: -b * ln(U) with U uniform on (0, 1], random sign.
  double Sample(RandomSource& rng) const {
    bool negative = RandomSign(rng);
    double magnitude = -scale_ * std::log(UniformOpenClosed(rng));
    return negative ? -magnitude : magnitude;
  }

  double scale() const { return scale_; }
  double Variance() const { return 2 * scale_ * scale_; }

  double Cdf(double x) const {
    return x < 0 ? 0.5 * std::exp(x / scale_)
                 : 1 - 0.5 * std::exp(-x / scale_);
  }

 private:
  explicit LaplaceDistribution(double scale) : scale_(scale) {}
  double scale_;
};

// Snapping mechanism: clamp the input to [-B, B], add Laplace noise computed
// as S * lambda * ln(U) with a full-precision U, round to the nearest
// multiple of Lambda, clamp to [-B, B] again.
//
// Ladder rule: Lambda is the smallest power of two >= lambda (the Laplace
// scale). Outputs are multiples of Lambda or exactly +-B.
class SnappingMechanism {
 public:
  static absl::StatusOr<SnappingMechanism> Create(double scale, double bound) {
    if (!(scale > 0) || !std::isfinite(scale)) {
      return absl::InvalidArgumentError(
          "snapping scale must be positive and finite");
    }
    if (!(bound > 0) || !std::isfinite(bound)) {
      return absl::InvalidArgumentError(
          "snapping clamp bound must be positive and finite");
    }
    return SnappingMechanism(scale, bound, LadderFor(scale));
  }

  static double LadderFor(double scale) {
    int exponent = 0;
    double mantissa = std::frexp(scale, &exponent);  // scale = m * 2^e
    if (mantissa == 0.5) return scale;
    return std::ldexp(1.0, exponent);
  }

  double Sample(RandomSource& rng, double true_value) const {
    double clamped = std::clamp(true_value, -bound_, bound_);
    bool negative = RandomSign(rng);
    double noise = scale_ * std::log(UniformOpenClosed(rng));
    double noisy = negative ? clamped - noise : clamped + noise;
    double snapped = std::nearbyint(noisy / ladder_) * ladder_;
    return std::clamp(snapped, -bound_, bound_);
  }

  double scale() const { return scale_; }
  double bound() const { return bound_; }
  double ladder() const { return ladder_; }

 private:
  SnappingMechanism(double scale, double bound, double ladder)
      : scale_(scale), bound_(bound), ladder_(ladder) {}
  double scale_;
  double bound_;
  double ladder_;
};

class GaussianDistribution {
 public:
  static absl::StatusOr<GaussianDistribution> Create(double sigma) {
    if (!(sigma > 0) || !std::isfinite(sigma)) {
      return absl::InvalidArgumentError(
          "Gaussian sigma must be positive and finite");
    }
    return GaussianDistribution(sigma);
  }

  // Box-Muller on two full-precision uniforms.
  double Sample(RandomSource& rng) const {
    double radius = std::sqrt(-2.0 * std::log(UniformOpenClosed(rng)));
    double angle = 2.0 * std::numbers::pi * UniformOpenClosed(rng);
    return sigma_ * radius * std::cos(angle);
  }

  double sigma() const { return sigma_; }

  double Cdf(double x) const {
    return 0.5 * std::erfc(-x / (sigma_ * std::numbers::sqrt2));
  }

 private:
  explicit GaussianDistribution(double sigma) : sigma_(sigma) {}
  double sigma_;
};

class ExponentialDistribution {
 public:
  static absl::StatusOr<ExponentialDistribution> Create(double scale) {
    if (!(scale > 0) || !std::isfinite(scale)) {
      return absl::InvalidArgumentError(
          "exponential scale must be positive and finite");
    }
    return ExponentialDistribution(scale);
  }

  double Sample(RandomSource& rng) const {
    return -scale_ * std::log(UniformOpenClosed(rng));
  }

  double scale() const { return scale_; }
  double Cdf(double x) const { return x <= 0 ? 0 : -std::expm1(-x / scale_); }

 private:
  explicit ExponentialDistribution(double scale) : scale_(scale) {}
  double scale_;
};

// P(k) = (1 - alpha) / (1 + alpha) * alpha^|k| over the integers, sampled as
// the difference of two geometric variables built from integer Bernoulli
// trials.
class TwoSidedGeometric {
 public:
  static absl::StatusOr<TwoSidedGeometric> Create(double alpha) {
    if (!(alpha > 0 && alpha < 1)) {
      return absl::InvalidArgumentError(
          "two-sided geometric alpha must lie in (0, 1)");
    }
    return TwoSidedGeometric(alpha);
  }

  std::int64_t Sample(RandomSource& rng) const {
    return Geometric(rng) - Geometric(rng);
  }

  double alpha() const { return alpha_; }
  double Pmf(std::int64_t k) const {
    return (1 - alpha_) / (1 + alpha_) *
           std::pow(alpha_, static_cast<double>(k < 0 ? -k : k));
  }

 private:
  explicit TwoSidedGeometric(double alpha)
      : alpha_(alpha), threshold_(BernoulliThreshold(alpha)) {}

  // Failures before the first success, success probability 1 - alpha.
  std::int64_t Geometric(RandomSource& rng) const {
    std::int64_t k = 0;
    while (BernoulliTrial(rng, threshold_)) ++k;
    return k;
  }

  double alpha_;
  std::uint64_t threshold_;
};

// A weight stored as its natural logarithm. -inf represents weight 0.
struct LogWeight {
  double value = -std::numeric_limits<double>::infinity();

  static LogWeight Zero() { return LogWeight{}; }
  static LogWeight FromLinear(double a) { return LogWeight{std::log(a)}; }

  friend bool operator==(LogWeight, LogWeight) = default;
};

// log(a + b) as z + log1p(exp(v - z)) with z = max, v = min.
inline LogWeight LogAdd(LogWeight x, LogWeight y) {
  double z = std::fmax(x.value, y.value);
  double v = std::fmin(x.value, y.value);
  if (v == -std::numeric_limits<double>::infinity()) return LogWeight{z};
  if (z == std::numeric_limits<double>::infinity()) return LogWeight{z};
  return LogWeight{z + std::log1p(std::exp(v - z))};
}

inline LogWeight LogMultiply(LogWeight x, LogWeight y) {
  return LogWeight{x.value + y.value};
}

// log(sum_i exp(w_i)), accumulated pairwise with LogAdd.
inline LogWeight LogSumExp(std::span<const double> log_weights) {
  LogWeight acc = LogWeight::Zero();
  for (double w : log_weights) acc = LogAdd(acc, LogWeight{w});
  return acc;
}

// One-shot sampling helpers.
inline absl::StatusOr<double> SampleLaplace(RandomSource& rng, double scale) {
  DPCORE_ASSIGN_OR_RETURN(LaplaceDistribution d,
                          LaplaceDistribution::Create(scale));
  return d.Sample(rng);
}

inline absl::StatusOr<double> SampleSnappedLaplace(RandomSource& rng,
                                                   double true_value,
                                                   double scale,
                                                   double bound) {
  DPCORE_ASSIGN_OR_RETURN(SnappingMechanism d,
                          SnappingMechanism::Create(scale, bound));
  return d.Sample(rng, true_value);
}

inline absl::StatusOr<double> SampleGaussian(RandomSource& rng, double sigma) {
  DPCORE_ASSIGN_OR_RETURN(GaussianDistribution d,
                          GaussianDistribution::Create(sigma));
  return d.Sample(rng);
}

inline absl::StatusOr<double> SampleExponential(RandomSource& rng,
                                                double scale) {
  DPCORE_ASSIGN_OR_RETURN(ExponentialDistribution d,
                          ExponentialDistribution::Create(scale));
  return d.Sample(rng);
}

inline absl::StatusOr<std::int64_t> SampleTwoSidedGeometric(RandomSource& rng,
                                                            double alpha) {
  DPCORE_ASSIGN_OR_RETURN(TwoSidedGeometric d, TwoSidedGeometric::Create(alpha));
  return d.Sample(rng);
}

}  // namespace dpcore

#endif  // DPCORE_NOISE_H_
