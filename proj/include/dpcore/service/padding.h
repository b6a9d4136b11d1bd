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

// Per-record padding of predicate evaluation. Every record costs exactly xi
// on the session clock; an evaluation that runs past xi counts as TRUE.

#ifndef DPCORE_SERVICE_PADDING_H_
#define DPCORE_SERVICE_PADDING_H_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dpcore/data_access.h"
#include "dpcore/relational.h"
#include "dpcore/service/clock.h"

namespace dpcore {
namespace service {

// Evaluates a predicate with a deadline. nullopt means the deadline passed
// before an answer was ready.
class BoundedEvaluator {
 public:
  virtual ~BoundedEvaluator() = default;
  virtual std::optional<bool> EvaluateBy(const Predicate& predicate,
                                         const Row& row, Clock& clock,
                                         std::int64_t deadline_ns) = 0;
};

// Runs the predicate and checks the clock afterwards.
class DirectBoundedEvaluator : public BoundedEvaluator {
 public:
  static DirectBoundedEvaluator& Default() {
    static DirectBoundedEvaluator* e = new DirectBoundedEvaluator;
    return *e;
  }
  std::optional<bool> EvaluateBy(const Predicate& predicate, const Row& row,
                                 Clock& clock,
                                 std::int64_t deadline_ns) override {
    bool result = predicate.Matches(row);
    if (clock.NowNs() > deadline_ns) return std::nullopt;
    return result;
  }
};

// Predicate work with a declared cost per row, spent on the clock. A cost
// beyond the deadline is cut off there, as a preempting executor would.
class CostModelEvaluator : public BoundedEvaluator {
 public:
  explicit CostModelEvaluator(std::function<std::int64_t(const Row&)> cost)
      : cost_(std::move(cost)) {}

  std::optional<bool> EvaluateBy(const Predicate& predicate, const Row& row,
                                 Clock& clock,
                                 std::int64_t deadline_ns) override {
    std::int64_t available = deadline_ns - clock.NowNs();
    std::int64_t cost = cost_(row);
    if (cost > available) {
      clock.Consume(std::max<std::int64_t>(available, 0));
      return std::nullopt;
    }
    clock.Consume(cost);
    return predicate.Matches(row);
  }

 private:
  std::function<std::int64_t(const Row&)> cost_;
};

class PaddedEvaluator : public PredicateEvaluator {
 public:
  PaddedEvaluator(Clock& clock, std::int64_t xi_ns, BoundedEvaluator& inner)
      : clock_(clock), xi_ns_(xi_ns), inner_(inner) {}

  bool Evaluate(const Predicate& predicate, const Row& row) override {
    std::int64_t deadline = clock_.NowNs() + xi_ns_;
    std::optional<bool> result =
        inner_.EvaluateBy(predicate, row, clock_, deadline);
    clock_.SleepUntil(deadline);
    ++records_;
    if (!result) {
      ++timeouts_;
      return true;
    }
    return *result;
  }

  std::uint64_t records() const { return records_; }
  std::uint64_t timeouts() const { return timeouts_; }

 private:
  Clock& clock_;
  std::int64_t xi_ns_;
  BoundedEvaluator& inner_;
  std::uint64_t records_ = 0;
  std::uint64_t timeouts_ = 0;
};

// 95th-percentile cost of a four-term predicate over synthetic rows, at
// least `floor_ns`. Touches no user data.
inline std::int64_t CalibrateXi(Clock& clock, std::size_t rows = 2000,
                                std::int64_t floor_ns = 1000) {
  std::vector<ColumnMeta> cols = {*ColumnMeta::Integer("a", 0, 1000),
                                  *ColumnMeta::Real("b", 0, 1),
                                  *ColumnMeta::Categorical("c", {"x", "y"})};
  Schema schema = *Schema::Create(std::move(cols));
  Predicate p = *Predicate::Create(
      schema, {{"a", CompareOp::kLess, 500.0},
               {"a", CompareOp::kGreaterEqual, 10.0},
               {"b", CompareOp::kLessEqual, 0.5},
               {"c", CompareOp::kEqual, std::string("x")}});
  std::vector<std::int64_t> costs;
  costs.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    Row row = {Value(static_cast<std::int64_t>(i % 1001)),
               Value(static_cast<double>(i % 97) / 97.0),
               Value(static_cast<std::int64_t>(i % 2))};
    std::int64_t start = clock.NowNs();
    volatile bool sink = p.Matches(row);
    (void)sink;
    costs.push_back(clock.NowNs() - start);
  }
  std::size_t k = costs.size() * 95 / 100;
  std::nth_element(costs.begin(), costs.begin() + k, costs.end());
  return std::max(costs[k], floor_ns);
}

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_PADDING_H_
