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

// Two-phase black-box DP testing. An event is chosen from one batch of runs
// on a neighboring pair, then a fresh batch is used to test
// P(M(d1) in E) <= e^eps P(M(d2) in E) + delta.

#ifndef DPCORE_AUDIT_BLACKBOX_H_
#define DPCORE_AUDIT_BLACKBOX_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "boost/math/distributions/hypergeometric.hpp"
#include "dpcore/internal/format.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {
namespace audit {

enum class OutcomeKind { kReal, kIndex };

// A mechanism seen only through its outputs. For index outcomes `run`
// returns the index as a double.
struct MechanismUnderTest {
  std::string name;
  OutcomeKind kind = OutcomeKind::kReal;
  // 0 for pure eps claims; otherwise the delta of an (eps, delta) claim.
  double delta = 0;
  std::function<double(const Table&, double eps, RandomSource&)> run;
  // Optional: n runs at once, for targets where a call is expensive (an
  // external process). Used in place of `run` when set.
  std::function<std::vector<double>(const Table&, double eps, std::size_t n,
                                    RandomSource&)>
      run_batch;
};

struct NeighborPair {
  std::string name;
  Table d1;
  Table d2;
};

// R1 integer in [0, 100], R3 integer in [0, 1].
inline Schema StandardSuiteSchema() {
  return *Schema::Create({*ColumnMeta::Integer("r1", 0, 100),
                          *ColumnMeta::Integer("r3", 0, 1)});
}

// R1 integer in [0, 100], R2 categorical with number-like strings, R3 in
// [0, 1].
inline Schema DraftSuiteSchema() {
  return *Schema::Create(
      {*ColumnMeta::Integer("r1", 0, 100),
       *ColumnMeta::Categorical("r2", {"1", "b", "c", "d", "2.0"}),
       *ColumnMeta::Integer("r3", 0, 1)});
}

namespace internal {

inline bool IsUnitInterval(const ColumnMeta& c, double hi) {
  return c.is_numeric() && c.lower() == 0 && c.upper() == hi;
}

}  // namespace internal

// Neighboring pairs whose records are as far apart as the domain allows.
//   two columns:   DB1=∅, DB2={(0,0)}, DB3={(100,1),(0,0)},
//                  DB4={(100,1),(50,0),(0,0)}; pairs 1-2, 2-3, 3-4.
//   three columns: DB2={(0,"1",0)}, DB3=DB2+(100,"2.0",1),
//                  DB4=DB3+(100,"1",0), DB5=DB3+(50,"c",0);
//                  pairs 1-2, 2-3, 3-4, 3-5.
inline absl::StatusOr<std::vector<NeighborPair>> DefaultNeighborSuite(
    const Schema& schema) {
  auto make = [&](std::vector<Row> rows) {
    return MakeTable(schema, std::move(rows));
  };
  std::vector<NeighborPair> pairs;
  if (schema.size() == 2 &&
      internal::IsUnitInterval(schema.column(0), 100) &&
      internal::IsUnitInterval(schema.column(1), 1)) {
    auto cell = [&](std::size_t c, double v) -> Value {
      if (schema.column(c).kind() == ColumnKind::kReal) return v;
      return static_cast<std::int64_t>(v);
    };
    Row r00{cell(0, 0), cell(1, 0)};
    Row r100{cell(0, 100), cell(1, 1)};
    Row r50{cell(0, 50), cell(1, 0)};
    DPCORE_ASSIGN_OR_RETURN(Table db1, make({}));
    DPCORE_ASSIGN_OR_RETURN(Table db2, make({r00}));
    DPCORE_ASSIGN_OR_RETURN(Table db3, make({r100, r00}));
    DPCORE_ASSIGN_OR_RETURN(Table db4, make({r100, r50, r00}));
    pairs.push_back({"DB1-DB2", db1, db2});
    pairs.push_back({"DB2-DB3", db2, db3});
    pairs.push_back({"DB3-DB4", db3, db4});
    return pairs;
  }
  if (schema.size() == 3 &&
      internal::IsUnitInterval(schema.column(0), 100) &&
      schema.column(1).kind() == ColumnKind::kCategorical &&
      internal::IsUnitInterval(schema.column(2), 1)) {
    const ColumnMeta& cat = schema.column(1);
    auto code = [&](std::string_view v) -> absl::StatusOr<Value> {
      std::optional<std::int64_t> c = cat.CategoryCode(v);
      if (!c) {
        return absl::InvalidArgumentError(dpcore::internal::StrCat(
            "categorical column must contain '", v, "'"));
      }
      return Value(*c);
    };
    auto num = [&](std::size_t c, double v) -> Value {
      if (schema.column(c).kind() == ColumnKind::kReal) return v;
      return static_cast<std::int64_t>(v);
    };
    DPCORE_ASSIGN_OR_RETURN(Value one, code("1"));
    DPCORE_ASSIGN_OR_RETURN(Value two, code("2.0"));
    DPCORE_ASSIGN_OR_RETURN(Value c, code("c"));
    Row a{num(0, 0), one, num(2, 0)};
    Row b{num(0, 100), two, num(2, 1)};
    Row d{num(0, 100), one, num(2, 0)};
    Row e{num(0, 50), c, num(2, 0)};
    DPCORE_ASSIGN_OR_RETURN(Table db1, make({}));
    DPCORE_ASSIGN_OR_RETURN(Table db2, make({a}));
    DPCORE_ASSIGN_OR_RETURN(Table db3, make({b, a}));
    DPCORE_ASSIGN_OR_RETURN(Table db4, make({b, a, d}));
    DPCORE_ASSIGN_OR_RETURN(Table db5, make({b, a, e}));
    pairs.push_back({"DB1-DB2", db1, db2});
    pairs.push_back({"DB2-DB3", db2, db3});
    pairs.push_back({"DB3-DB4", db3, db4});
    pairs.push_back({"DB3-DB5", db3, db5});
    return pairs;
  }
  return absl::InvalidArgumentError(
      "neighbor suite needs columns ([0,100], [0,1]) or "
      "([0,100], categorical, [0,1])");
}

// Closed interval [lower, upper] (ends may be infinite) for real outcomes,
// a set of indices for index outcomes.
struct OutcomeEvent {
  OutcomeKind kind = OutcomeKind::kReal;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::vector<double> members;

  bool Contains(double x) const {
    if (kind == OutcomeKind::kReal) return x >= lower && x <= upper;
    return std::find(members.begin(), members.end(), x) != members.end();
  }

  std::string ToString() const {
    if (kind == OutcomeKind::kReal) {
      return dpcore::internal::StrCat("[", dpcore::internal::FormatDouble(lower), ",",
                              dpcore::internal::FormatDouble(upper), "]");
    }
    std::vector<std::string> parts;
    for (double m : members) parts.push_back(dpcore::internal::FormatDouble(m));
    return dpcore::internal::StrCat("{", dpcore::internal::StrJoin(parts, ","), "}");
  }
};

class SearchPhaseSource;
class TestPhaseSource;

struct PhaseSources;
PhaseSources SplitPhases(RandomSource& root);

// Randomness for event selection. A distinct type from the test-phase
// source, so the two phases cannot share samples by accident.
class SearchPhaseSource {
 public:
  RandomSource& rng() { return rng_; }

 private:
  friend PhaseSources SplitPhases(RandomSource& root);
  explicit SearchPhaseSource(RandomSource rng) : rng_(std::move(rng)) {}
  RandomSource rng_;
};

class TestPhaseSource {
 public:
  RandomSource& rng() { return rng_; }

 private:
  friend PhaseSources SplitPhases(RandomSource& root);
  explicit TestPhaseSource(RandomSource rng) : rng_(std::move(rng)) {}
  RandomSource rng_;
};

struct PhaseSources {
  SearchPhaseSource search;
  TestPhaseSource test;
};

inline PhaseSources SplitPhases(RandomSource& root) {
  RandomSource search = root.Derive();
  RandomSource test = root.Derive();
  return PhaseSources{SearchPhaseSource(std::move(search)),
                      TestPhaseSource(std::move(test))};
}

// n runs of m on `table`. With workers > 1 the runs fan out over threads,
// each with its own derived source.
inline std::vector<double> SampleOutcomes(const MechanismUnderTest& m,
                                          const Table& table, double eps,
                                          std::size_t n, RandomSource& rng,
                                          unsigned workers = 1) {
  if (m.run_batch) return m.run_batch(table, eps, n, rng);
  std::vector<double> out(n);
  if (workers <= 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) out[i] = m.run(table, eps, rng);
    return out;
  }
  std::vector<RandomSource> sources;
  for (unsigned w = 0; w < workers; ++w) sources.push_back(rng.Derive());
  std::vector<std::thread> threads;
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        out[i] = m.run(table, eps, sources[w]);
      }
    });
  }
  for (std::thread& t : threads) t.join();
  return out;
}

inline std::uint64_t CountIn(std::span<const double> samples,
                             const OutcomeEvent& event) {
  std::uint64_t c = 0;
  for (double x : samples) c += event.Contains(x) ? 1 : 0;
  return c;
}

struct SearchResult {
  OutcomeEvent event;
  // True when d1 is the side expected to be denser: the test then checks
  // P(M(d1) in E) <= e^eps P(M(d2) in E).
  bool d1_first = true;
  std::uint64_t count_first = 0;
  std::uint64_t count_second = 0;
  // count_first / (e^eps max(count_second, 1)).
  double score = 0;
  // count_first reached the minimum support 0.001 n e^eps.
  bool eligible = false;

  bool BetterThan(const SearchResult& other) const {
    if (eligible != other.eligible) return eligible;
    return score > other.score;
  }
};

namespace internal {

inline std::vector<OutcomeEvent> CandidateEvents(OutcomeKind kind,
                                                 std::span<const double> a,
                                                 std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<OutcomeEvent> events;
  if (pooled.empty()) return events;
  std::vector<double> distinct = pooled;
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());

  if (kind == OutcomeKind::kIndex) {
    if (distinct.size() <= 10) {
      std::size_t k = distinct.size();
      std::uint32_t full = (1u << k) - 1;
      for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (mask == full && k > 1) break;
        OutcomeEvent e{OutcomeKind::kIndex, 0, 0, {}};
        for (std::size_t i = 0; i < k; ++i) {
          if (mask & (1u << i)) e.members.push_back(distinct[i]);
        }
        events.push_back(std::move(e));
      }
    } else {
      for (double v : distinct) {
        events.push_back(OutcomeEvent{OutcomeKind::kIndex, 0, 0, {v}});
      }
    }
    return events;
  }

  if (distinct.size() == 1) {
    events.push_back(OutcomeEvent{OutcomeKind::kReal, distinct[0],
                                  distinct[0], {}});
    return events;
  }
  // Pooled quantiles at 1% steps; intervals between adjacent cut points,
  // rays from each cut point, and atoms at repeated cut points.
  std::vector<double> cuts;
  for (int q = 1; q <= 99; ++q) {
    std::size_t idx = static_cast<std::size_t>(
        std::floor(q / 100.0 * static_cast<double>(pooled.size() - 1)));
    cuts.push_back(pooled[idx]);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> unique_cuts = cuts;
  unique_cuts.erase(std::unique(unique_cuts.begin(), unique_cuts.end()),
                    unique_cuts.end());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < unique_cuts.size(); ++i) {
    double c = unique_cuts[i];
    events.push_back(OutcomeEvent{OutcomeKind::kReal, -kInf, c, {}});
    events.push_back(OutcomeEvent{OutcomeKind::kReal, c, kInf, {}});
    events.push_back(OutcomeEvent{OutcomeKind::kReal, c, c, {}});
    if (i + 1 < unique_cuts.size()) {
      events.push_back(
          OutcomeEvent{OutcomeKind::kReal, c, unique_cuts[i + 1], {}});
    }
  }
  return events;
}

}  // namespace internal

// Picks the candidate event with the largest count ratio, in whichever
// orientation, among events with at least 0.001 n e^eps hits on the
// denser side. With no eligible candidate the densest event is returned.
inline SearchResult FindEvent(OutcomeKind kind, std::span<const double> a,
                              std::span<const double> b, double eps) {
  std::vector<OutcomeEvent> events = internal::CandidateEvents(kind, a, b);
  const double e_eps = std::exp(eps);
  const double min_count =
      0.001 * static_cast<double>(std::max(a.size(), b.size())) * e_eps;
  SearchResult best;
  best.score = -1;
  bool eligible_found = false;
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  auto count = [](const std::vector<double>& sorted, const OutcomeEvent& e) {
    if (e.kind == OutcomeKind::kReal) {
      auto lo = std::lower_bound(sorted.begin(), sorted.end(), e.lower);
      auto hi = std::upper_bound(sorted.begin(), sorted.end(), e.upper);
      return static_cast<std::uint64_t>(hi - lo);
    }
    std::uint64_t c = 0;
    for (double m : e.members) {
      c += static_cast<std::uint64_t>(
          std::upper_bound(sorted.begin(), sorted.end(), m) -
          std::lower_bound(sorted.begin(), sorted.end(), m));
    }
    return c;
  };
  for (const OutcomeEvent& e : events) {
    std::uint64_t ca = count(sa, e);
    std::uint64_t cb = count(sb, e);
    for (bool first_is_a : {true, false}) {
      std::uint64_t c1 = first_is_a ? ca : cb;
      std::uint64_t c2 = first_is_a ? cb : ca;
      bool eligible = static_cast<double>(c1) >= min_count;
      double score = static_cast<double>(c1) /
                     (e_eps * static_cast<double>(std::max<std::uint64_t>(
                                  c2, 1)));
      bool better = (eligible && !eligible_found) ||
                    (eligible == eligible_found && score > best.score);
      if (better) {
        eligible_found = eligible_found || eligible;
        best = SearchResult{e, first_is_a, c1, c2, score, eligible};
      }
    }
  }
  return best;
}

inline SearchResult EventSearch(const MechanismUnderTest& m,
                                const NeighborPair& pair, double eps,
                                std::size_t n_search,
                                SearchPhaseSource& source) {
  std::vector<double> a = SampleOutcomes(m, pair.d1, eps, n_search,
                                         source.rng());
  std::vector<double> b = SampleOutcomes(m, pair.d2, eps, n_search,
                                         source.rng());
  return FindEvent(m.kind, a, b, eps);
}

// P-value for H0: p1 <= e^eps p2 from c1 of n hits against c2 of n hits.
// c1 is thinned to Binomial(c1, e^-eps); under H0 the thinned count and c2
// are then no more than exchangeable, and Fisher's exact (hypergeometric)
// upper tail applies. The p-value is averaged over `draws` thinnings.
inline double HypergeometricPValue(std::uint64_t c1, std::uint64_t c2,
                                   std::uint64_t n, double eps,
                                   RandomSource& rng, int draws = 200) {
  if (c1 == 0 && c2 == 0) return 1.0;
  std::binomial_distribution<std::uint64_t> thin(c1, std::exp(-eps));
  double total = 0;
  for (int d = 0; d < draws; ++d) {
    std::uint64_t k = c1 == 0 ? 0 : thin(rng);
    std::uint64_t successes = k + c2;
    if (k == 0 || successes == 0) {
      total += 1.0;
      continue;
    }
    boost::math::hypergeometric_distribution<double> dist(
        static_cast<unsigned>(successes), static_cast<unsigned>(n),
        static_cast<unsigned>(2 * n));
    total += boost::math::cdf(
        boost::math::complement(dist, static_cast<unsigned>(k - 1)));
  }
  return std::clamp(total / draws, 0.0, 1.0);
}

// One-sided z-test of H0: p1 <= e^eps p2 + delta.
inline double ApproximateDeltaPValue(std::uint64_t c1, std::uint64_t c2,
                                     std::uint64_t n, double eps,
                                     double delta) {
  double dn = static_cast<double>(n);
  double p1 = static_cast<double>(c1) / dn;
  double p2 = static_cast<double>(c2) / dn;
  double e = std::exp(eps);
  double var = (p1 * (1 - p1) + e * e * p2 * (1 - p2)) / dn;
  double diff = p1 - e * p2 - delta;
  if (var <= 0) return diff > 0 ? 0.0 : 1.0;
  double z = diff / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

inline double PValueFromCounts(std::uint64_t c1, std::uint64_t c2,
                               std::uint64_t n, double eps, double delta,
                               RandomSource& rng, int draws = 200) {
  if (delta > 0) return ApproximateDeltaPValue(c1, c2, n, eps, delta);
  return HypergeometricPValue(c1, c2, n, eps, rng, draws);
}

// Both orientations, smaller p-value reported.
inline double TwoSidedPValue(std::uint64_t c1, std::uint64_t c2,
                             std::uint64_t n, double eps, double delta,
                             RandomSource& rng, int draws = 200) {
  return std::min(PValueFromCounts(c1, c2, n, eps, delta, rng, draws),
                  PValueFromCounts(c2, c1, n, eps, delta, rng, draws));
}

// Fresh runs on both sides, then the two-orientation p-value.
inline double DpHypothesisTest(const MechanismUnderTest& m,
                               const NeighborPair& pair,
                               const OutcomeEvent& event, double eps_run,
                               double eps_test, double delta,
                               std::size_t n_test, TestPhaseSource& source) {
  std::vector<double> a = SampleOutcomes(m, pair.d1, eps_run, n_test,
                                         source.rng());
  std::vector<double> b = SampleOutcomes(m, pair.d2, eps_run, n_test,
                                         source.rng());
  return TwoSidedPValue(CountIn(a, event), CountIn(b, event), n_test,
                        eps_test, delta, source.rng());
}

struct PValueVerdict {
  std::size_t count = 0;
  double mean = 1;
  double min = 1;
  double mean_threshold = 0.3;
  double alpha = 0.05;
  bool mean_pass = true;
  bool bonferroni_pass = true;
  bool policies_disagree = false;
};

// Mean policy: mean p above the threshold. Bonferroni policy: every p at
// least alpha / m. Both are always computed.
inline PValueVerdict AggregatePValues(std::span<const double> pvalues,
                                      double mean_threshold = 0.3,
                                      double alpha = 0.05) {
  PValueVerdict v;
  v.mean_threshold = mean_threshold;
  v.alpha = alpha;
  v.count = pvalues.size();
  if (pvalues.empty()) return v;
  double sum = 0;
  v.min = 1;
  for (double p : pvalues) {
    sum += p;
    v.min = std::min(v.min, p);
  }
  v.mean = sum / static_cast<double>(pvalues.size());
  v.mean_pass = v.mean > mean_threshold;
  v.bonferroni_pass =
      v.min >= alpha / static_cast<double>(pvalues.size());
  v.policies_disagree = v.mean_pass != v.bonferroni_pass;
  return v;
}

struct BatteryOptions {
  std::size_t n_search = 50000;
  std::size_t n_test = 100000;
  int repetitions = 50;
  int subsample_draws = 200;
  std::vector<double> multipliers = {0.5, 0.75, 1.0, 1.25, 1.5};
  double mean_threshold = 0.3;
  double alpha = 0.05;
  unsigned workers = 1;
};

struct EpsilonVerdict {
  double eps_test = 0;
  bool counts_toward_verdict = false;  // eps_test >= claimed eps
  std::string pair;
  SearchResult search;
  std::vector<double> pvalues;
  PValueVerdict verdict;
  // Pooled hit counts over all test repetitions, in search orientation.
  std::uint64_t test_first = 0;
  std::uint64_t test_second = 0;
};

struct Counterexample {
  std::string pair;
  OutcomeEvent event;
  double eps_test = 0;
  double estimated_ratio = 0;  // test-phase P(first in E) / P(second in E)
  double mean_p = 1;
};

struct BatteryResult {
  std::string mechanism;
  double claimed_eps = 0;
  std::vector<EpsilonVerdict> per_eps;
  bool violation = false;
  std::optional<Counterexample> counterexample;
};

// Full battery: for every eps' in the grid, the best (pair, event) found in
// the search phase is tested `repetitions` times on fresh runs. A violation
// is reported when any eps' >= claimed fails the mean policy.
inline BatteryResult RunBattery(const MechanismUnderTest& m,
                                std::span<const NeighborPair> pairs,
                                double claimed_eps,
                                const BatteryOptions& options,
                                RandomSource& root) {
  PhaseSources phases = SplitPhases(root);
  BatteryResult result;
  result.mechanism = m.name;
  result.claimed_eps = claimed_eps;

  struct PairSamples {
    std::vector<double> a;
    std::vector<double> b;
  };
  std::vector<PairSamples> search_samples;
  for (const NeighborPair& pair : pairs) {
    search_samples.push_back(
        {SampleOutcomes(m, pair.d1, claimed_eps, options.n_search,
                        phases.search.rng(), options.workers),
         SampleOutcomes(m, pair.d2, claimed_eps, options.n_search,
                        phases.search.rng(), options.workers)});
  }

  std::vector<std::size_t> chosen_pair;
  for (double multiplier : options.multipliers) {
    EpsilonVerdict v;
    v.eps_test = multiplier * claimed_eps;
    v.counts_toward_verdict = multiplier >= 1.0;
    std::size_t best_index = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      SearchResult r = FindEvent(m.kind, search_samples[p].a,
                                 search_samples[p].b, v.eps_test);
      if (p == 0 || r.BetterThan(v.search)) {
        v.search = r;
        best_index = p;
      }
    }
    v.pair = pairs.empty() ? "" : pairs[best_index].name;
    chosen_pair.push_back(best_index);
    result.per_eps.push_back(std::move(v));
  }
  if (pairs.empty()) return result;

  std::set<std::size_t> needed(chosen_pair.begin(), chosen_pair.end());
  for (int rep = 0; rep < options.repetitions; ++rep) {
    for (std::size_t p : needed) {
      std::vector<double> a =
          SampleOutcomes(m, pairs[p].d1, claimed_eps, options.n_test,
                         phases.test.rng(), options.workers);
      std::vector<double> b =
          SampleOutcomes(m, pairs[p].d2, claimed_eps, options.n_test,
                         phases.test.rng(), options.workers);
      for (std::size_t k = 0; k < result.per_eps.size(); ++k) {
        if (chosen_pair[k] != p) continue;
        EpsilonVerdict& v = result.per_eps[k];
        std::uint64_t ca = CountIn(a, v.search.event);
        std::uint64_t cb = CountIn(b, v.search.event);
        v.test_first += v.search.d1_first ? ca : cb;
        v.test_second += v.search.d1_first ? cb : ca;
        v.pvalues.push_back(TwoSidedPValue(ca, cb, options.n_test,
                                           v.eps_test, m.delta,
                                           phases.test.rng(),
                                           options.subsample_draws));
      }
    }
  }
  for (EpsilonVerdict& v : result.per_eps) {
    v.verdict =
        AggregatePValues(v.pvalues, options.mean_threshold, options.alpha);
    if (v.counts_toward_verdict && !v.verdict.mean_pass) {
      result.violation = true;
      if (!result.counterexample ||
          v.eps_test > result.counterexample->eps_test) {
        double ratio =
            static_cast<double>(v.test_first) /
            static_cast<double>(std::max<std::uint64_t>(v.test_second, 1));
        result.counterexample =
            Counterexample{v.pair, v.search.event, v.eps_test, ratio,
                           v.verdict.mean};
      }
    }
  }
  return result;
}

}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_BLACKBOX_H_
