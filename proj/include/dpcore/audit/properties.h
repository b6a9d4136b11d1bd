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

// White-box property checks: stability and sensitivity over exhaustive small
// instances, Lipschitz bounds of linear maps, exponential-mechanism weight
// ratios, accountant mediation and histogram cell sets.

#ifndef DPCORE_AUDIT_PROPERTIES_H_
#define DPCORE_AUDIT_PROPERTIES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/data_access.h"
#include "dpcore/internal/format.h"
#include "dpcore/matrix.h"
#include "dpcore/mechanisms.h"
#include "dpcore/noise.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {
namespace audit {

// A pair of tables over one schema with |a ⊖ b| = distance.
struct TablePair {
  Table a;
  Table b;
  std::uint64_t distance = 0;
};

// Every pair of multisets over `domain` with at most `max_rows` rows each
// and symmetric difference between 1 and `max_distance`.
inline absl::StatusOr<std::vector<TablePair>> EnumerateSmallPairs(
    const Schema& schema, const std::vector<Row>& domain,
    std::size_t max_rows = 6, std::uint64_t max_distance = 3) {
  // Multiplicity vectors summing to at most max_rows.
  std::vector<std::vector<std::uint32_t>> multisets;
  std::vector<std::uint32_t> current(domain.size(), 0);
  std::function<void(std::size_t, std::size_t)> fill = [&](std::size_t i,
                                                           std::size_t left) {
    if (i == domain.size()) {
      multisets.push_back(current);
      return;
    }
    for (std::size_t m = 0; m <= left; ++m) {
      current[i] = static_cast<std::uint32_t>(m);
      fill(i + 1, left - m);
    }
    current[i] = 0;
  };
  fill(0, max_rows);

  std::vector<Table> tables;
  tables.reserve(multisets.size());
  for (const auto& counts : multisets) {
    std::vector<Row> rows;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      for (std::uint32_t k = 0; k < counts[i]; ++k) rows.push_back(domain[i]);
    }
    DPCORE_ASSIGN_OR_RETURN(Table t, MakeTable(schema, std::move(rows)));
    tables.push_back(std::move(t));
  }
  std::vector<TablePair> pairs;
  for (std::size_t x = 0; x < multisets.size(); ++x) {
    for (std::size_t y = 0; y < multisets.size(); ++y) {
      std::uint64_t d = 0;
      for (std::size_t i = 0; i < domain.size(); ++i) {
        d += multisets[x][i] > multisets[y][i]
                 ? multisets[x][i] - multisets[y][i]
                 : multisets[y][i] - multisets[x][i];
      }
      if (d >= 1 && d <= max_distance) {
        pairs.push_back(TablePair{tables[x], tables[y], d});
      }
    }
  }
  return pairs;
}

// Output of a transform chain: a table or a grouped table.
using TransformOutput = std::variant<Table, GroupedTable>;
using TransformChain =
    std::function<absl::StatusOr<TransformOutput>(const Table&)>;

inline StabilityBound OutputStability(const TransformOutput& out) {
  return std::visit([](const auto& t) { return t.stability(); }, out);
}

inline absl::StatusOr<std::uint64_t> OutputDistance(const TransformOutput& a,
                                                    const TransformOutput& b) {
  if (a.index() != b.index()) {
    return absl::InvalidArgumentError("outputs have different shapes");
  }
  if (const Table* ta = std::get_if<Table>(&a)) {
    return SymmetricDifference(*ta, std::get<Table>(b));
  }
  return SymmetricDifference(std::get<GroupedTable>(a),
                             std::get<GroupedTable>(b));
}

struct StabilityReport {
  std::string name;
  bool pass = true;
  std::uint64_t claimed_factor = 0;
  std::uint64_t pairs_checked = 0;
  // Largest observed |C(A) ⊖ C(B)| / |A ⊖ B| and a pair achieving it.
  double max_ratio = 0;
  std::uint64_t max_output_distance = 0;
  std::optional<TablePair> witness;
  // Tracked metadata differed between A and B.
  bool metadata_dependent = false;
};

// Passes iff |C(A) ⊖ C(B)| <= factor × |A ⊖ B| for every pair, where factor
// is the stability the chain itself reports (relative to its input's).
inline absl::StatusOr<StabilityReport> StabilityCheck(
    std::string name, const TransformChain& chain,
    std::span<const TablePair> pairs) {
  StabilityReport report;
  report.name = std::move(name);
  for (const TablePair& p : pairs) {
    DPCORE_ASSIGN_OR_RETURN(TransformOutput oa, chain(p.a));
    DPCORE_ASSIGN_OR_RETURN(TransformOutput ob, chain(p.b));
    StabilityBound sa = OutputStability(oa);
    StabilityBound sb = OutputStability(ob);
    if (sa.is_infinite() != sb.is_infinite() ||
        sa.AsDouble() != sb.AsDouble()) {
      report.metadata_dependent = true;
      report.pass = false;
    }
    std::uint64_t factor =
        sa.is_infinite() ? std::numeric_limits<std::uint64_t>::max()
                         : static_cast<std::uint64_t>(sa.AsDouble());
    report.claimed_factor = std::max(report.claimed_factor, factor);
    DPCORE_ASSIGN_OR_RETURN(std::uint64_t d, OutputDistance(oa, ob));
    double ratio = static_cast<double>(d) / static_cast<double>(p.distance);
    if (ratio > report.max_ratio || !report.witness) {
      report.max_ratio = std::max(report.max_ratio, ratio);
      if (ratio >= report.max_ratio) report.witness = p;
    }
    report.max_output_distance = std::max(report.max_output_distance, d);
    if (!sa.is_infinite() && d > factor * p.distance) report.pass = false;
    ++report.pairs_checked;
  }
  return report;
}

// Bernoulli sampling under the natural coupling: every (row, occurrence)
// instance owns one coin, shared by both inputs. The differing instances
// are the only ones that can differ in the output, so the output distance
// never exceeds the input distance.
inline absl::StatusOr<StabilityReport> CoupledBernoulliCheck(
    std::span<const TablePair> pairs, double p, RandomSource& rng,
    int trials_per_pair = 4) {
  StabilityReport report;
  report.name = "bernoulli_sample";
  report.claimed_factor = 1;
  std::uint64_t threshold = BernoulliThreshold(p);
  for (const TablePair& pair : pairs) {
    for (int t = 0; t < trials_per_pair; ++t) {
      std::map<std::pair<Row, std::uint32_t>, bool> coins;
      auto sample = [&](const Table& table) {
        std::map<Row, std::uint32_t> seen;
        std::vector<Row> kept;
        for (const Row& row : dpcore::internal::SortedRows(table.rows())) {
          std::uint32_t occurrence = seen[row]++;
          auto key = std::make_pair(row, occurrence);
          auto it = coins.find(key);
          if (it == coins.end()) {
            it = coins.emplace(key, p >= 1 || BernoulliTrial(rng, threshold))
                     .first;
          }
          if (it->second) kept.push_back(row);
        }
        return kept;
      };
      std::vector<Row> ka = sample(pair.a);
      std::vector<Row> kb = sample(pair.b);
      std::uint64_t d = dpcore::internal::SortedMultisetDistance(ka, kb);
      double ratio = static_cast<double>(d) / static_cast<double>(pair.distance);
      if (ratio > report.max_ratio || !report.witness) {
        report.max_ratio = std::max(report.max_ratio, ratio);
        report.witness = pair;
      }
      report.max_output_distance = std::max(report.max_output_distance, d);
      if (d > pair.distance) report.pass = false;
      ++report.pairs_checked;
    }
  }
  return report;
}

using AggregationPipeline =
    std::function<absl::StatusOr<StatVector>(const Table&)>;

struct SensitivityReport {
  std::string name;
  bool pass = true;
  double claimed = 0;
  std::uint64_t pairs_checked = 0;
  // Largest observed L1 distance per unit of input distance.
  double max_effect = 0;
  std::optional<TablePair> witness;
  bool metadata_dependent = false;
};

inline absl::StatusOr<SensitivityReport> SensitivityCheck(
    std::string name, const AggregationPipeline& pipeline,
    std::span<const TablePair> pairs) {
  SensitivityReport report;
  report.name = std::move(name);
  for (const TablePair& p : pairs) {
    DPCORE_ASSIGN_OR_RETURN(StatVector va, pipeline(p.a));
    DPCORE_ASSIGN_OR_RETURN(StatVector vb, pipeline(p.b));
    if (va.l1_sensitivity() != vb.l1_sensitivity() ||
        va.size() != vb.size() || va.labels() != vb.labels()) {
      report.metadata_dependent = true;
      report.pass = false;
      continue;
    }
    report.claimed = va.l1_sensitivity();
    double l1 = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
      l1 += std::fabs(va.values()[i] - vb.values()[i]);
    }
    double effect = l1 / static_cast<double>(p.distance);
    if (effect > report.max_effect || !report.witness) {
      report.max_effect = std::max(report.max_effect, effect);
      report.witness = p;
    }
    // Relative slack for rounding in the sums.
    if (effect > report.claimed * (1 + 1e-12)) report.pass = false;
    ++report.pairs_checked;
  }
  return report;
}

struct LipschitzReport {
  bool pass = true;
  double claimed = 0;
  double max_observed = 0;
};

// ||M(x + d) - M x||_1 <= c ||M||_1 over signed unit perturbations of size c
// in each coordinate, plus `random_trials` random perturbations of L1 size c.
inline LipschitzReport LipschitzCheck(const Matrix& m, double c,
                                      RandomSource& rng,
                                      int random_trials = 1000) {
  LipschitzReport report;
  report.claimed = m.L1OperatorNorm() * c;
  std::vector<double> x(m.cols(), 0.0);
  x.assign(m.cols(), 0.0);
  std::vector<double> base = *m.Apply(x);
  auto measure = [&](const std::vector<double>& d) {
    std::vector<double> moved = *m.Apply(d);
    double l1 = 0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
      l1 += std::fabs(moved[i] - base[i]);
    }
    report.max_observed = std::max(report.max_observed, l1);
    if (l1 > report.claimed * (1 + 1e-12)) report.pass = false;
  };
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> d(m.cols(), 0.0);
      d[j] = sign * c;
      measure(d);
    }
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int t = 0; t < random_trials && m.cols() > 0; ++t) {
    std::vector<double> d(m.cols());
    double norm = 0;
    for (double& v : d) {
      v = unit(rng);
      norm += std::fabs(v);
    }
    if (norm == 0) continue;
    for (double& v : d) v *= c / norm;
    measure(d);
  }
  return report;
}

// Log-domain selection probabilities as an implementation reports them.
using ExpMechLogProbabilities = std::function<absl::StatusOr<
    std::vector<double>>(std::span<const double>, double, double)>;

struct ExpMechRatioReport {
  bool pass = true;
  bool hole_found = false;
  int hole_checks = 0;
  int ratio_trials = 0;
  double worst_excess = 0;  // max |log ratio| - eps over trials
  std::string failure;
};

namespace internal {

// Support as the sampler sees it: finite log-probability that a
// full-precision uniform can reach.
inline std::vector<bool> Reachable(std::span<const double> log_p) {
  std::vector<bool> out;
  for (double lp : log_p) {
    out.push_back(std::isfinite(lp) && lp > kLogSmallestUniform);
  }
  return out;
}

}  // namespace internal

// Zero/nonzero hole check under the (40, 1) <-> (1, 40) swap at eps = 1 and
// at eps = 10^x for x on a grid over [-6, 1], Δq = 0.5.
inline ExpMechRatioReport ExpMechHoleCheck(const ExpMechLogProbabilities& f,
                                           int grid_points = 15) {
  ExpMechRatioReport report;
  std::vector<double> eps_values = {1.0};
  for (int i = 0; i < grid_points; ++i) {
    eps_values.push_back(
        std::pow(10.0, -6.0 + 7.0 * i / std::max(grid_points - 1, 1)));
  }
  const std::vector<double> q1 = {40, 1};
  const std::vector<double> q2 = {1, 40};
  for (double eps : eps_values) {
    ++report.hole_checks;
    absl::StatusOr<std::vector<double>> a = f(q1, 0.5, eps);
    absl::StatusOr<std::vector<double>> b = f(q2, 0.5, eps);
    if (!a.ok() || !b.ok() || a->size() != 2 || b->size() != 2) {
      report.pass = false;
      report.failure = "implementation failed on the hole check inputs";
      continue;
    }
    std::vector<bool> ra = internal::Reachable(*a);
    std::vector<bool> rb = internal::Reachable(*b);
    if (ra != rb || std::find(ra.begin(), ra.end(), false) != ra.end()) {
      report.pass = false;
      report.hole_found = true;
      report.failure = dpcore::internal::StrCat(
          "candidate probability flips between zero and nonzero at eps=",
          dpcore::internal::FormatDouble(eps));
    }
  }
  return report;
}

// Random eps = 10^x (x in [-6, 1]), Δq in [0.1, 5], five integer qualities
// in [-1000, 1000]. Neighbor D' shifts one random coordinate by s and D*
// shifts all of them by s, with s = min(1, Δq) so the shift stays within
// the declared quality sensitivity. Every log ratio must lie in
// [-eps, eps] up to rounding.
inline ExpMechRatioReport ExpMechRatioCheck(const ExpMechLogProbabilities& f,
                                            RandomSource& rng,
                                            int trials = 1000) {
  ExpMechRatioReport report = ExpMechHoleCheck(f);
  std::uniform_real_distribution<double> x_dist(-6.0, 1.0);
  std::uniform_real_distribution<double> dq_dist(0.1, 5.0);
  std::uniform_int_distribution<int> beta(-1000, 1000);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int t = 0; t < trials; ++t) {
    ++report.ratio_trials;
    double eps = std::pow(10.0, x_dist(rng));
    double dq = dq_dist(rng);
    double shift = std::min(1.0, dq);
    std::vector<double> q(5);
    for (double& v : q) v = beta(rng);
    std::vector<double> q_one = q;
    q_one[static_cast<std::size_t>(pick(rng))] += shift;
    std::vector<double> q_all = q;
    for (double& v : q_all) v += shift;
    absl::StatusOr<std::vector<double>> base = f(q, dq, eps);
    for (const std::vector<double>* other : {&q_one, &q_all}) {
      absl::StatusOr<std::vector<double>> moved = f(*other, dq, eps);
      if (!base.ok() || !moved.ok()) {
        report.pass = false;
        report.failure = "implementation returned an error";
        continue;
      }
      for (std::size_t i = 0; i < q.size(); ++i) {
        double a = (*base)[i];
        double b = (*moved)[i];
        double excess;
        if (std::isnan(a) || std::isnan(b)) {
          excess = std::numeric_limits<double>::infinity();
        } else if (a == b) {
          excess = -eps;  // covers two -inf values: a hole on both sides
          if (!std::isfinite(a)) excess = std::numeric_limits<double>::infinity();
        } else {
          excess = std::fabs(a - b) - eps;
        }
        double tolerance = 1e-9 * eps + 1e-12;
        report.worst_excess = std::max(report.worst_excess, excess);
        if (excess > tolerance) {
          report.pass = false;
          if (report.failure.empty()) {
            report.failure = dpcore::internal::StrCat(
                "probability ratio outside [e^-eps, e^eps] at eps=",
                dpcore::internal::FormatDouble(eps));
          }
        }
      }
    }
  }
  return report;
}

struct MediationReport {
  bool pass = true;
  std::uint64_t invocations = 0;
  std::uint64_t ledger_growth = 0;
};

// Runs `release` n times and compares the accountant's granted count with
// the number of releases that returned OK.
inline MediationReport AccountantMediationCheck(
    Accountant& accountant,
    const std::function<absl::Status()>& release, int n = 100) {
  MediationReport report;
  std::uint64_t before = accountant.granted_count();
  for (int i = 0; i < n; ++i) {
    if (release().ok()) ++report.invocations;
  }
  report.ledger_growth = accountant.granted_count() - before;
  report.pass = report.ledger_growth == report.invocations;
  return report;
}

struct CellSetReport {
  bool pass = true;
  std::size_t runs = 0;
  std::vector<std::string> reference;
};

// A histogram release yields the same labelled cells on every run across
// every table of every pair.
inline CellSetReport CellSetCheck(
    const std::function<absl::StatusOr<std::vector<std::string>>(
        const Table&)>& release,
    std::span<const Table> tables, int runs_per_table = 10) {
  CellSetReport report;
  bool have_reference = false;
  for (const Table& t : tables) {
    for (int r = 0; r < runs_per_table; ++r) {
      ++report.runs;
      absl::StatusOr<std::vector<std::string>> cells = release(t);
      if (!cells.ok()) {
        report.pass = false;
        continue;
      }
      if (!have_reference) {
        report.reference = *cells;
        have_reference = true;
      } else if (*cells != report.reference) {
        report.pass = false;
      }
    }
  }
  return report;
}

}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_PROPERTIES_H_
