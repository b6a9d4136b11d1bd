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

// Acceptance suite. One line per criterion; exit status 1 if any fails.
//
//   acceptance            run everything
//   acceptance 3 7        run criteria 3 and 7 only

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "boost/math/special_functions/log1p.hpp"
#include "boost/multiprecision/cpp_dec_float.hpp"
#include "dpcore/accountant.h"
#include "dpcore/audit/blackbox.h"
#include "dpcore/audit/gof.h"
#include "dpcore/audit/properties.h"
#include "dpcore/audit/targets.h"
#include "dpcore/data_access.h"
#include "dpcore/matrix.h"
#include "dpcore/mechanisms.h"
#include "dpcore/noise.h"
#include "dpcore/plan.h"
#include "dpcore/relational.h"
#include "dpcore/service/clock.h"
#include "dpcore/service/padding.h"
#include "dpcore/service/session.h"
#include "dpcore/testing/scripted_source.h"
#include "fmt/format.h"

namespace dpcore {
namespace acceptance {
namespace {

using audit::TablePair;
using audit::TransformOutput;
using dpcore::testing::ScriptedSourceFactory;

using Digits100 =
    boost::multiprecision::number<boost::multiprecision::cpp_dec_float<100>>;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void Note(std::string s) { notes.push_back(std::move(s)); }
};

template <typename T>
T Must(absl::StatusOr<T> v, const char* what) {
  if (!v.ok()) {
    throw std::runtime_error(fmt::format("{}: {}", what,
                                         std::string(v.status().message())));
  }
  return *std::move(v);
}

void Must(const absl::Status& s, const char* what) {
  if (!s.ok()) {
    throw std::runtime_error(
        fmt::format("{}: {}", what, std::string(s.message())));
  }
}

Value I(std::int64_t v) { return Value(v); }

double LaplaceCdf(double b, double x) {
  return x < 0 ? 0.5 * std::exp(x / b) : 1 - 0.5 * std::exp(-x / b);
}

// Four-row domain: g in {a, b} x v in [0, 1].
Schema SmallSchema() {
  return Must(Schema::Create({Must(ColumnMeta::Categorical("g", {"a", "b"}),
                                   "g"),
                              Must(ColumnMeta::Integer("v", 0, 1), "v")}),
              "small schema");
}

std::vector<Row> SmallDomain() {
  return {{I(0), I(0)}, {I(0), I(1)}, {I(1), I(0)}, {I(1), I(1)}};
}

// ------------------------------------------------------------------ 1

Outcome SamplerGoodnessOfFit() {
  Outcome out;
  constexpr double kCritical = 3.8781250216053948842;
  constexpr int kRuns = 100;
  constexpr std::size_t kDraws = 1'000'000;
  auto battery = [&](double scale, std::uint64_t seed) {
    RandomSource rng = ScriptedSourceFactory::FromSeed(seed);
    std::vector<double> xs(kDraws);
    int accepted = 0;
    double worst = 0;
    for (int run = 0; run < kRuns; ++run) {
      for (double& x : xs) x = Must(SampleLaplace(rng, scale), "laplace");
      double a2 = audit::AndersonDarlingStatistic(
          xs, [](double x) { return LaplaceCdf(1.0, x); });
      accepted += a2 <= kCritical;
      worst = std::max(worst, a2);
    }
    return std::make_pair(accepted, worst);
  };
  auto t0 = std::chrono::steady_clock::now();
  auto [good, good_worst] = battery(1.0, 1001);
  double good_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  t0 = std::chrono::steady_clock::now();
  auto [bad, bad_min] = battery(1.1, 1002);
  double bad_s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  out.Note(fmt::format("Laplace(0,1): {}/100 accepted (max A2 {:.3f}), {:.1f}s",
                       good, good_worst, good_s));
  out.Note(fmt::format("Laplace(0,1.1): {}/100 rejected, {:.1f}s", kRuns - bad,
                       bad_s));
  out.Require(good >= 97, "correct sampler accepted in >= 97 of 100 runs");
  out.Require(kRuns - bad >= 99, "misscaled sampler rejected in >= 99 of 100");
  out.Require(good_s <= 120 && bad_s <= 120, "each battery within 2 minutes");
  return out;
}

// ------------------------------------------------------------------ 2

Outcome BlackBoxAuditPower() {
  Outcome out;
  std::vector<audit::NeighborPair> pairs = Must(
      audit::DefaultNeighborSuite(audit::StandardSuiteSchema()), "suite");
  audit::BatteryOptions options;
  options.n_search = 50'000;
  options.n_test = 100'000;
  options.repetitions = 50;
  auto t0 = std::chrono::steady_clock::now();

  audit::MechanismUnderTest bug =
      Must(audit::MakeTarget("bug_half_scale_laplace"), "bug target");
  RandomSource root_bug = ScriptedSourceFactory::FromSeed(2001);
  audit::BatteryResult flagged =
      audit::RunBattery(bug, pairs, 1.0, options, root_bug);
  out.Require(flagged.violation, "half-scale Laplace flagged");
  out.Require(flagged.counterexample.has_value(), "counterexample recorded");
  if (flagged.counterexample) {
    out.Note(fmt::format("bug: counterexample on {} at eps'={} (mean p {:.3g}, "
                         "ratio {:.3f})",
                         flagged.counterexample->pair,
                         flagged.counterexample->eps_test,
                         flagged.counterexample->mean_p,
                         flagged.counterexample->estimated_ratio));
  }

  audit::MechanismUnderTest good =
      Must(audit::MakeTarget("laplace_count"), "target");
  RandomSource root_good = ScriptedSourceFactory::FromSeed(2002);
  audit::BatteryResult clean =
      audit::RunBattery(good, pairs, 1.0, options, root_good);
  std::string means;
  for (const audit::EpsilonVerdict& v : clean.per_eps) {
    means += fmt::format(" {}:{:.3f}", v.eps_test, v.verdict.mean);
    if (v.counts_toward_verdict) {
      out.Require(v.verdict.mean > 0.3,
                  fmt::format("correct mechanism mean p > 0.3 at eps'={}",
                              v.eps_test));
      out.Require(v.pvalues.size() == 50, "50 repetitions");
    }
  }
  out.Require(!clean.violation, "correct mechanism passes");
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  out.Note("correct: mean p by eps'" + means);
  out.Note(fmt::format("{:.1f}s for both batteries", secs));
  out.Require(secs <= 600, "within 10 minutes");
  return out;
}

// ------------------------------------------------------------------ 3

absl::StatusOr<TransformOutput> UnionFive(const Table& t) {
  Table out = t;
  for (int i = 0; i < 5; ++i) {
    DPCORE_ASSIGN_OR_RETURN(out, Union(out, out));
  }
  return out;
}

Outcome StabilityLedger() {
  Outcome out;
  std::vector<TablePair> pairs =
      Must(audit::EnumerateSmallPairs(SmallSchema(), SmallDomain(), 6, 3),
           "pairs");
  out.Note(fmt::format("{} pairs (<= 6 rows, distance <= 3)", pairs.size()));

  using Chain = audit::TransformChain;
  auto table = [](auto f) -> Chain {
    return [f](const Table& t) -> absl::StatusOr<TransformOutput> {
      DPCORE_ASSIGN_OR_RETURN(Table r, f(t));
      return r;
    };
  };
  auto grouped = [](std::vector<std::string> keys) -> Chain {
    return [keys](const Table& t) -> absl::StatusOr<TransformOutput> {
      DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, keys));
      return g;
    };
  };
  std::vector<std::pair<std::string, Chain>> chains = {
      {"identity", table([](const Table& t) -> absl::StatusOr<Table> {
         return t;
       })},
      {"select g=a", table([](const Table& t) {
         return SelectWhere(t, {{"g", CompareOp::kEqual, std::string("a")}});
       })},
      {"select v<1 and g!=b", table([](const Table& t) {
         return SelectWhere(t, {{"v", CompareOp::kLess, 1.0},
                                {"g", CompareOp::kNotEqual, std::string("b")}});
       })},
      {"project g", table([](const Table& t) { return Project(t, {"g"}); })},
      {"distinct g", table([](const Table& t) { return Distinct(t, {"g"}); })},
      {"distinct g,v",
       table([](const Table& t) { return Distinct(t, {"g", "v"}); })},
      {"union self", table([](const Table& t) { return Union(t, t); })},
      {"map v clamp",
       table([](const Table& t) { return MapColumn(t, "v", Clamp{0, 0.5}); })},
      {"map v affine", table([](const Table& t) {
         return MapColumn(t, "v", Affine{-3, 2});
       })},
      {"map v square",
       table([](const Table& t) { return MapColumn(t, "v", Square{}); })},
      {"group_by g", grouped({"g"})},
      {"group_by g,v", grouped({"g", "v"})},
      {"select then group_by",
       [](const Table& t) -> absl::StatusOr<TransformOutput> {
         DPCORE_ASSIGN_OR_RETURN(
             Table s, SelectWhere(t, {{"v", CompareOp::kEqual, 1.0}}));
         DPCORE_ASSIGN_OR_RETURN(Table u, Union(s, s));
         DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(u, {"g"}));
         return g;
       }},
      {"union5", UnionFive},
  };
  for (const auto& [name, chain] : chains) {
    audit::StabilityReport r = Must(audit::StabilityCheck(name, chain, pairs),
                                    "stability check");
    out.Require(r.pass && !r.metadata_dependent,
                fmt::format("{} within its claimed stability {} (max ratio {})",
                            name, r.claimed_factor, r.max_ratio));
  }
  RandomSource rng = ScriptedSourceFactory::FromSeed(3001);
  audit::StabilityReport b =
      Must(audit::CoupledBernoulliCheck(pairs, 0.5, rng, 2), "bernoulli");
  out.Require(b.pass, "bernoulli sample is 1-stable under coupling");

  audit::StabilityReport u =
      Must(audit::StabilityCheck("union5", UnionFive, pairs), "union5");
  out.Require(u.claimed_factor == 32, "union5 reports factor exactly 32");
  out.Require(u.max_ratio == 32.0, "union5 ratio reaches 32");
  // A one-record witness whose outputs differ in exactly 32 rows.
  std::optional<TablePair> witness;
  for (const TablePair& p : pairs) {
    if (p.distance != 1) continue;
    TransformOutput a = Must(UnionFive(p.a), "union5");
    TransformOutput c = Must(UnionFive(p.b), "union5");
    if (Must(audit::OutputDistance(a, c), "distance") == 32) {
      witness = p;
      break;
    }
  }
  out.Require(witness.has_value(), "witness with symmetric difference 32");
  if (witness) {
    out.Note(fmt::format("witness: {} vs {} rows", witness->a.rows().size(),
                         witness->b.rows().size()));
  }

  // The salary example: scale 300000 * 32 / eps.
  Schema salary = Must(Schema::Create({Must(
                           ColumnMeta::Real("Salary", 0, 300000), "col")}),
                       "schema");
  Table emp = Must(MakeTable(salary, {{Value(1000.0)}}), "table");
  Table temp5 = std::get<Table>(Must(UnionFive(emp), "temp5"));
  StatVector sum = Must(Aggregate(temp5, Sum{"Salary"}), "sum");
  auto acc = Must(Accountant::Create(
                      {{"s", BudgetKind::kPureEpsilon, 1e9, ""}}),
                  "accountant");
  MechanismOptions mo;
  mo.epsilon_floor = 0;
  PrivacyContext ctx{acc.get(), "s", &rng, mo};
  const double eps = 0.5;
  MechanismResult r = Must(LaplaceMechanism(sum, eps, ctx), "laplace");
  out.Require(r.noise_scale() == 300000.0 * 32 / eps,
              fmt::format("Laplace scale 300000*32/eps (got {})",
                          r.noise_scale()));
  return out;
}

// ------------------------------------------------------------------ 4

Outcome SensitivityPipeline() {
  Outcome out;
  const char* plan_text =
      "map Salary clamp 0 300000\n"
      "sum Salary\n"
      "scale 2\n";
  Schema salary = Must(
      Schema::Create({Must(ColumnMeta::Categorical("Dept", {"eng", "ops"}),
                           "dept"),
                      Must(ColumnMeta::Real("Salary", 0, 1e6), "salary")}),
      "schema");
  Table emp = Must(MakeTable(salary, {{I(0), Value(250000.0)},
                                      {I(1), Value(900000.0)}}),
                   "table");
  TransformPlan plan = Must(ParsePlan(plan_text), "plan");
  StatVector v = Must(ExecutePlan(emp, plan, ExecutionContext{}), "execute");
  out.Require(v.l1_sensitivity() == 600000,
              fmt::format("2*SUM(Salary) sensitivity 600000 (got {})",
                          v.l1_sensitivity()));
  out.Require(v.values()[0] == 2 * (250000.0 + 300000.0), "clamped value");

  // Exhaustive small instances over several pipelines.
  Schema s = Must(
      Schema::Create({Must(ColumnMeta::Categorical("Dept", {"eng", "ops"}),
                           "dept"),
                      Must(ColumnMeta::Real("Salary", 0, 300000), "salary")}),
      "schema");
  std::vector<Row> domain;
  for (std::int64_t d : {0, 1}) {
    for (double x : {0.0, 120000.0, 300000.0}) domain.push_back({I(d), x});
  }
  std::vector<TablePair> pairs =
      Must(audit::EnumerateSmallPairs(s, domain, 4, 3), "pairs");
  out.Note(fmt::format("{} pairs (<= 4 rows over 6 values, distance <= 3)",
                       pairs.size()));
  using P = audit::AggregationPipeline;
  Matrix diff = Must(Matrix::FromRows({{1, -1}, {0.5, 0.5}}), "matrix");
  std::vector<std::pair<std::string, P>> pipelines = {
      {"count", [](const Table& t) { return Aggregate(t, Count{}); }},
      {"sum", [](const Table& t) { return Aggregate(t, Sum{"Salary"}); }},
      {"2*sum",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(t, Sum{"Salary"}));
         return Scale(v, 2);
       }},
      {"grouped count",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"Dept"}));
         return Aggregate(g, Count{});
       }},
      {"grouped sum",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"Dept"}));
         return Aggregate(g, Sum{"Salary"});
       }},
      {"linear map of grouped counts",
       [diff](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"Dept"}));
         DPCORE_ASSIGN_OR_RETURN(StatVector c, Aggregate(g, Count{}));
         return LinearMap(c, diff);
       }},
      {"affine map then sum",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(Table m,
                                 MapColumn(t, "Salary", Affine{-0.5, 1000}));
         return Aggregate(m, Sum{"Salary"});
       }},
      {"filter, union, sum",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(
             Table f,
             SelectWhere(t, {{"Dept", CompareOp::kEqual, std::string("ops")}}));
         DPCORE_ASSIGN_OR_RETURN(Table u, Union(f, f));
         return Aggregate(u, Sum{"Salary"});
       }},
      {"clamp then sum",
       [](const Table& t) -> absl::StatusOr<StatVector> {
         DPCORE_ASSIGN_OR_RETURN(Table m,
                                 MapColumn(t, "Salary", Clamp{1e5, 2e5}));
         return Aggregate(m, Sum{"Salary"});
       }},
  };
  for (const auto& [name, pipeline] : pipelines) {
    audit::SensitivityReport r =
        Must(audit::SensitivityCheck(name, pipeline, pairs), "sensitivity");
    out.Require(r.pass && !r.metadata_dependent,
                fmt::format("{}: effect {} <= reported {}", name,
                            r.max_effect, r.claimed));
  }
  return out;
}

// ------------------------------------------------------------------ 5

// Independent oracle: worst L1 change of (Q d) / alpha over the unit
// histogram perturbations d = +-e_j.
double BruteForceEpsilon(const Matrix& q, const std::vector<double>& alphas) {
  double best = 0;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> d(q.cols(), 0.0);
      d[j] = sign;
      std::vector<double> moved = Must(q.Apply(d), "apply");
      double loss = 0;
      for (std::size_t i = 0; i < moved.size(); ++i) {
        loss += std::fabs(moved[i]) / alphas[i];
      }
      best = std::max(best, loss);
    }
  }
  return best;
}

Outcome AccountantCriteria() {
  Outcome out;
  RandomSource rng = ScriptedSourceFactory::FromSeed(5001);
  int exact = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::size_t rows = 1 + rng.NextU64() % 8;
    std::size_t cols = 1 + rng.NextU64() % 8;
    std::vector<std::vector<double>> entries(rows, std::vector<double>(cols));
    for (auto& r : entries) {
      for (double& x : r) {
        // Mix of small integers and arbitrary reals.
        x = (rng.NextU64() & 1)
                ? static_cast<double>(rng.NextU64() % 11) - 5
                : 10 * (UniformOpenClosed(rng) - 0.5);
      }
    }
    std::vector<double> alphas(rows);
    for (double& a : alphas) a = 0.05 + 5 * UniformOpenClosed(rng);
    Matrix q = Must(Matrix::FromRows(entries), "matrix");
    double ell = Must(LinearQueryEpsilon(q, alphas), "ell");
    exact += ell == BruteForceEpsilon(q, alphas);
  }
  out.Note(fmt::format("{}/1000 instances bit-exact against the oracle",
                       exact));
  out.Require(exact == 1000, "linear_query_epsilon matches on every instance");

  const double budget = 50;
  const int contexts = 16, per_context = 10'000;
  auto acc = Must(Accountant::Create(
                      {{"shared", BudgetKind::kPureEpsilon, budget, ""}}),
                  "accountant");
  std::vector<std::thread> pool;
  std::atomic<int> granted{0};
  for (int t = 0; t < contexts; ++t) {
    pool.emplace_back([&, t] {
      RandomSource local = ScriptedSourceFactory::FromSeed(5100 + t);
      for (int i = 0; i < per_context; ++i) {
        double amount = 1e-3 * UniformOpenClosed(local);
        if (acc->Charge("shared", amount, "stress", BudgetKind::kPureEpsilon)
                .ok()) {
          ++granted;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  double spent = Must(acc->Spent("shared"), "spent");
  std::vector<PrivacyCharge> ledger = acc->Ledger();
  out.Note(fmt::format("{} of {} charges granted, spent {:.17g}",
                       granted.load(), contexts * per_context, spent));
  out.Require(spent <= budget, "never overspends");
  out.Require(acc->Denials().size() > 0, "stress reached the budget");
  out.Require(ledger.size() == static_cast<std::size_t>(granted.load()),
              "one ledger entry per grant");
  out.Require(ReplaySpent(ledger)["shared"] == spent, "replay bit-exact");
  std::string text;
  for (const PrivacyCharge& c : ledger) text += FormatCharge(c) + "\n";
  auto restored = Must(Accountant::Create(
                           {{"shared", BudgetKind::kPureEpsilon, budget, ""}}),
                       "accountant");
  Must(restored->Restore(Must(ParseLedger(text), "parse")), "restore");
  out.Require(Must(restored->Spent("shared"), "spent") == spent,
              "serialized ledger replays bit-exact");
  return out;
}

// ------------------------------------------------------------------ 6

Outcome Numerics() {
  Outcome out;
  std::vector<double> grid;
  for (int k = -700; k <= 700; k += 35) grid.push_back(k);
  // Kept off the grid: results that are subnormal (e.g. (0, -745)) or
  // within an ulp of zero (x = y = -ln 2), where no double has small
  // relative error.
  for (double x : {-1e-3, -1e-12, 0.0, 1e-12, 0.5, 1.0, 3.25, 709.5}) {
    grid.push_back(x);
  }
  double worst = 0;
  std::string worst_at;
  for (double x : grid) {
    for (double y : grid) {
      double got = LogAdd(LogWeight{x}, LogWeight{y}).value;
      // max + log1p(e^(min - max)), all in 100 digits.
      Digits100 hi = std::max(x, y), lo = std::min(x, y);
      Digits100 exact =
          hi + boost::math::log1p(boost::multiprecision::exp(lo - hi));
      Digits100 rel =
          boost::multiprecision::abs((Digits100(got) - exact) / exact);
      double r = static_cast<double>(rel);
      if (r > worst) {
        worst = r;
        worst_at = fmt::format("({}, {})", x, y);
      }
    }
  }
  out.Note(fmt::format("{} pairs, worst relative error {:.3g} at {}",
                       grid.size() * grid.size(), worst, worst_at));
  out.Require(worst < 1e-12, "log_add relative error < 1e-12");

  audit::ExpMechRatioReport holes = audit::ExpMechHoleCheck(
      [](std::span<const double> q, double dq, double eps) {
        return ExponentialMechanismLogProbabilities(q, dq, eps);
      },
      71);
  out.Note(fmt::format("hole check at {} eps values in [1e-6, 10]",
                       holes.hole_checks));
  out.Require(holes.pass && !holes.hole_found,
              "no zero/nonzero hole: " + holes.failure);
  return out;
}

// ------------------------------------------------------------------ 7

Outcome InterpretiveConstants() {
  Outcome out;
  auto acc = Must(Accountant::Create(
                      {{"s", BudgetKind::kPureEpsilon, 2.0, ""}}),
                  "accountant");
  BudgetStatus s0 = Must(acc->Status("s"), "status");
  out.Require(s0.power_bound_spent == 0.05, "spent 0 -> alpha");
  Must(acc->Charge("s", 0.5, "m", BudgetKind::kPureEpsilon).status(), "charge");
  BudgetStatus s1 = Must(acc->Status("s"), "status");
  Must(acc->Charge("s", 0.5, "m", BudgetKind::kPureEpsilon).status(), "charge");
  BudgetStatus s2 = Must(acc->Status("s"), "status");
  out.Note(fmt::format("spent 0.5 -> {:.6f}, spent 1.0 -> {:.6f}",
                       s1.power_bound_spent, s2.power_bound_spent));
  out.Require(std::fabs(s1.power_bound_spent - 0.0824) < 5e-5,
              "e^0.5 * 0.05 ~ 0.0824");
  out.Require(std::fabs(s2.power_bound_spent - 0.1359) < 5e-5,
              "e^1 * 0.05 ~ 0.1359");
  out.Require(s1.power_bound_spent > 0.08, "just above 8%");
  out.Require(std::round(100 * s2.power_bound_spent) == 14 ||
                  std::floor(100 * s2.power_bound_spent) == 13,
              "about 13%");
  return out;
}

// ------------------------------------------------------------------ 8

Outcome HistogramWhiteBox() {
  Outcome out;
  auto acc = Must(Accountant::Create(
                      {{"s", BudgetKind::kPureEpsilon, 1e12, ""}},
                      Accountant::Options{false, nullptr}),
                  "accountant");
  RandomSource rng = ScriptedSourceFactory::FromSeed(8001);
  PrivacyContext ctx{acc.get(), "s", &rng, {}};
  Schema schema = audit::StandardSuiteSchema();
  Table db = Must(MakeTable(schema, {{I(100), I(1)}, {I(50), I(0)},
                                     {I(0), I(0)}}),
                  "table");
  StatVector cells =
      Must(Aggregate(Must(GroupBy(db, {"r3"}), "group"), Count{}), "count");
  const double eps = 0.5;
  const double want = 2 * std::pow(cells.l1_sensitivity() / eps, 2);
  const int n = 1'000'000;
  std::vector<double> sum(cells.size(), 0), sum2(cells.size(), 0);
  std::vector<std::string> labels = cells.labels();
  bool same_cells = true;
  for (int i = 0; i < n; ++i) {
    MechanismResult r = Must(NoisyHistogram(cells, eps, ctx), "histogram");
    same_cells &= r.labels() == labels;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double d = r.values()[c] - cells.values()[c];
      sum[c] += d;
      sum2[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double var = sum2[c] / n - std::pow(sum[c] / n, 2);
    out.Note(fmt::format("cell {}: variance {:.4f}, want {:.4f} ({:+.2f}%)",
                         labels[c], var, want, 100 * (var / want - 1)));
    out.Require(std::fabs(var / want - 1) <= 0.05, "variance within 5%");
  }
  out.Require(same_cells, "cells identical across 10^6 runs");

  std::vector<audit::NeighborPair> pairs =
      Must(audit::DefaultNeighborSuite(schema), "suite");
  std::vector<Table> tables;
  for (const audit::NeighborPair& p : pairs) {
    tables.push_back(p.d1);
    tables.push_back(p.d2);
  }
  audit::CellSetReport cs = audit::CellSetCheck(
      [&](const Table& t) -> absl::StatusOr<std::vector<std::string>> {
        DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"r3"}));
        DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(g, Count{}));
        DPCORE_ASSIGN_OR_RETURN(MechanismResult r, NoisyHistogram(v, eps, ctx));
        return r.labels();
      },
      tables, 100);
  out.Require(cs.pass, "cell set identical across neighboring inputs");
  return out;
}

// ------------------------------------------------------------------ 9

Schema EmployeeSchema() {
  return Must(ParseSchema("Name categorical alice,bob,carol\n"
                          "Age integer 0 115\n"
                          "Dept categorical sales,eng,ops\n"
                          "Salary real 0 300000\n"),
              "schema");
}

std::vector<Row> EmployeeRows(std::size_t n) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back({I(static_cast<std::int64_t>(i % 2)),
                    I(20 + static_cast<std::int64_t>(i % 40)),
                    I(static_cast<std::int64_t>(i % 3)),
                    Value(1000.0 * static_cast<double>(i % 250 + 1))});
  }
  return rows;
}

// The record the slow predicate singles out.
Row TargetRow() { return {I(2), I(99), I(1), Value(5.0e4)}; }

std::string TimingTrace(const Table& data, double n_hat, std::uint64_t seed) {
  using service::QueryRequest;
  auto acc = Must(Accountant::Create(
                      {{"s", BudgetKind::kPureEpsilon, 1.0, ""}}),
                  "accountant");
  service::SessionOptions options;
  options.xi_ns = 2000;
  options.overhead_ns = 200'000;
  options.size_granularity = 256;
  auto session = Must(
      service::QuerySession::Resume(
          "s", service::internal::HandleAccess::Make("d", data), *acc, "s",
          n_hat, options),
      "session");
  // 50 pads of work on the target, 300 ns elsewhere.
  service::CostModelEvaluator cost([&](const Row& row) -> std::int64_t {
    return NumericValue(row[1]) == 99 ? 50 * options.xi_ns : 300;
  });
  session->set_bounded_evaluator(&cost);
  service::ScriptedClock clock(1'000'000'000);
  RandomSource rng = ScriptedSourceFactory::FromSeed(seed);
  std::vector<QueryRequest> stream = {
      {"filter Age > 98\ncount", "laplace", 0.05, false},
      {"filter Age > 98 and Dept = eng\ngroup_by Dept\ncount",
       "noisy_histogram", 0.05, false},
      {"count", "laplace", 0.05, false},
      {"filter Age < 30\nunion self\nfilter Dept != ops\nsum Salary",
       "laplace", 0.05, false},
      {"filter Age > 98\ncount", "laplace", 10.0, false},  // denied
      {"filter Age >\ncount", "laplace", 0.05, false},     // malformed
      {"filter Name matches c.*\ncount", "laplace", 0.05, false},  // rejected
      {"filter Age > 98\ngroup_by Dept\ncount", "report_noisy_max", 0.05,
       false},
      {"filter Age > 98\ncount", "laplace", 0.05, true},
  };
  std::string trace;
  for (const QueryRequest& q : stream) {
    service::QueryResponse r = session->Run(q, clock, rng);
    trace += fmt::format("{}\n", r.elapsed_ns);
  }
  trace += fmt::format("end={} overruns={}\n", clock.NowNs(),
                       session->overruns());
  return trace;
}

Outcome TimingTraces() {
  Outcome out;
  Schema schema = EmployeeSchema();
  int compared = 0, identical = 0;
  for (std::size_t n : {0, 1, 37, 255, 256, 1000}) {
    std::vector<Row> base = EmployeeRows(n);
    std::vector<Row> plus = base;
    plus.push_back(TargetRow());
    std::vector<std::pair<std::vector<Row>, std::vector<Row>>> neighbors = {
        {base, plus}};
    if (n > 0) {
      std::vector<Row> minus(base.begin(), base.end() - 1);
      neighbors.push_back({base, minus});
      std::vector<Row> swapped_in = minus;
      swapped_in.push_back(TargetRow());
      neighbors.push_back({minus, swapped_in});
    }
    for (const auto& [a, b] : neighbors) {
      Table ta = Must(MakeTable(schema, a), "table");
      Table tb = Must(MakeTable(schema, b), "table");
      for (double offset : {-3.4, 0.5, 9.9}) {
        double n_hat = static_cast<double>(n) + offset;
        std::string x = TimingTrace(ta, n_hat, 9000 + n);
        std::string y = TimingTrace(tb, n_hat, 9000 + n);
        ++compared;
        identical += x == y;
      }
    }
  }
  out.Note(fmt::format("{}/{} neighbor traces byte-identical", identical,
                       compared));
  out.Require(identical == compared, "every neighbor trace identical");

  // The slow predicate really is slow: without padding it would show.
  Table with = Must(MakeTable(schema, [] {
                      std::vector<Row> r = EmployeeRows(10);
                      r.push_back(TargetRow());
                      return r;
                    }()),
                    "table");
  service::ScriptedClock clock;
  service::CostModelEvaluator cost([](const Row& row) -> std::int64_t {
    return NumericValue(row[1]) == 99 ? 100'000 : 300;
  });
  service::PaddedEvaluator padded(clock, 2000, cost);
  Must(SelectWhere(with, {{"Age", CompareOp::kGreater, 98.0}}, padded)
           .status(),
       "select");
  out.Require(clock.NowNs() == 11 * 2000, "each record costs exactly xi");
  out.Require(padded.timeouts() == 1, "slow record timed out and defaulted");
  return out;
}

// ----------------------------------------------------------------- 10

Outcome EmptyInputTotality() {
  Outcome out;
  Schema schema = audit::StandardSuiteSchema();
  Table empty = Must(MakeTable(schema, {}), "empty");
  Table one = Must(MakeTable(schema, {{I(0), I(0)}}), "one");
  auto acc = Must(Accountant::Create(
                      {{"p", BudgetKind::kPureEpsilon, 1e9, ""},
                       {"z", BudgetKind::kZcdpRho, 1e9, ""}},
                      Accountant::Options{false, nullptr}),
                  "accountant");

  struct Meta {
    std::vector<std::string> labels;
    std::size_t size = 0;
    double sensitivity = 0;
    double noise_scale = 0;
    double charged = 0;
    bool operator==(const Meta&) const = default;
  };
  using Run = std::function<absl::StatusOr<Meta>(const Table&, RandomSource&)>;
  auto stat = [](const StatVector& v) {
    return Meta{v.labels(), v.size(), v.l1_sensitivity(), 0, 0};
  };
  auto released = [](const MechanismResult& r) {
    return Meta{r.labels(), r.values().size(), 0, r.noise_scale(),
                r.receipt().amount};
  };
  auto selected = [](const SelectionResult& r, std::size_t candidates) {
    return Meta{{}, candidates, 0, 0, r.receipt().amount};
  };
  auto counts_by_r3 = [](const Table& t) -> absl::StatusOr<StatVector> {
    DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"r3"}));
    return Aggregate(g, Count{});
  };
  auto pure = [&](RandomSource& rng, bool discretize = false) {
    MechanismOptions mo;
    mo.discretize = discretize;
    return PrivacyContext{acc.get(), "p", &rng, mo};
  };
  std::vector<std::pair<std::string, Run>> runs = {
      {"count", [&](const Table& t, RandomSource&) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(t, Count{}));
         return stat(v);
       }},
      {"sum", [&](const Table& t, RandomSource&) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(t, Sum{"r1"}));
         return stat(v);
       }},
      {"grouped count",
       [&](const Table& t, RandomSource&) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         return stat(v);
       }},
      {"grouped sum",
       [&](const Table& t, RandomSource&) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(GroupedTable g, GroupBy(t, {"r1", "r3"}));
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(g, Sum{"r1"}));
         return stat(v);
       }},
      {"linear map",
       [&](const Table& t, RandomSource&) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector c, counts_by_r3(t));
         DPCORE_ASSIGN_OR_RETURN(Matrix m, Matrix::FromRows({{1, 1}, {1, -1}}));
         DPCORE_ASSIGN_OR_RETURN(StatVector v, LinearMap(c, m));
         return stat(v);
       }},
      {"plan", [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(
             TransformPlan p,
             ParsePlan("filter r1 < 50\nbernoulli 0.5\nunion self\n"
                       "map r1 clamp 10 20\ndistinct r1 r3\n"
                       "group_by r3\nsum r1\nscale 3\n"));
         DPCORE_ASSIGN_OR_RETURN(StatVector v,
                                 ExecutePlan(t, p, ExecutionContext{&rng}));
         return stat(v);
       }},
      {"laplace", [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(t, Sum{"r1"}));
         PrivacyContext ctx = pure(rng);
         DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                 LaplaceMechanism(v, 0.7, ctx));
         return released(r);
       }},
      {"snapped laplace",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, Aggregate(t, Count{}));
         PrivacyContext ctx = pure(rng, true);
         DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                 LaplaceMechanism(v, 0.7, ctx));
         return released(r);
       }},
      {"gaussian",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         PrivacyContext ctx{acc.get(), "z", &rng, {}};
         DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                 GaussianMechanism(v, 0.1, ctx));
         return released(r);
       }},
      {"noisy histogram",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         PrivacyContext ctx = pure(rng);
         DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                 NoisyHistogram(v, 0.7, ctx));
         return released(r);
       }},
      {"report noisy max",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         PrivacyContext ctx = pure(rng);
         DPCORE_ASSIGN_OR_RETURN(SelectionResult r,
                                 ReportNoisyMax(v, 0.7, ctx));
         return selected(r, v.size());
       }},
      {"exponential mechanism",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         PrivacyContext ctx = pure(rng);
         DPCORE_ASSIGN_OR_RETURN(
             SelectionResult r,
             ExponentialMechanism(v.values(), v.l1_sensitivity(), 0.7, ctx,
                                  v.labels()));
         return selected(r, v.size());
       }},
      {"soft threshold",
       [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         DPCORE_ASSIGN_OR_RETURN(StatVector v, counts_by_r3(t));
         PrivacyContext ctx = pure(rng);
         DPCORE_ASSIGN_OR_RETURN(
             KeySetResult r,
             SoftThresholdFilter(v, kDefaultSoftThreshold,
                                 kDefaultSoftThresholdScale, ctx));
         return Meta{{}, v.size(), 0, 0, r.receipt().amount};
       }},
      {"session", [&](const Table& t, RandomSource& rng) -> absl::StatusOr<Meta> {
         service::SessionOptions o;
         DPCORE_ASSIGN_OR_RETURN(
             auto s, service::QuerySession::Open(
                         "s", service::internal::HandleAccess::Make("d", t),
                         *acc, "p", o, rng));
         service::ScriptedClock clock;
         service::QueryResponse r =
             s->Run({"group_by r3\ncount", "noisy_histogram", 0.5, false},
                    clock, rng);
         if (!r.ok) return absl::InternalError(r.code);
         return Meta{r.labels, r.values.size(), 0, 0, r.receipt->amount};
       }},
  };
  for (const auto& [name, run] : runs) {
    RandomSource r1 = ScriptedSourceFactory::FromSeed(10001);
    RandomSource r2 = ScriptedSourceFactory::FromSeed(10001);
    absl::StatusOr<Meta> a = run(empty, r1);
    absl::StatusOr<Meta> b = run(one, r2);
    out.Require(a.ok(), fmt::format("{} runs on the empty table{}", name,
                                    a.ok() ? "" : ": " + std::string(
                                                          a.status().message())));
    out.Require(b.ok(), name + " runs on its neighbor");
    if (a.ok() && b.ok()) {
      out.Require(*a == *b, name + " metadata independent of the data");
    }
  }
  out.Note(fmt::format("{} operations on the empty table", runs.size()));
  return out;
}

struct Criterion {
  int number;
  const char* title;
  Outcome (*run)();
};

}  // namespace
}  // namespace acceptance
}  // namespace dpcore

int main(int argc, char** argv) {
  using dpcore::acceptance::Criterion;
  using dpcore::acceptance::Outcome;
  namespace a = dpcore::acceptance;
  const std::vector<Criterion> criteria = {
      {1, "sampler goodness of fit", a::SamplerGoodnessOfFit},
      {2, "black-box audit power", a::BlackBoxAuditPower},
      {3, "stability ledger", a::StabilityLedger},
      {4, "sensitivity pipeline", a::SensitivityPipeline},
      {5, "accountant oracle and stress", a::AccountantCriteria},
      {6, "numerics", a::Numerics},
      {7, "interpretive constants", a::InterpretiveConstants},
      {8, "histogram white-box", a::HistogramWhiteBox},
      {9, "timing traces", a::TimingTraces},
      {10, "empty-input totality", a::EmptyInputTotality},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("error: ") + e.what());
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    for (const std::string& n : o.notes) std::printf("    %s\n", n.c_str());
    std::printf("[%s] criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL",
                c.number, c.title, secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
