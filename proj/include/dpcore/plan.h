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

// Line-oriented query plans.
//
//   # comment
//   filter Age < 25 and Dept == sales
//   project Age,Salary
//   distinct Dept
//   union self
//   bernoulli 0.1
//   map Salary clamp 0 300000     (also: affine A B, square)
//   group_by Dept
//   sum Salary                    (or: count)
//   scale 2
//   linear 1,1;0,1
//
// Transform lines come first, then exactly one aggregation line, then any
// number of scale/linear lines. group_by may appear once and must be the
// last transform. limit, order_by, skip and window lines are rejected.

#ifndef DPCORE_PLAN_H_
#define DPCORE_PLAN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/data_access.h"
#include "dpcore/internal/format.h"
#include "dpcore/matrix.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {

// Constants stay as text until the column kind is known.
struct PlanComparison {
  std::string column;
  CompareOp op = CompareOp::kEqual;
  std::string constant;
};

struct FilterStep {
  std::vector<PlanComparison> terms;
};
struct ProjectStep {
  std::vector<std::string> columns;
};
struct DistinctStep {
  std::vector<std::string> columns;
};
struct UnionSelfStep {};
struct BernoulliStep {
  double p = 1;
};
struct MapStep {
  std::string column;
  ColumnMap f;
};

using TransformStep = std::variant<FilterStep, ProjectStep, DistinctStep,
                                   UnionSelfStep, BernoulliStep, MapStep>;
using PostStep = std::variant<double, Matrix>;  // scale factor or matrix

struct TransformPlan {
  std::vector<TransformStep> steps;
  std::optional<std::vector<std::string>> group_by;
  Aggregation aggregation;
  std::vector<PostStep> post;

  // Row visits made by predicate evaluation per input record, assuming every
  // sampled row survives. At least 1.
  std::uint64_t PredicatePasses() const {
    std::uint64_t multiplier = 1;
    std::uint64_t passes = 0;
    for (const TransformStep& step : steps) {
      if (std::holds_alternative<UnionSelfStep>(step)) {
        multiplier = multiplier > (std::uint64_t{1} << 40) ? multiplier
                                                           : 2 * multiplier;
      } else if (std::holds_alternative<FilterStep>(step)) {
        passes += multiplier;
      }
    }
    return passes == 0 ? 1 : passes;
  }

  bool uses_randomness() const {
    for (const TransformStep& step : steps) {
      if (std::holds_alternative<BernoulliStep>(step)) return true;
    }
    return false;
  }
};

namespace internal {

inline absl::StatusOr<double> PlanNumber(std::string_view text,
                                         std::string_view what) {
  std::optional<double> v = ParseDouble(text);
  if (!v || !std::isfinite(*v)) {
    return absl::InvalidArgumentError(
        StrCat(what, " must be a finite number, got '", text, "'"));
  }
  return *v;
}

inline std::string Unquote(std::string_view text) {
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
      text.back() == text.front()) {
    return std::string(text.substr(1, text.size() - 2));
  }
  return std::string(text);
}

inline absl::StatusOr<FilterStep> ParseFilter(
    const std::vector<std::string_view>& words) {
  FilterStep step;
  std::size_t i = 1;
  while (true) {
    if (i + 3 > words.size()) {
      return absl::InvalidArgumentError(
          "filter expects: <column> <op> <constant> [and ...]");
    }
    std::string_view verb = words[i + 1];
    if (verb == "matches" || verb == "like" || verb == "~" || verb == "=~" ||
        verb == "regex") {
      return absl::InvalidArgumentError(
          "pattern and regular-expression predicates are not supported");
    }
    std::optional<CompareOp> op = ParseCompareOp(verb);
    if (!op) {
      return absl::InvalidArgumentError(
          StrCat("unknown comparison '", words[i + 1], "'"));
    }
    step.terms.push_back(PlanComparison{std::string(words[i]), *op,
                                        Unquote(words[i + 2])});
    i += 3;
    if (i == words.size()) break;
    if (words[i] != "and") {
      return absl::InvalidArgumentError(
          "filter terms are joined with 'and'");
    }
    ++i;
  }
  return step;
}

inline absl::StatusOr<MapStep> ParseMap(
    const std::vector<std::string_view>& words) {
  if (words.size() < 3) {
    return absl::InvalidArgumentError(
        "map expects: <column> clamp L U | affine A B | square");
  }
  MapStep step;
  step.column = std::string(words[1]);
  std::string_view fn = words[2];
  if (fn == "clamp" && words.size() == 5) {
    DPCORE_ASSIGN_OR_RETURN(double lo, PlanNumber(words[3], "clamp lower"));
    DPCORE_ASSIGN_OR_RETURN(double hi, PlanNumber(words[4], "clamp upper"));
    step.f = Clamp{lo, hi};
  } else if (fn == "affine" && words.size() == 5) {
    DPCORE_ASSIGN_OR_RETURN(double a, PlanNumber(words[3], "affine a"));
    DPCORE_ASSIGN_OR_RETURN(double b, PlanNumber(words[4], "affine b"));
    step.f = Affine{a, b};
  } else if (fn == "square" && words.size() == 3) {
    step.f = Square{};
  } else {
    return absl::InvalidArgumentError(StrCat(
        "map function '", fn,
        "' is not allowed; use clamp L U, affine A B or square"));
  }
  return step;
}

inline absl::StatusOr<Matrix> ParseMatrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (std::string_view row_text : Split(text, ";")) {
    std::vector<double> row;
    for (std::string_view cell : Split(row_text, ",")) {
      DPCORE_ASSIGN_OR_RETURN(double v, PlanNumber(cell, "matrix entry"));
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return Matrix::FromRows(rows);
}

inline absl::StatusOr<std::vector<std::string>> ColumnList(
    const std::vector<std::string_view>& words, std::string_view verb) {
  std::vector<std::string> cols;
  for (std::size_t i = 1; i < words.size(); ++i) {
    for (std::string& c : SplitList(words[i], ',')) cols.push_back(c);
  }
  if (cols.empty()) {
    return absl::InvalidArgumentError(StrCat(verb, " needs column names"));
  }
  return cols;
}

}  // namespace internal

inline absl::StatusOr<TransformPlan> ParsePlan(std::string_view text) {
  TransformPlan plan;
  bool have_aggregation = false;
  int line_number = 0;
  for (std::string_view raw : internal::Split(text, "\n")) {
    ++line_number;
    std::string_view line = raw.substr(0, raw.find('#'));
    std::vector<std::string_view> words =
        internal::Split(line, " \t\r", true);
    if (words.empty()) continue;
    auto fail = [&](const absl::Status& status) {
      return absl::Status(status.code(),
                          internal::StrCat("plan line ", line_number, ": ",
                                           std::string(status.message())));
    };
    auto bad = [&](std::string_view why) {
      return fail(absl::InvalidArgumentError(std::string(why)));
    };
    std::string_view verb = words[0];

    if (std::optional<RejectedOp> rejected = ParseRejectedOp(verb)) {
      return fail(RejectedOperation(*rejected));
    }
    if (verb == "count" || verb == "sum") {
      if (have_aggregation) return bad("only one aggregation line is allowed");
      if (verb == "count") {
        if (words.size() != 1) return bad("count takes no arguments");
        plan.aggregation = Count{};
      } else {
        if (words.size() != 2) return bad("sum expects one column");
        plan.aggregation = Sum{std::string(words[1])};
      }
      have_aggregation = true;
      continue;
    }
    if (verb == "scale" || verb == "linear") {
      if (!have_aggregation) {
        return bad(internal::StrCat(verb, " must follow the aggregation"));
      }
      if (words.size() != 2) {
        return bad(internal::StrCat(verb, " expects one argument"));
      }
      if (verb == "scale") {
        absl::StatusOr<double> c = internal::PlanNumber(words[1], "scale");
        if (!c.ok()) return fail(c.status());
        plan.post.emplace_back(*c);
      } else {
        absl::StatusOr<Matrix> m = internal::ParseMatrix(words[1]);
        if (!m.ok()) return fail(m.status());
        plan.post.emplace_back(*std::move(m));
      }
      continue;
    }
    if (have_aggregation) {
      return bad("transforms must precede the aggregation");
    }
    if (plan.group_by) return bad("only the aggregation may follow group_by");

    if (verb == "group_by") {
      absl::StatusOr<std::vector<std::string>> cols =
          internal::ColumnList(words, verb);
      if (!cols.ok()) return fail(cols.status());
      plan.group_by = *std::move(cols);
    } else if (verb == "filter") {
      absl::StatusOr<FilterStep> step = internal::ParseFilter(words);
      if (!step.ok()) return fail(step.status());
      plan.steps.emplace_back(*std::move(step));
    } else if (verb == "project" || verb == "distinct") {
      absl::StatusOr<std::vector<std::string>> cols =
          internal::ColumnList(words, verb);
      if (!cols.ok()) return fail(cols.status());
      if (verb == "project") {
        plan.steps.emplace_back(ProjectStep{*std::move(cols)});
      } else {
        plan.steps.emplace_back(DistinctStep{*std::move(cols)});
      }
    } else if (verb == "union") {
      if (words.size() != 2 || words[1] != "self") {
        return bad("union supports only 'union self'");
      }
      plan.steps.emplace_back(UnionSelfStep{});
    } else if (verb == "bernoulli") {
      if (words.size() != 2) return bad("bernoulli expects a probability");
      absl::StatusOr<double> p = internal::PlanNumber(words[1], "probability");
      if (!p.ok()) return fail(p.status());
      if (*p < 0 || *p > 1) return bad("probability must lie in [0, 1]");
      plan.steps.emplace_back(BernoulliStep{*p});
    } else if (verb == "map") {
      absl::StatusOr<MapStep> step = internal::ParseMap(words);
      if (!step.ok()) return fail(step.status());
      plan.steps.emplace_back(*std::move(step));
    } else {
      return bad(internal::StrCat("unknown step '", verb, "'"));
    }
  }
  if (!have_aggregation) {
    return absl::InvalidArgumentError(
        "plan has no aggregation line (count or sum <column>)");
  }
  return plan;
}

struct ExecutionContext {
  RandomSource* rng = nullptr;  // needed only by bernoulli steps
  PredicateEvaluator* evaluator = nullptr;  // defaults to direct evaluation
};

namespace internal {

inline absl::StatusOr<Predicate> BindFilter(const Schema& schema,
                                            const FilterStep& step) {
  std::vector<Comparison> terms;
  for (const PlanComparison& t : step.terms) {
    DPCORE_ASSIGN_OR_RETURN(std::size_t index, schema.Require(t.column));
    Comparison c{t.column, t.op, t.constant};
    if (schema.column(index).is_numeric()) {
      DPCORE_ASSIGN_OR_RETURN(
          double v, PlanNumber(t.constant, StrCat("constant for '", t.column,
                                                  "'")));
      c.constant = v;
    }
    terms.push_back(std::move(c));
  }
  return Predicate::Create(schema, std::move(terms));
}

inline absl::StatusOr<Table> ApplyStep(const Table& table,
                                       const TransformStep& step,
                                       const ExecutionContext& ctx) {
  if (const auto* s = std::get_if<FilterStep>(&step)) {
    DPCORE_ASSIGN_OR_RETURN(Predicate p, BindFilter(table.schema(), *s));
    PredicateEvaluator& evaluator =
        ctx.evaluator ? *ctx.evaluator : DirectEvaluator::Default();
    return SelectWhere(table, p, evaluator);
  }
  if (const auto* s = std::get_if<ProjectStep>(&step)) {
    return Project(table, s->columns);
  }
  if (const auto* s = std::get_if<DistinctStep>(&step)) {
    return Distinct(table, s->columns);
  }
  if (std::holds_alternative<UnionSelfStep>(step)) return Union(table, table);
  if (const auto* s = std::get_if<BernoulliStep>(&step)) {
    if (ctx.rng == nullptr) {
      return absl::FailedPreconditionError(
          "bernoulli step needs a random source");
    }
    return BernoulliSample(table, s->p, *ctx.rng);
  }
  const MapStep& m = std::get<MapStep>(step);
  return MapColumn(table, m.column, m.f);
}

}  // namespace internal

// Runs the plan and returns the exact aggregate.
inline absl::StatusOr<StatVector> ExecutePlan(const Table& input,
                                              const TransformPlan& plan,
                                              const ExecutionContext& ctx) {
  Table table = input;
  for (const TransformStep& step : plan.steps) {
    DPCORE_ASSIGN_OR_RETURN(table, internal::ApplyStep(table, step, ctx));
  }
  absl::StatusOr<StatVector> aggregate = [&]() -> absl::StatusOr<StatVector> {
    if (!plan.group_by) return Aggregate(table, plan.aggregation);
    DPCORE_ASSIGN_OR_RETURN(GroupedTable grouped,
                            GroupBy(table, *plan.group_by));
    return Aggregate(grouped, plan.aggregation);
  }();
  DPCORE_ASSIGN_OR_RETURN(StatVector out, std::move(aggregate));
  for (const PostStep& post : plan.post) {
    if (const double* c = std::get_if<double>(&post)) {
      DPCORE_ASSIGN_OR_RETURN(out, Scale(out, *c));
    } else {
      DPCORE_ASSIGN_OR_RETURN(out, LinearMap(out, std::get<Matrix>(post)));
    }
  }
  return out;
}

}  // namespace dpcore

#endif  // DPCORE_PLAN_H_
