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

// Exact transforms and aggregations over tables. Each operation propagates
// bounds, stability and sensitivity from metadata alone; none of the
// propagated values depends on row contents.

#ifndef DPCORE_DATA_ACCESS_H_
#define DPCORE_DATA_ACCESS_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"
#include "dpcore/matrix.h"
#include "dpcore/noise.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {

enum class CompareOp {
  kLess,
  kLessEqual,
  kGreater,
  kGreaterEqual,
  kEqual,
  kNotEqual
};

inline std::optional<CompareOp> ParseCompareOp(std::string_view text) {
  if (text == "<") return CompareOp::kLess;
  if (text == "<=") return CompareOp::kLessEqual;
  if (text == ">") return CompareOp::kGreater;
  if (text == ">=") return CompareOp::kGreaterEqual;
  if (text == "==" || text == "=") return CompareOp::kEqual;
  if (text == "!=") return CompareOp::kNotEqual;
  return std::nullopt;
}

// One `column op constant` term. Categorical columns compare against a
// category name, numeric columns against a number.
struct Comparison {
  std::string column;
  CompareOp op = CompareOp::kEqual;
  std::variant<double, std::string> constant;
};

// A conjunction of comparisons, resolved against a schema.
class Predicate {
 public:
  struct Term {
    std::size_t column = 0;
    CompareOp op = CompareOp::kEqual;
    // Category code for categorical columns (-1 if the name is not in the
    // domain), the number itself otherwise.
    double constant = 0;
  };

  static absl::StatusOr<Predicate> Create(const Schema& schema,
                                          std::vector<Comparison> terms) {
    Predicate p;
    for (Comparison& c : terms) {
      DPCORE_ASSIGN_OR_RETURN(std::size_t index, schema.Require(c.column));
      const ColumnMeta& column = schema.column(index);
      Term term{index, c.op, 0};
      if (column.kind() == ColumnKind::kCategorical) {
        if (c.op != CompareOp::kEqual && c.op != CompareOp::kNotEqual) {
          return absl::InvalidArgumentError(internal::StrCat(
              "categorical column '", column.name(),
              "' supports only == and !="));
        }
        const std::string* name = std::get_if<std::string>(&c.constant);
        if (name == nullptr) {
          return absl::InvalidArgumentError(internal::StrCat(
              "categorical column '", column.name(),
              "' must be compared with a category name"));
        }
        std::optional<std::int64_t> code = column.CategoryCode(*name);
        term.constant = code ? static_cast<double>(*code) : -1.0;
      } else {
        const double* number = std::get_if<double>(&c.constant);
        if (number == nullptr || std::isnan(*number)) {
          return absl::InvalidArgumentError(internal::StrCat(
              "numeric column '", column.name(),
              "' must be compared with a number"));
        }
        term.constant = *number;
      }
      p.terms_.push_back(term);
    }
    return p;
  }

  const std::vector<Term>& terms() const { return terms_; }

  bool Matches(const Row& row) const {
    for (const Term& t : terms_) {
      if (!Compare(NumericValue(row[t.column]), t.op, t.constant)) {
        return false;
      }
    }
    return true;
  }

  static bool Compare(double x, CompareOp op, double c) {
    switch (op) {
      case CompareOp::kLess:
        return x < c;
      case CompareOp::kLessEqual:
        return x <= c;
      case CompareOp::kGreater:
        return x > c;
      case CompareOp::kGreaterEqual:
        return x >= c;
      case CompareOp::kEqual:
        return x == c;
      case CompareOp::kNotEqual:
        return x != c;
    }
    return false;
  }

 private:
  std::vector<Term> terms_;
};

// Per-row predicate evaluation. The service layer substitutes an evaluator
// that pads every record to a fixed cost.
class PredicateEvaluator {
 public:
  virtual ~PredicateEvaluator() = default;
  virtual bool Evaluate(const Predicate& predicate, const Row& row) = 0;
};

class DirectEvaluator : public PredicateEvaluator {
 public:
  static DirectEvaluator& Default() {
    static DirectEvaluator* evaluator = new DirectEvaluator;
    return *evaluator;
  }
  bool Evaluate(const Predicate& predicate, const Row& row) override {
    return predicate.Matches(row);
  }
};

namespace internal {

inline std::int64_t SaturatingInt(double x) {
  constexpr double kMax = 9.2233720368547748e18;  // 2^63 - 1024
  if (x >= kMax) return std::numeric_limits<std::int64_t>::max();
  if (x <= -kMax) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(x);
}

// Bounds implied by the predicate on each column, intersected with the
// declared bounds. An empty intersection collapses to a single point inside
// the original bounds; no row can pass such a filter.
inline absl::StatusOr<Schema> RefineBounds(const Schema& schema,
                                           const Predicate& predicate) {
  std::vector<ColumnMeta> columns = schema.columns();
  for (const Predicate::Term& t : predicate.terms()) {
    ColumnMeta& column = columns[t.column];
    if (column.kind() == ColumnKind::kCategorical) continue;
    const ColumnMeta& original = schema.column(t.column);
    double lo = column.lower();
    double hi = column.upper();
    bool integer = column.kind() == ColumnKind::kInteger;
    double c = t.constant;
    switch (t.op) {
      case CompareOp::kLess:
      case CompareOp::kLessEqual:
        hi = std::fmin(hi, integer ? std::floor(c) : c);
        break;
      case CompareOp::kGreater:
      case CompareOp::kGreaterEqual:
        lo = std::fmax(lo, integer ? std::ceil(c) : c);
        break;
      case CompareOp::kEqual:
        lo = std::fmax(lo, integer ? std::ceil(c) : c);
        hi = std::fmin(hi, integer ? std::floor(c) : c);
        break;
      case CompareOp::kNotEqual:
        break;
    }
    if (lo > hi) {
      double x = std::clamp(c, original.lower(), original.upper());
      if (integer) x = std::clamp(std::round(x), original.lower(),
                                  original.upper());
      lo = hi = x;
    }
    column = integer ? column.WithIntegerBounds(SaturatingInt(lo),
                                                SaturatingInt(hi))
                     : column.WithRealBounds(lo, hi);
  }
  return Schema::Create(std::move(columns));
}

inline absl::StatusOr<std::vector<std::size_t>> ResolveColumns(
    const Schema& schema, const std::vector<std::string>& names) {
  if (names.empty()) {
    return absl::InvalidArgumentError("column list must not be empty");
  }
  std::vector<std::size_t> out;
  for (const std::string& name : names) {
    DPCORE_ASSIGN_OR_RETURN(std::size_t index, schema.Require(name));
    if (std::find(out.begin(), out.end(), index) != out.end()) {
      return absl::InvalidArgumentError(
          internal::StrCat("column '", name, "' listed twice"));
    }
    out.push_back(index);
  }
  return out;
}

inline absl::StatusOr<Schema> SubSchema(const Schema& schema,
                                        const std::vector<std::size_t>& cols) {
  std::vector<ColumnMeta> columns;
  columns.reserve(cols.size());
  for (std::size_t c : cols) columns.push_back(schema.column(c));
  return Schema::Create(std::move(columns));
}

inline Row SubRow(const Row& row, const std::vector<std::size_t>& cols) {
  Row out;
  out.reserve(cols.size());
  for (std::size_t c : cols) out.push_back(row[c]);
  return out;
}

}  // namespace internal

// Rows satisfying `predicate`; bounds narrowed to those the predicate
// implies (Age < 25 on Age in [18, 65] gives [18, 25]), even when no row
// survives. 1-stable.
inline absl::StatusOr<Table> SelectWhere(
    const Table& table, const Predicate& predicate,
    PredicateEvaluator& evaluator = DirectEvaluator::Default()) {
  DPCORE_ASSIGN_OR_RETURN(Schema schema,
                          internal::RefineBounds(table.schema(), predicate));
  std::vector<Row> rows;
  for (const Row& row : table.rows()) {
    if (evaluator.Evaluate(predicate, row)) rows.push_back(row);
  }
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 table.stability(), DevLog::Global());
}

inline absl::StatusOr<Table> SelectWhere(
    const Table& table, std::vector<Comparison> terms,
    PredicateEvaluator& evaluator = DirectEvaluator::Default()) {
  DPCORE_ASSIGN_OR_RETURN(Predicate predicate,
                          Predicate::Create(table.schema(), std::move(terms)));
  return SelectWhere(table, predicate, evaluator);
}

// Keeps the named columns, in the order given. 1-stable.
inline absl::StatusOr<Table> Project(const Table& table,
                                     const std::vector<std::string>& names) {
  DPCORE_ASSIGN_OR_RETURN(std::vector<std::size_t> cols,
                          internal::ResolveColumns(table.schema(), names));
  DPCORE_ASSIGN_OR_RETURN(Schema schema,
                          internal::SubSchema(table.schema(), cols));
  std::vector<Row> rows;
  rows.reserve(table.size());
  for (const Row& row : table.rows()) rows.push_back(internal::SubRow(row, cols));
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 table.stability(), DevLog::Global());
}

// Distinct keys over the named columns; other columns are dropped. Output
// rows are in ascending key order. 1-stable.
inline absl::StatusOr<Table> Distinct(const Table& table,
                                      const std::vector<std::string>& names) {
  DPCORE_ASSIGN_OR_RETURN(std::vector<std::size_t> cols,
                          internal::ResolveColumns(table.schema(), names));
  DPCORE_ASSIGN_OR_RETURN(Schema schema,
                          internal::SubSchema(table.schema(), cols));
  std::vector<Row> rows;
  rows.reserve(table.size());
  for (const Row& row : table.rows()) rows.push_back(internal::SubRow(row, cols));
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 table.stability(), DevLog::Global());
}

// Multiset union; stability adds, bounds take the hull.
inline absl::StatusOr<Table> Union(const Table& a, const Table& b) {
  if (!a.schema().SameStructure(b.schema())) {
    return absl::InvalidArgumentError(
        "union needs tables with the same column names, kinds and domains");
  }
  std::vector<ColumnMeta> columns;
  for (std::size_t c = 0; c < a.schema().size(); ++c) {
    const ColumnMeta& x = a.schema().column(c);
    const ColumnMeta& y = b.schema().column(c);
    switch (x.kind()) {
      case ColumnKind::kCategorical:
        columns.push_back(x);
        break;
      case ColumnKind::kInteger:
        columns.push_back(
            x.WithIntegerBounds(std::min(x.int_lower(), y.int_lower()),
                                std::max(x.int_upper(), y.int_upper())));
        break;
      case ColumnKind::kReal:
        columns.push_back(x.WithRealBounds(std::fmin(x.lower(), y.lower()),
                                           std::fmax(x.upper(), y.upper())));
        break;
    }
  }
  DPCORE_ASSIGN_OR_RETURN(Schema schema, Schema::Create(std::move(columns)));
  std::vector<Row> rows(a.rows().begin(), a.rows().end());
  rows.insert(rows.end(), b.rows().begin(), b.rows().end());
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 a.stability() + b.stability(),
                                 DevLog::Global());
}

inline constexpr std::uint64_t kMaxGroups = std::uint64_t{1} << 20;

// One group per element of the key-domain cross product, in mixed-radix
// order with the first key most significant. Empty groups are present.
// Grouped-record stability is twice the input's.
inline absl::StatusOr<GroupedTable> GroupBy(
    const Table& table, const std::vector<std::string>& keys) {
  DPCORE_ASSIGN_OR_RETURN(std::vector<std::size_t> cols,
                          internal::ResolveColumns(table.schema(), keys));
  std::vector<ColumnMeta> key_columns;
  std::vector<std::uint64_t> radix;
  std::uint64_t total = 1;
  for (std::size_t c : cols) {
    const ColumnMeta& column = table.schema().column(c);
    std::optional<std::uint64_t> size = column.DomainSize();
    if (!size) {
      return absl::InvalidArgumentError(internal::StrCat(
          "group_by key '", column.name(),
          "' must be categorical or a bounded integer column"));
    }
    if (*size > kMaxGroups || total * *size > kMaxGroups) {
      return absl::InvalidArgumentError(internal::StrCat(
          "group_by domain exceeds ", kMaxGroups, " groups"));
    }
    total *= *size;
    radix.push_back(*size);
    key_columns.push_back(column);
  }

  std::vector<std::pair<Row, std::vector<Row>>> groups(total);
  for (std::uint64_t g = 0; g < total; ++g) {
    Row key(cols.size());
    std::uint64_t rest = g;
    for (std::size_t k = cols.size(); k-- > 0;) {
      key[k] = key_columns[k].DomainValue(rest % radix[k]);
      rest /= radix[k];
    }
    groups[g].first = std::move(key);
  }
  for (const Row& row : table.rows()) {
    std::uint64_t g = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::int64_t v = std::get<std::int64_t>(row[cols[k]]);
      std::uint64_t offset =
          key_columns[k].kind() == ColumnKind::kCategorical
              ? static_cast<std::uint64_t>(v)
              : static_cast<std::uint64_t>(v) -
                    static_cast<std::uint64_t>(key_columns[k].int_lower());
      g = g * radix[k] + offset;
    }
    groups[g].second.push_back(row);
  }
  return internal::AssembleGroupedTable(
      std::move(key_columns), table.schema(), std::move(groups),
      StabilityBound(2) * table.stability(), table.stability());
}

// Keeps each row independently with probability p. The tracked stability is
// unchanged: a differing record survives with probability p <= 1.
inline absl::StatusOr<Table> BernoulliSample(const Table& table, double p,
                                             RandomSource& rng) {
  if (!(p >= 0 && p <= 1)) {
    return absl::InvalidArgumentError(
        "bernoulli_sample probability must lie in [0, 1]");
  }
  std::vector<Row> rows;
  if (p == 1) {
    rows.assign(table.rows().begin(), table.rows().end());
  } else if (p > 0) {
    std::uint64_t threshold = BernoulliThreshold(p);
    for (const Row& row : table.rows()) {
      if (BernoulliTrial(rng, threshold)) rows.push_back(row);
    }
  }
  return internal::AssembleTable(table.schema(), std::move(rows),
                                 table.stability(), DevLog::Global());
}

struct Clamp {
  double lower = 0;
  double upper = 0;
};
struct Affine {
  double a = 1;
  double b = 0;
};
struct Square {};

// The whitelisted per-value functions. Output bounds come from interval
// arithmetic on the declared input bounds.
using ColumnMap = std::variant<Clamp, Affine, Square>;

namespace internal {

inline double ApplyMap(const ColumnMap& f, double x) {
  if (const auto* c = std::get_if<Clamp>(&f)) {
    return std::clamp(x, c->lower, c->upper);
  }
  if (const auto* a = std::get_if<Affine>(&f)) {
    return a->a == 0 ? a->b : a->a * x + a->b;
  }
  return x * x;
}

inline std::pair<double, double> MapInterval(const ColumnMap& f, double lo,
                                             double hi) {
  if (std::holds_alternative<Square>(f)) {
    if (lo >= 0) return {lo * lo, hi * hi};
    if (hi <= 0) return {hi * hi, lo * lo};
    double m = std::fmax(-lo, hi);
    return {0.0, m * m};
  }
  double x = ApplyMap(f, lo);
  double y = ApplyMap(f, hi);
  return {std::fmin(x, y), std::fmax(x, y)};
}

inline bool IsIntegral(double x) {
  return std::isfinite(x) && std::floor(x) == x && std::fabs(x) < 0x1p62;
}

}  // namespace internal

inline absl::StatusOr<Table> MapColumn(const Table& table,
                                       std::string_view column_name,
                                       const ColumnMap& f) {
  DPCORE_ASSIGN_OR_RETURN(std::size_t index,
                          table.schema().Require(column_name));
  const ColumnMeta& column = table.schema().column(index);
  if (column.kind() == ColumnKind::kCategorical) {
    return absl::InvalidArgumentError(internal::StrCat(
        "map_column needs a numeric column; '", column.name(),
        "' is categorical"));
  }
  bool integral_params = true;
  if (const auto* c = std::get_if<Clamp>(&f)) {
    if (std::isnan(c->lower) || std::isnan(c->upper) || c->lower > c->upper) {
      return absl::InvalidArgumentError("clamp needs lower <= upper");
    }
    integral_params =
        internal::IsIntegral(c->lower) && internal::IsIntegral(c->upper);
  } else if (const auto* a = std::get_if<Affine>(&f)) {
    if (!std::isfinite(a->a) || !std::isfinite(a->b)) {
      return absl::InvalidArgumentError("affine coefficients must be finite");
    }
    integral_params = internal::IsIntegral(a->a) && internal::IsIntegral(a->b);
  }
  auto [lo, hi] = internal::MapInterval(f, column.lower(), column.upper());
  bool stays_integer = column.kind() == ColumnKind::kInteger &&
                       integral_params && internal::IsIntegral(lo) &&
                       internal::IsIntegral(hi);
  std::vector<ColumnMeta> columns = table.schema().columns();
  columns[index] =
      stays_integer
          ? column.WithIntegerBounds(static_cast<std::int64_t>(lo),
                                     static_cast<std::int64_t>(hi))
          : column.WithRealBounds(lo, hi);
  DPCORE_ASSIGN_OR_RETURN(Schema schema, Schema::Create(std::move(columns)));
  std::vector<Row> rows(table.rows().begin(), table.rows().end());
  for (Row& row : rows) {
    double y = internal::ApplyMap(f, NumericValue(row[index]));
    if (stays_integer) {
      row[index] = static_cast<std::int64_t>(y);
    } else {
      row[index] = y;
    }
  }
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 table.stability(), DevLog::Global());
}

struct Count {};
struct Sum {
  std::string column;
};
using Aggregation = std::variant<Count, Sum>;

namespace internal {

// Per-record influence of the aggregation and the column it reads.
inline absl::StatusOr<std::pair<double, std::optional<std::size_t>>>
AggregationInfluence(const Schema& schema, const Aggregation& agg) {
  if (std::holds_alternative<Count>(agg)) {
    return std::pair<double, std::optional<std::size_t>>{1.0, std::nullopt};
  }
  const Sum& sum = std::get<Sum>(agg);
  DPCORE_ASSIGN_OR_RETURN(std::size_t index, schema.Require(sum.column));
  const ColumnMeta& column = schema.column(index);
  if (column.kind() == ColumnKind::kCategorical) {
    return absl::InvalidArgumentError(internal::StrCat(
        "sum needs a numeric column; '", column.name(), "' is categorical"));
  }
  if (!column.is_bounded()) {
    return absl::FailedPreconditionError(internal::StrCat(
        "sum over unbounded column '", column.name(),
        "'; clamp it with map_column first"));
  }
  return std::pair<double, std::optional<std::size_t>>{column.SumInfluence(),
                                                       index};
}

inline double AggregateRows(std::span<const Row> rows,
                            std::optional<std::size_t> column) {
  if (!column) return static_cast<double>(rows.size());
  // Neumaier summation.
  double sum = 0;
  double carry = 0;
  for (const Row& row : rows) {
    double x = NumericValue(row[*column]);
    double t = sum + x;
    carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

inline absl::StatusOr<double> ScaledSensitivity(StabilityBound stability,
                                                double influence) {
  if (stability.is_infinite()) {
    return absl::FailedPreconditionError(
        "stability bound overflowed; the plan has no finite sensitivity");
  }
  return stability.AsDouble() * influence;
}

inline std::string AggregationLabel(const Aggregation& agg) {
  if (std::holds_alternative<Count>(agg)) return "count";
  return internal::StrCat("sum(", std::get<Sum>(agg).column, ")");
}

}  // namespace internal

// Exact count or sum. l1_sensitivity = stability × per-record influence
// (1 for count, max(|lower|, |upper|) for sum).
inline absl::StatusOr<StatVector> Aggregate(const Table& table,
                                            const Aggregation& agg) {
  DPCORE_ASSIGN_OR_RETURN(auto influence,
                          internal::AggregationInfluence(table.schema(), agg));
  DPCORE_ASSIGN_OR_RETURN(
      double sensitivity,
      internal::ScaledSensitivity(table.stability(), influence.first));
  return StatVector::Create(
      {internal::AggregateRows(table.rows(), influence.second)}, sensitivity,
      {internal::AggregationLabel(agg)});
}

// One entry per group. A record added to or removed from the input moves a
// single group's value by at most its influence, so the L1 sensitivity is
// charged against the stability of the rows beneath the grouping.
inline absl::StatusOr<StatVector> Aggregate(const GroupedTable& grouped,
                                            const Aggregation& agg) {
  DPCORE_ASSIGN_OR_RETURN(
      auto influence,
      internal::AggregationInfluence(grouped.row_schema(), agg));
  DPCORE_ASSIGN_OR_RETURN(
      double sensitivity,
      internal::ScaledSensitivity(grouped.row_stability(), influence.first));
  std::vector<double> values;
  std::vector<std::string> labels;
  values.reserve(grouped.num_groups());
  labels.reserve(grouped.num_groups());
  for (std::size_t g = 0; g < grouped.num_groups(); ++g) {
    values.push_back(
        internal::AggregateRows(grouped.groups()[g].rows, influence.second));
    labels.push_back(grouped.GroupLabel(g));
  }
  return StatVector::Create(std::move(values), sensitivity, std::move(labels));
}

// m · v, with sensitivity scaled by the induced L1 norm of m.
inline absl::StatusOr<StatVector> LinearMap(const StatVector& v,
                                            const Matrix& m) {
  DPCORE_ASSIGN_OR_RETURN(std::vector<double> values, m.Apply(v.values()));
  double sensitivity = v.l1_sensitivity() * m.L1OperatorNorm();
  if (m.rows() == v.size()) {
    return StatVector::Create(std::move(values), sensitivity, v.labels());
  }
  return StatVector::Create(std::move(values), sensitivity);
}

inline absl::StatusOr<StatVector> Scale(const StatVector& v, double c) {
  if (!std::isfinite(c)) {
    return absl::InvalidArgumentError("scale factor must be finite");
  }
  std::vector<double> values(v.values().begin(), v.values().end());
  for (double& x : values) x *= c;
  return StatVector::Create(std::move(values),
                            v.l1_sensitivity() * std::fabs(c), v.labels());
}

enum class RejectedOp { kLimit, kOrderBy, kSkip, kWindow };

inline std::optional<RejectedOp> ParseRejectedOp(std::string_view name) {
  if (name == "limit") return RejectedOp::kLimit;
  if (name == "order_by") return RejectedOp::kOrderBy;
  if (name == "skip" || name == "offset") return RejectedOp::kSkip;
  if (name == "window") return RejectedOp::kWindow;
  return std::nullopt;
}

// Operators whose output depends on row order. Always fails.
inline absl::Status RejectedOperation(RejectedOp op) {
  constexpr std::string_view kHazard =
      ": the rows kept depend on the order of the input, and a limit of m "
      "over inputs differing in k records has stability min(2k, 2m), not a "
      "bound that metadata can track. Use bernoulli_sample to reduce the "
      "table instead.";
  switch (op) {
    case RejectedOp::kLimit:
      return absl::UnimplementedError(
          internal::StrCat("limit is not supported", kHazard));
    case RejectedOp::kOrderBy:
      return absl::UnimplementedError(
          internal::StrCat("order_by is not supported", kHazard));
    case RejectedOp::kSkip:
      return absl::UnimplementedError(
          internal::StrCat("skip is not supported", kHazard));
    case RejectedOp::kWindow:
      return absl::UnimplementedError(
          internal::StrCat("window is not supported", kHazard));
  }
  return absl::UnimplementedError("unsupported operator");
}

}  // namespace dpcore

#endif  // DPCORE_DATA_ACCESS_H_
