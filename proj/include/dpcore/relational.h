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

// Tables, grouped tables and statistic vectors, plus the metadata that every
// layer above relies on. Metadata (domains, bounds, stability) is declared up
// front and only ever derived from other metadata; it is never read off rows.

#ifndef DPCORE_RELATIONAL_H_
#define DPCORE_RELATIONAL_H_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"
#include "dpcore/status_macros.h"

namespace dpcore {

enum class ColumnKind { kCategorical, kInteger, kReal };

// Categorical cells hold the interned index into the column's value list.
using Value = std::variant<std::int64_t, double>;
using Row = std::vector<Value>;

inline double NumericValue(const Value& v) {
  return std::holds_alternative<std::int64_t>(v)
             ? static_cast<double>(std::get<std::int64_t>(v))
             : std::get<double>(v);
}

class ColumnMeta {
 public:
  static absl::StatusOr<ColumnMeta> Categorical(
      std::string name, std::vector<std::string> values) {
    DPCORE_RETURN_IF_ERROR(CheckName(name));
    if (values.empty()) {
      return absl::InvalidArgumentError(internal::StrCat(
          "categorical column '", name, "' needs a non-empty value set"));
    }
    std::vector<std::string> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      return absl::InvalidArgumentError(internal::StrCat(
          "categorical column '", name, "' lists a value twice"));
    }
    ColumnMeta meta;
    meta.name_ = std::move(name);
    meta.kind_ = ColumnKind::kCategorical;
    meta.categories_ = std::move(values);
    return meta;
  }

  static absl::StatusOr<ColumnMeta> Integer(std::string name,
                                            std::int64_t lower,
                                            std::int64_t upper) {
    DPCORE_RETURN_IF_ERROR(CheckName(name));
    if (lower > upper) {
      return absl::InvalidArgumentError(internal::StrCat(
          "integer column '", name, "' has lower bound above upper bound"));
    }
    ColumnMeta meta;
    meta.name_ = std::move(name);
    meta.kind_ = ColumnKind::kInteger;
    meta.int_lower_ = lower;
    meta.int_upper_ = upper;
    return meta;
  }

  // Infinite bounds are accepted and mark the column as unbounded; such a
  // column can be stored and filtered but not summed or grouped.
  static absl::StatusOr<ColumnMeta> Real(std::string name, double lower,
                                         double upper) {
    DPCORE_RETURN_IF_ERROR(CheckName(name));
    if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
      return absl::InvalidArgumentError(internal::StrCat(
          "real column '", name, "' needs bounds with lower <= upper"));
    }
    ColumnMeta meta;
    meta.name_ = std::move(name);
    meta.kind_ = ColumnKind::kReal;
    meta.real_lower_ = lower;
    meta.real_upper_ = upper;
    return meta;
  }

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  bool is_numeric() const { return kind_ != ColumnKind::kCategorical; }
  const std::vector<std::string>& categories() const { return categories_; }

  double lower() const {
    return kind_ == ColumnKind::kInteger ? static_cast<double>(int_lower_)
                                         : real_lower_;
  }
  double upper() const {
    return kind_ == ColumnKind::kInteger ? static_cast<double>(int_upper_)
                                         : real_upper_;
  }
  std::int64_t int_lower() const { return int_lower_; }
  std::int64_t int_upper() const { return int_upper_; }

  bool is_bounded() const {
    return kind_ != ColumnKind::kReal ||
           (std::isfinite(real_lower_) && std::isfinite(real_upper_));
  }

  // Largest effect one record has on a sum over this column.
  double SumInfluence() const {
    return std::fmax(std::fabs(lower()), std::fabs(upper()));
  }

  // Number of values in a finite domain; nullopt for real columns.
  std::optional<std::uint64_t> DomainSize() const {
    switch (kind_) {
      case ColumnKind::kCategorical:
        return categories_.size();
      case ColumnKind::kInteger: {
        std::uint64_t span = static_cast<std::uint64_t>(int_upper_) -
                             static_cast<std::uint64_t>(int_lower_);
        if (span == std::numeric_limits<std::uint64_t>::max()) {
          return std::nullopt;
        }
        return span + 1;
      }
      case ColumnKind::kReal:
        return std::nullopt;
    }
    return std::nullopt;
  }

  // i-th element of a finite domain, in declaration order.
  Value DomainValue(std::uint64_t i) const {
    if (kind_ == ColumnKind::kCategorical) {
      return static_cast<std::int64_t>(i);
    }
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(int_lower_) +
                                     i);
  }

  std::optional<std::int64_t> CategoryCode(std::string_view value) const {
    for (std::size_t i = 0; i < categories_.size(); ++i) {
      if (categories_[i] == value) return static_cast<std::int64_t>(i);
    }
    return std::nullopt;
  }

  std::string FormatValue(const Value& v) const {
    if (kind_ == ColumnKind::kCategorical) {
      std::int64_t code = std::get<std::int64_t>(v);
      if (code >= 0 && static_cast<std::size_t>(code) < categories_.size()) {
        return categories_[static_cast<std::size_t>(code)];
      }
      return "?";
    }
    if (std::holds_alternative<std::int64_t>(v)) {
      return internal::StrCat(std::get<std::int64_t>(v));
    }
    return internal::FormatDouble(std::get<double>(v));
  }

  // Same name, kind and categorical domain; numeric bounds may differ.
  bool SameType(const ColumnMeta& other) const {
    return name_ == other.name_ && kind_ == other.kind_ &&
           categories_ == other.categories_;
  }

  ColumnMeta WithName(std::string name) const {
    ColumnMeta copy = *this;
    copy.name_ = std::move(name);
    return copy;
  }

  // Caller guarantees lower <= upper.
  ColumnMeta WithIntegerBounds(std::int64_t lower, std::int64_t upper) const {
    ColumnMeta copy = *this;
    copy.kind_ = ColumnKind::kInteger;
    copy.int_lower_ = lower;
    copy.int_upper_ = upper;
    copy.real_lower_ = 0;
    copy.real_upper_ = 0;
    return copy;
  }
  ColumnMeta WithRealBounds(double lower, double upper) const {
    ColumnMeta copy = *this;
    copy.kind_ = ColumnKind::kReal;
    copy.real_lower_ = lower;
    copy.real_upper_ = upper;
    copy.int_lower_ = 0;
    copy.int_upper_ = 0;
    return copy;
  }

  friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;

 private:
  ColumnMeta() = default;

  static absl::Status CheckName(std::string_view name) {
    if (name.empty()) {
      return absl::InvalidArgumentError("column name must not be empty");
    }
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
        return absl::InvalidArgumentError(internal::StrCat(
            "column name '", name, "' must be [A-Za-z0-9_]+"));
      }
    }
    return absl::OkStatus();
  }

  std::string name_;
  ColumnKind kind_ = ColumnKind::kInteger;
  std::vector<std::string> categories_;
  std::int64_t int_lower_ = 0;
  std::int64_t int_upper_ = 0;
  double real_lower_ = 0;
  double real_upper_ = 0;
};

class Schema {
 public:
  Schema() = default;

  static absl::StatusOr<Schema> Create(std::vector<ColumnMeta> columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      for (std::size_t j = i + 1; j < columns.size(); ++j) {
        if (columns[i].name() == columns[j].name()) {
          return absl::InvalidArgumentError(internal::StrCat(
              "duplicate column name '", columns[i].name(), "'"));
        }
      }
    }
    Schema schema;
    schema.columns_ = std::move(columns);
    return schema;
  }

  std::size_t size() const { return columns_.size(); }
  const ColumnMeta& column(std::size_t i) const { return columns_[i]; }
  const std::vector<ColumnMeta>& columns() const { return columns_; }

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name() == name) return i;
    }
    return std::nullopt;
  }

  absl::StatusOr<std::size_t> Require(std::string_view name) const {
    std::optional<std::size_t> index = IndexOf(name);
    if (!index.has_value()) {
      return absl::InvalidArgumentError(
          internal::StrCat("unknown column '", name, "'"));
    }
    return *index;
  }

  bool SameStructure(const Schema& other) const {
    if (columns_.size() != other.columns_.size()) return false;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (!columns_[i].SameType(other.columns_[i])) return false;
    }
    return true;
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<ColumnMeta> columns_;
};

// Bound on output symmetric-difference size per unit of input symmetric
// difference. Arithmetic saturates at the infinite marker.
class StabilityBound {
 public:
  constexpr StabilityBound() = default;
  constexpr explicit StabilityBound(std::uint64_t factor) : factor_(factor) {}

  static constexpr StabilityBound Identity() { return StabilityBound(1); }
  static constexpr StabilityBound Infinite() {
    StabilityBound s;
    s.infinite_ = true;
    return s;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr std::uint64_t factor() const { return factor_; }
  constexpr double AsDouble() const {
    return infinite_ ? std::numeric_limits<double>::infinity()
                     : static_cast<double>(factor_);
  }

  friend constexpr StabilityBound operator+(StabilityBound a,
                                            StabilityBound b) {
    if (a.infinite_ || b.infinite_ ||
        a.factor_ > std::numeric_limits<std::uint64_t>::max() - b.factor_) {
      return Infinite();
    }
    return StabilityBound(a.factor_ + b.factor_);
  }
  friend constexpr StabilityBound operator*(StabilityBound a,
                                            StabilityBound b) {
    if ((a.infinite_ && b.factor_ == 0 && !b.infinite_) ||
        (b.infinite_ && a.factor_ == 0 && !a.infinite_)) {
      return StabilityBound(0);
    }
    if (a.infinite_ || b.infinite_) return Infinite();
    if (a.factor_ != 0 &&
        b.factor_ > std::numeric_limits<std::uint64_t>::max() / a.factor_) {
      return Infinite();
    }
    return StabilityBound(a.factor_ * b.factor_);
  }
  friend constexpr bool operator==(StabilityBound, StabilityBound) = default;

  std::string ToString() const {
    return infinite_ ? std::string("inf") : internal::StrCat(factor_);
  }

 private:
  std::uint64_t factor_ = 1;
  bool infinite_ = false;
};

// Developer-only diagnostics. Appends take a short lock and never touch I/O;
// a DevLogFlusher (or an explicit Drain) moves entries elsewhere.
class DevLog {
 public:
  static DevLog& Global() {
    static DevLog* log = new DevLog();
    return *log;
  }

  void Append(std::string entry) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back(std::move(entry));
  }

  std::vector<std::string> Drain() {
    std::vector<std::string> out;
    std::lock_guard<std::mutex> lock(mu_);
    out.swap(entries_);
    return out;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> entries_;
};

class Table;
class GroupedTable;

namespace internal {
absl::StatusOr<Table> AssembleTable(Schema schema, std::vector<Row> rows,
                                    StabilityBound stability, DevLog& log);
GroupedTable AssembleGroupedTable(std::vector<ColumnMeta> key_columns,
                                  Schema row_schema,
                                  std::vector<std::pair<Row, std::vector<Row>>>
                                      groups,
                                  StabilityBound stability,
                                  StabilityBound row_stability);
}  // namespace internal

// Immutable multiset of rows with its schema and tracked stability. Row order
// carries no meaning and no operation depends on it.
class Table {
 public:
  const Schema& schema() const { return schema_; }
  std::span<const Row> rows() const { return *rows_; }
  std::size_t size() const { return rows_->size(); }
  bool empty() const { return rows_->empty(); }
  StabilityBound stability() const { return stability_; }

  Table WithStability(StabilityBound stability) const {
    Table copy = *this;
    copy.stability_ = stability;
    return copy;
  }

 private:
  friend absl::StatusOr<Table> internal::AssembleTable(Schema,
                                                       std::vector<Row>,
                                                       StabilityBound,
                                                       DevLog&);
  friend Table EnforceSchema(const Table& table, DevLog& log);

  Table(Schema schema, std::shared_ptr<const std::vector<Row>> rows,
        StabilityBound stability)
      : schema_(std::move(schema)),
        rows_(std::move(rows)),
        stability_(stability) {}

  Schema schema_;
  std::shared_ptr<const std::vector<Row>> rows_;
  StabilityBound stability_;
};

namespace internal {

// Clamps one cell into its column domain. Returns true if the cell changed.
inline bool ClampCell(const ColumnMeta& column, Value& cell) {
  switch (column.kind()) {
    case ColumnKind::kCategorical: {
      std::int64_t& code = std::get<std::int64_t>(cell);
      std::int64_t limit =
          static_cast<std::int64_t>(column.categories().size());
      bool bad = code < 0 || code >= limit;
      // Out-of-domain categories map to the first declared value.
      code = bad ? 0 : code;
      return bad;
    }
    case ColumnKind::kInteger: {
      std::int64_t& v = std::get<std::int64_t>(cell);
      std::int64_t clamped =
          std::clamp(v, column.int_lower(), column.int_upper());
      bool changed = clamped != v;
      v = clamped;
      return changed;
    }
    case ColumnKind::kReal: {
      double& v = std::get<double>(cell);
      double replacement = std::isfinite(column.lower()) ? column.lower()
                           : std::isfinite(column.upper()) ? column.upper()
                                                           : 0.0;
      bool is_nan = std::isnan(v);
      double clamped = is_nan ? replacement
                              : std::clamp(v, column.lower(), column.upper());
      bool changed = is_nan || clamped != v;
      v = clamped;
      return changed;
    }
  }
  return false;
}

inline void EnforceRows(const Schema& schema, std::vector<Row>& rows,
                        DevLog& log) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (ClampCell(schema.column(c), rows[r][c])) {
        log.Append(internal::StrCat("bounds violation corrected: row ", r,
                                " column '", schema.column(c).name(),
                                "' set to ",
                                schema.column(c).FormatValue(rows[r][c])));
      }
    }
  }
}

// Converts cells to the representation their column expects. Only structural
// problems (wrong arity or a cell of the wrong type) are reported.
inline absl::Status NormalizeRows(const Schema& schema,
                                  std::vector<Row>& rows) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Row& row = rows[r];
    if (row.size() != schema.size()) {
      return absl::InvalidArgumentError(
          internal::StrCat("row ", r, " has ", row.size(), " values but schema has ",
                       schema.size(), " columns"));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const ColumnMeta& column = schema.column(c);
      if (column.kind() == ColumnKind::kReal) {
        row[c] = NumericValue(row[c]);
      } else if (!std::holds_alternative<std::int64_t>(row[c])) {
        return absl::InvalidArgumentError(
            internal::StrCat("row ", r, " column '", column.name(),
                         "' expects an integer value"));
      }
    }
  }
  return absl::OkStatus();
}

inline absl::StatusOr<Table> AssembleTable(Schema schema,
                                           std::vector<Row> rows,
                                           StabilityBound stability,
                                           DevLog& log) {
  DPCORE_RETURN_IF_ERROR(NormalizeRows(schema, rows));
  EnforceRows(schema, rows, log);
  return Table(std::move(schema),
               std::make_shared<const std::vector<Row>>(std::move(rows)),
               stability);
}

}  // namespace internal

// Clamps numeric cells to their declared bounds and maps unknown categories
// to the first declared value. Each correction goes to the developer log;
// nothing about it is visible in the returned table.
inline Table EnforceSchema(const Table& table, DevLog& log = DevLog::Global()) {
  std::vector<Row> rows(table.rows().begin(), table.rows().end());
  internal::EnforceRows(table.schema(), rows, log);
  return Table(table.schema(),
               std::make_shared<const std::vector<Row>>(std::move(rows)),
               table.stability());
}

// Builds a source table (stability 1) and applies EnforceSchema.
inline absl::StatusOr<Table> MakeTable(Schema schema, std::vector<Row> rows,
                                       DevLog& log = DevLog::Global()) {
  return internal::AssembleTable(std::move(schema), std::move(rows),
                                 StabilityBound::Identity(), log);
}

namespace internal {

// |A ⊖ B| for multisets given as sorted row lists.
inline std::uint64_t SortedMultisetDistance(std::span<const Row> a,
                                            std::span<const Row> b) {
  std::uint64_t distance = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++distance;
      ++i;
    } else if (b[j] < a[i]) {
      ++distance;
      ++j;
    } else {
      ++i;
      ++j;
    }
  }
  return distance + (a.size() - i) + (b.size() - j);
}

inline std::vector<Row> SortedRows(std::span<const Row> rows) {
  std::vector<Row> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace internal

// Multiset symmetric-difference size |A ∪ B| − |A ∩ B|.
inline absl::StatusOr<std::uint64_t> SymmetricDifference(const Table& a,
                                                         const Table& b) {
  if (!(a.schema() == b.schema())) {
    return absl::InvalidArgumentError(
        "symmetric difference needs tables with identical schemas");
  }
  std::vector<Row> sa = internal::SortedRows(a.rows());
  std::vector<Row> sb = internal::SortedRows(b.rows());
  return internal::SortedMultisetDistance(sa, sb);
}

struct Group {
  Row key;
  std::vector<Row> rows;
};

// One entry per element of the key-domain cross product, empty groups
// included. `stability` tracks the grouped-record distance (a changed group
// counts as one removal plus one addition); `row_stability` tracks the rows
// underneath, which is what per-group aggregates are charged against.
class GroupedTable {
 public:
  const std::vector<ColumnMeta>& key_columns() const { return key_columns_; }
  const Schema& row_schema() const { return row_schema_; }
  std::span<const Group> groups() const { return *groups_; }
  std::size_t num_groups() const { return groups_->size(); }
  StabilityBound stability() const { return stability_; }
  StabilityBound row_stability() const { return row_stability_; }

  std::string GroupLabel(std::size_t i) const {
    const Row& key = (*groups_)[i].key;
    std::vector<std::string> parts;
    parts.reserve(key.size());
    for (std::size_t c = 0; c < key.size(); ++c) {
      parts.push_back(internal::StrCat(key_columns_[c].name(), "=",
                                   key_columns_[c].FormatValue(key[c])));
    }
    return internal::StrJoin(parts, ",");
  }

 private:
  friend GroupedTable internal::AssembleGroupedTable(
      std::vector<ColumnMeta>, Schema,
      std::vector<std::pair<Row, std::vector<Row>>>, StabilityBound,
      StabilityBound);

  GroupedTable() = default;

  std::vector<ColumnMeta> key_columns_;
  Schema row_schema_;
  std::shared_ptr<const std::vector<Group>> groups_;
  StabilityBound stability_;
  StabilityBound row_stability_;
};

namespace internal {

inline GroupedTable AssembleGroupedTable(
    std::vector<ColumnMeta> key_columns, Schema row_schema,
    std::vector<std::pair<Row, std::vector<Row>>> groups,
    StabilityBound stability, StabilityBound row_stability) {
  auto out = std::make_shared<std::vector<Group>>();
  out->reserve(groups.size());
  for (auto& [key, rows] : groups) {
    out->push_back(Group{std::move(key), std::move(rows)});
  }
  GroupedTable table;
  table.key_columns_ = std::move(key_columns);
  table.row_schema_ = std::move(row_schema);
  table.groups_ = std::move(out);
  table.stability_ = stability;
  table.row_stability_ = row_stability;
  return table;
}

}  // namespace internal

// Grouped tables are multisets of (key, row-multiset) records, so every group
// whose contents differ contributes 2.
inline absl::StatusOr<std::uint64_t> SymmetricDifference(
    const GroupedTable& a, const GroupedTable& b) {
  if (!(a.key_columns() == b.key_columns()) ||
      !(a.row_schema() == b.row_schema()) ||
      a.num_groups() != b.num_groups()) {
    return absl::InvalidArgumentError(
        "symmetric difference needs grouped tables with identical metadata");
  }
  std::uint64_t changed = 0;
  for (std::size_t i = 0; i < a.num_groups(); ++i) {
    std::vector<Row> ra = internal::SortedRows(a.groups()[i].rows);
    std::vector<Row> rb = internal::SortedRows(b.groups()[i].rows);
    if (ra != rb) ++changed;
  }
  return 2 * changed;
}

// Exact (pre-noise) aggregate vector. The only object the privacy layer
// consumes; its sensitivity comes from metadata and transform history.
class StatVector {
 public:
  static absl::StatusOr<StatVector> Create(std::vector<double> values,
                                           double l1_sensitivity,
                                           std::vector<std::string> labels) {
    if (!std::isfinite(l1_sensitivity) || l1_sensitivity < 0) {
      return absl::InvalidArgumentError(
          "L1 sensitivity must be finite and nonnegative");
    }
    if (labels.size() != values.size()) {
      return absl::InvalidArgumentError(internal::StrCat(
          "got ", labels.size(), " labels for ", values.size(), " values"));
    }
    StatVector v;
    v.values_ = std::move(values);
    v.l1_sensitivity_ = l1_sensitivity;
    v.labels_ = std::move(labels);
    return v;
  }

  // Labels default to "0", "1", ...
  static absl::StatusOr<StatVector> Create(std::vector<double> values,
                                           double l1_sensitivity) {
    std::vector<std::string> labels;
    labels.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      labels.push_back(internal::StrCat(i));
    }
    return Create(std::move(values), l1_sensitivity, std::move(labels));
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double l1_sensitivity() const { return l1_sensitivity_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  StatVector() = default;

  std::vector<double> values_;
  double l1_sensitivity_ = 0;
  std::vector<std::string> labels_;
};

}  // namespace dpcore

#endif  // DPCORE_RELATIONAL_H_
