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

// Machine-readable audit reports: one "key=value" pair per line, records
// separated by blank lines, record type in the first line.

#ifndef DPCORE_AUDIT_REPORT_H_
#define DPCORE_AUDIT_REPORT_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/audit/blackbox.h"
#include "dpcore/internal/format.h"

namespace dpcore {
namespace audit {

class ReportBuilder {
 public:
  ReportBuilder& Begin(std::string_view record) {
    if (!text_.empty()) text_ += '\n';
    return Field("record", record);
  }

  ReportBuilder& Field(std::string_view key, std::string_view value) {
    dpcore::internal::StrAppend(&text_, key, "=", Sanitize(value), "\n");
    return *this;
  }
  ReportBuilder& Field(std::string_view key, double value) {
    return Field(key, dpcore::internal::FormatDouble(value));
  }
  ReportBuilder& Field(std::string_view key, std::uint64_t value) {
    return Field(key, dpcore::internal::StrCat(value));
  }
  ReportBuilder& Field(std::string_view key, bool value) {
    return Field(key, value ? std::string_view("true") : "false");
  }

  const std::string& text() const { return text_; }

 private:
  static std::string Sanitize(std::string_view v) {
    std::string out(v);
    for (char& c : out) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
  }

  std::string text_;
};

inline std::string FormatBatteryReport(const BatteryResult& r,
                                       const BatteryOptions& options) {
  ReportBuilder b;
  b.Begin("battery")
      .Field("mechanism", r.mechanism)
      .Field("claimed_eps", r.claimed_eps)
      .Field("n_search", static_cast<std::uint64_t>(options.n_search))
      .Field("n_test", static_cast<std::uint64_t>(options.n_test))
      .Field("repetitions", static_cast<std::uint64_t>(options.repetitions))
      .Field("mean_threshold", options.mean_threshold)
      .Field("alpha", options.alpha)
      .Field("violation", r.violation);
  for (const EpsilonVerdict& v : r.per_eps) {
    b.Begin("eps_test")
        .Field("eps", v.eps_test)
        .Field("counts_toward_verdict", v.counts_toward_verdict)
        .Field("pair", v.pair)
        .Field("event", v.search.event.ToString())
        .Field("search_first", v.search.count_first)
        .Field("search_second", v.search.count_second)
        .Field("test_first", v.test_first)
        .Field("test_second", v.test_second)
        .Field("mean_p", v.verdict.mean)
        .Field("min_p", v.verdict.min)
        .Field("mean_pass", v.verdict.mean_pass)
        .Field("bonferroni_pass", v.verdict.bonferroni_pass)
        .Field("policies_disagree", v.verdict.policies_disagree);
  }
  if (r.counterexample) {
    const Counterexample& c = *r.counterexample;
    b.Begin("counterexample")
        .Field("pair", c.pair)
        .Field("event", c.event.ToString())
        .Field("eps_test", c.eps_test)
        .Field("estimated_ratio", c.estimated_ratio)
        .Field("mean_p", c.mean_p);
  }
  return b.text();
}

using ReportRecord = std::map<std::string, std::string>;

// Inverse of the builder, for tools and tests that consume reports.
inline absl::StatusOr<std::vector<ReportRecord>> ParseReport(
    std::string_view text) {
  std::vector<ReportRecord> records;
  bool open = false;
  int line_number = 0;
  for (std::string_view line : dpcore::internal::Split(text, "\n")) {
    ++line_number;
    if (line.empty()) {
      open = false;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      return absl::InvalidArgumentError(dpcore::internal::StrCat(
          "report line ", line_number, ": expected key=value"));
    }
    if (!open) {
      records.emplace_back();
      open = true;
    }
    records.back()[std::string(line.substr(0, eq))] =
        std::string(line.substr(eq + 1));
  }
  return records;
}

}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_REPORT_H_
