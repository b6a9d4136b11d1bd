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

// Query sessions: the user-facing layer above the privacy layer. Sessions
// hold an opaque dataset handle and see data only as mechanism outputs.

#ifndef DPCORE_SERVICE_SESSION_H_
#define DPCORE_SERVICE_SESSION_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/data_access.h"
#include "dpcore/internal/format.h"
#include "dpcore/mechanisms.h"
#include "dpcore/plan.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/schema_io.h"
#include "dpcore/service/clock.h"
#include "dpcore/service/padding.h"
#include "dpcore/status_macros.h"

namespace dpcore {
namespace service {

class DatasetHandle;

namespace internal {
// The one bridge from a handle to its rows. Session code only.
struct HandleAccess;
}  // namespace internal

// Opaque reference to an ingested dataset. Exposes its id and nothing else.
class DatasetHandle {
 public:
  const std::string& id() const { return id_; }

 private:
  friend struct internal::HandleAccess;
  DatasetHandle(std::string id, std::shared_ptr<const Table> table)
      : id_(std::move(id)), table_(std::move(table)) {}

  std::string id_;
  std::shared_ptr<const Table> table_;
};

namespace internal {
struct HandleAccess {
  static DatasetHandle Make(std::string id, Table table) {
    return DatasetHandle(std::move(id),
                         std::make_shared<const Table>(std::move(table)));
  }
  static const Table& Rows(const DatasetHandle& h) { return *h.table_; }
};
}  // namespace internal

// Loads a CSV against a mandatory schema sidecar. Returns a handle and
// nothing derived from the data; corrections go to the developer log.
inline absl::StatusOr<DatasetHandle> Ingest(const std::string& id,
                                            const std::string& csv_path,
                                            const std::string& schema_path,
                                            DevLog& log = DevLog::Global()) {
  if (schema_path.empty()) {
    return absl::InvalidArgumentError("a schema file is required");
  }
  DPCORE_ASSIGN_OR_RETURN(Table table, LoadCsv(csv_path, schema_path, log));
  return internal::HandleAccess::Make(id, std::move(table));
}

// Coordinatewise max(x, 0). Off by default: truncation biases estimates.
inline std::vector<double> ClampNonnegative(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v = std::fmax(v, 0.0);
  return out;
}

// Sum / max(count, 1) from two released results. No charge.
inline double DerivedMeanOf(const MechanismResult& noisy_sum,
                            const MechanismResult& noisy_count) {
  double s = noisy_sum.values().empty() ? 0 : noisy_sum.values()[0];
  double c = noisy_count.values().empty() ? 0 : noisy_count.values()[0];
  return DerivedMean(s, c);
}

struct SessionOptions {
  // Share of the scope budget spent on the size estimate.
  double startup_fraction = 0.01;
  // Padding per record visit and fixed overhead per response.
  std::int64_t xi_ns = 2000;
  std::int64_t overhead_ns = 1'000'000;
  // The record count in the schedule is rounded up to a multiple of this,
  // so neighboring datasets share a schedule under nearly every draw of n̂.
  std::uint64_t size_granularity = 256;
  MechanismOptions mechanism;
  // Delta for the (eps, delta) reading of zCDP scopes in status reports.
  double status_delta = 1e-6;
  double status_alpha = 0.05;
};

struct QueryRequest {
  std::string plan;       // plan text
  std::string mechanism;  // laplace, gaussian, noisy_histogram, ...
  double budget = 0;      // eps, or rho for the gaussian mechanism
  bool clamp_nonnegative = false;
};

inline constexpr std::string_view kBudgetExceeded = "budget_exceeded";
inline constexpr std::string_view kInvalidRequest = "invalid_request";
static_assert(kBudgetExceeded.size() == kInvalidRequest.size());

struct QueryResponse {
  bool ok = false;
  std::string code;  // error code when !ok
  std::vector<double> values;
  std::vector<std::string> labels;
  std::optional<std::size_t> selected;
  std::optional<PrivacyCharge> receipt;
  double remaining = 0;
  std::int64_t elapsed_ns = 0;  // on the session clock; not serialized

  // key=value lines. Error responses carry the code and the remaining budget
  // in a fixed-width format, so every error has the same fields and length.
  std::string Serialize() const {
    using dpcore::internal::StrAppend;
    std::string out;
    if (!ok) {
      StrAppend(&out, "status=error\ncode=", code, "\n");
      StrAppend(&out, "remaining=", fmt::format("{:+.16e}", remaining), "\n");
      return out;
    }
    StrAppend(&out, "status=ok\n");
    if (receipt) {
      StrAppend(&out, "mechanism=", receipt->mechanism, "\n");
      StrAppend(&out, "charged=",
                dpcore::internal::FormatDouble(receipt->amount), "\n");
      StrAppend(&out, "kind=", BudgetKindName(receipt->kind), "\n");
    }
    if (selected) {
      StrAppend(&out, "selected=", *selected, "\n");
      StrAppend(&out, "label=", labels.empty() ? "" : labels[0], "\n");
    } else {
      std::vector<std::string> formatted;
      for (double v : values) {
        formatted.push_back(dpcore::internal::FormatDouble(v));
      }
      StrAppend(&out, "values=", dpcore::internal::StrJoin(formatted, ","),
                "\n");
      StrAppend(&out, "labels=", dpcore::internal::StrJoin(labels, ","), "\n");
    }
    StrAppend(&out, "remaining=", fmt::format("{:+.16e}", remaining), "\n");
    return out;
  }
};

inline std::string FormatBudgetStatus(const BudgetStatus& s) {
  using dpcore::internal::FormatDouble;
  return dpcore::internal::StrCat(
      "scope=", s.scope, "\nkind=", BudgetKindName(s.kind),
      "\nbudget=", FormatDouble(s.budget), "\nspent=", FormatDouble(s.spent),
      "\nremaining=", FormatDouble(s.remaining),
      "\nepsilon_equivalent=", FormatDouble(s.epsilon_equivalent),
      "\ndelta=", FormatDouble(s.delta), "\nalpha=", FormatDouble(s.alpha),
      "\npower_bound_spent=", FormatDouble(s.power_bound_spent),
      "\npower_bound_budget=", FormatDouble(s.power_bound_budget), "\n");
}

class QuerySession {
 public:
  // Starts a session: one accounted noisy count of the dataset size, at
  // startup_fraction of the scope budget (Laplace on pure scopes, Gaussian
  // on zCDP scopes). Fails, leaving no session, if that charge is denied.
  static absl::StatusOr<std::unique_ptr<QuerySession>> Open(
      std::string id, DatasetHandle dataset, Accountant& accountant,
      std::string scope, SessionOptions options, RandomSource& rng) {
    DPCORE_ASSIGN_OR_RETURN(BudgetScope s, accountant.Scope(scope));
    if (!(options.startup_fraction > 0 && options.startup_fraction < 1)) {
      return absl::InvalidArgumentError("startup fraction must be in (0, 1)");
    }
    double amount = options.startup_fraction * s.budget;
    DPCORE_ASSIGN_OR_RETURN(
        StatVector count,
        Aggregate(internal::HandleAccess::Rows(dataset), Count{}));
    PrivacyContext ctx{&accountant, scope, &rng, options.mechanism};
    ctx.options.discretize = false;
    absl::StatusOr<MechanismResult> n_hat =
        s.kind == BudgetKind::kZcdpRho ? GaussianMechanism(count, amount, ctx)
                                       : LaplaceMechanism(count, amount, ctx);
    if (!n_hat.ok()) return n_hat.status();
    return Resume(std::move(id), std::move(dataset), accountant,
                  std::move(scope), n_hat->values()[0], options);
  }

  // Rebuilds a session whose size estimate was released earlier.
  static absl::StatusOr<std::unique_ptr<QuerySession>> Resume(
      std::string id, DatasetHandle dataset, Accountant& accountant,
      std::string scope, double n_hat, SessionOptions options) {
    DPCORE_RETURN_IF_ERROR(accountant.Scope(scope).status());
    if (!std::isfinite(n_hat)) {
      return absl::InvalidArgumentError("size estimate must be finite");
    }
    if (options.xi_ns <= 0 || options.overhead_ns < 0 ||
        options.size_granularity == 0) {
      return absl::InvalidArgumentError("bad padding parameters");
    }
    return std::unique_ptr<QuerySession>(
        new QuerySession(std::move(id), std::move(dataset), accountant,
                         std::move(scope), n_hat, options));
  }

  const std::string& id() const { return id_; }
  const std::string& scope() const { return scope_; }
  const std::string& dataset_id() const { return dataset_.id(); }
  double n_hat() const { return n_hat_; }
  const SessionOptions& options() const { return options_; }
  std::uint64_t overruns() const { return overruns_; }

  // Predicate work normally runs directly; tests inject a cost model.
  void set_bounded_evaluator(BoundedEvaluator* e) { bounded_ = e; }

  // Padded schedule for a plan with the given predicate passes.
  std::int64_t Schedule(std::uint64_t passes) const {
    double n = std::ceil(std::fmax(n_hat_, 0.0));
    double g = static_cast<double>(options_.size_granularity);
    double records = std::fmax(g, std::ceil(n / g) * g);
    return options_.overhead_ns +
           static_cast<std::int64_t>(records * static_cast<double>(passes) *
                                     static_cast<double>(options_.xi_ns));
  }

  QueryResponse Run(const QueryRequest& request, Clock& clock,
                    RandomSource& rng) {
    std::lock_guard<std::mutex> lock(mu_);
    std::int64_t start = clock.NowNs();
    absl::StatusOr<TransformPlan> plan = ParsePlan(request.plan);
    std::int64_t schedule = Schedule(plan.ok() ? plan->PredicatePasses() : 1);

    QueryResponse response;
    absl::Status status = plan.status();
    if (plan.ok()) status = Execute(*plan, request, clock, rng, response);
    if (!status.ok()) {
      DevLog::Global().Append(dpcore::internal::StrCat(
          "session ", id_, ": ", std::string(status.message())));
      response = QueryResponse();
      response.code = std::string(
          status.code() == absl::StatusCode::kResourceExhausted
              ? kBudgetExceeded
              : kInvalidRequest);
    } else {
      response.ok = true;
    }
    response.remaining = accountant_.Remaining(scope_).value_or(0);

    std::int64_t deadline = start + schedule;
    if (clock.NowNs() > deadline) {
      ++overruns_;
      deadline = start + 2 * schedule;
    }
    clock.SleepUntil(deadline);
    response.elapsed_ns = clock.NowNs() - start;
    return response;
  }

  absl::StatusOr<BudgetStatus> Budget() const {
    return accountant_.Status(scope_, options_.status_alpha,
                              options_.status_delta);
  }

 private:
  QuerySession(std::string id, DatasetHandle dataset, Accountant& accountant,
               std::string scope, double n_hat, SessionOptions options)
      : id_(std::move(id)),
        dataset_(std::move(dataset)),
        accountant_(accountant),
        scope_(std::move(scope)),
        n_hat_(n_hat),
        options_(options) {}

  absl::Status Execute(const TransformPlan& plan, const QueryRequest& request,
                       Clock& clock, RandomSource& rng,
                       QueryResponse& response) {
    BoundedEvaluator& inner =
        bounded_ ? *bounded_ : DirectBoundedEvaluator::Default();
    PaddedEvaluator padded(clock, options_.xi_ns, inner);
    ExecutionContext exec{&rng, &padded};
    DPCORE_ASSIGN_OR_RETURN(
        StatVector v,
        ExecutePlan(internal::HandleAccess::Rows(dataset_), plan, exec));
    PrivacyContext ctx{&accountant_, scope_, &rng, options_.mechanism};
    const std::string& m = request.mechanism;
    auto take = [&](const MechanismResult& r) {
      response.values.assign(r.values().begin(), r.values().end());
      if (request.clamp_nonnegative) {
        response.values = ClampNonnegative(response.values);
      }
      response.labels = r.labels();
      response.receipt = r.receipt();
    };
    auto take_selection = [&](const SelectionResult& r) {
      response.selected = r.index();
      response.labels = {r.label()};
      response.receipt = r.receipt();
    };
    if (m == "laplace") {
      DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                              LaplaceMechanism(v, request.budget, ctx));
      take(r);
    } else if (m == "gaussian") {
      DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                              GaussianMechanism(v, request.budget, ctx));
      take(r);
    } else if (m == "noisy_histogram") {
      DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                              NoisyHistogram(v, request.budget, ctx));
      take(r);
    } else if (m == "report_noisy_max") {
      DPCORE_ASSIGN_OR_RETURN(SelectionResult r,
                              ReportNoisyMax(v, request.budget, ctx));
      take_selection(r);
    } else if (m == "exponential_mechanism") {
      if (v.l1_sensitivity() <= 0) {
        return absl::InvalidArgumentError("quality sensitivity is zero");
      }
      DPCORE_ASSIGN_OR_RETURN(
          SelectionResult r,
          ExponentialMechanism(v.values(), v.l1_sensitivity(), request.budget,
                               ctx, v.labels()));
      take_selection(r);
    } else {
      return absl::InvalidArgumentError(
          dpcore::internal::StrCat("unknown mechanism '", m, "'"));
    }
    return absl::OkStatus();
  }

  std::mutex mu_;
  std::string id_;
  DatasetHandle dataset_;
  Accountant& accountant_;
  std::string scope_;
  double n_hat_;
  SessionOptions options_;
  BoundedEvaluator* bounded_ = nullptr;
  std::uint64_t overruns_ = 0;
};

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_SESSION_H_
