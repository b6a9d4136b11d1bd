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

// Privacy budget accounting. All charges against all scopes pass through a
// single lock, so check-and-spend is indivisible and the ledger order is the
// order in which budget was actually spent.

#ifndef DPCORE_ACCOUNTANT_H_
#define DPCORE_ACCOUNTANT_H_

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"
#include "dpcore/matrix.h"
#include "dpcore/status_macros.h"

namespace dpcore {

enum class BudgetKind { kPureEpsilon, kZcdpRho };

inline std::string_view BudgetKindName(BudgetKind kind) {
  return kind == BudgetKind::kPureEpsilon ? "pure_eps" : "zcdp_rho";
}

inline std::optional<BudgetKind> ParseBudgetKind(std::string_view text) {
  if (text == "pure_eps" || text == "pure-eps") return BudgetKind::kPureEpsilon;
  if (text == "zcdp_rho" || text == "zcdp-rho") return BudgetKind::kZcdpRho;
  return std::nullopt;
}

struct BudgetScope {
  std::string id;
  BudgetKind kind = BudgetKind::kPureEpsilon;
  double budget = 0;
  // Empty for a scope shared by everyone; otherwise the owning group.
  std::string group;

  bool Admits(std::string_view requester_group) const {
    return group.empty() || group == requester_group;
  }
};

struct PrivacyCharge {
  std::uint64_t sequence = 0;
  std::string scope;
  std::string mechanism;
  BudgetKind kind = BudgetKind::kPureEpsilon;
  double amount = 0;
  std::int64_t wall_time_ns = 0;
};

struct DeniedCharge {
  std::string scope;
  std::string mechanism;
  BudgetKind kind = BudgetKind::kPureEpsilon;
  double amount = 0;
  std::int64_t wall_time_ns = 0;
};

// One record per line: key=value pairs separated by spaces. Amounts use the
// shortest decimal that parses back to the same double.
inline std::string FormatCharge(const PrivacyCharge& c) {
  return internal::StrCat("seq=", c.sequence, " scope=", c.scope,
                          " mechanism=", c.mechanism,
                          " kind=", BudgetKindName(c.kind),
                          " amount=", internal::FormatDouble(c.amount),
                          " wall_ns=", c.wall_time_ns);
}

inline absl::StatusOr<PrivacyCharge> ParseCharge(std::string_view line) {
  PrivacyCharge c;
  int seen = 0;
  for (std::string_view field : internal::Split(line, " \t\r", true)) {
    std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) {
      return absl::DataLossError(
          internal::StrCat("ledger field without '=': ", field));
    }
    std::string_view key = field.substr(0, eq);
    std::string_view value = field.substr(eq + 1);
    if (key == "seq") {
      std::optional<std::int64_t> v = internal::ParseInt64(value);
      if (!v || *v < 0) return absl::DataLossError("bad ledger sequence");
      c.sequence = static_cast<std::uint64_t>(*v);
    } else if (key == "scope") {
      c.scope = std::string(value);
    } else if (key == "mechanism") {
      c.mechanism = std::string(value);
    } else if (key == "kind") {
      std::optional<BudgetKind> k = ParseBudgetKind(value);
      if (!k) return absl::DataLossError("bad ledger kind");
      c.kind = *k;
    } else if (key == "amount") {
      std::optional<double> v = internal::ParseDouble(value);
      if (!v || !(*v >= 0)) return absl::DataLossError("bad ledger amount");
      c.amount = *v;
    } else if (key == "wall_ns") {
      std::optional<std::int64_t> v = internal::ParseInt64(value);
      if (!v) return absl::DataLossError("bad ledger time");
      c.wall_time_ns = *v;
    } else {
      continue;
    }
    ++seen;
  }
  if (seen < 6) return absl::DataLossError("truncated ledger record");
  return c;
}

inline absl::StatusOr<std::vector<PrivacyCharge>> ParseLedger(
    std::string_view text) {
  std::vector<PrivacyCharge> out;
  for (std::string_view line : internal::Split(text, "\n", true)) {
    if (internal::StripWhitespace(line).empty()) continue;
    DPCORE_ASSIGN_OR_RETURN(PrivacyCharge c, ParseCharge(line));
    out.push_back(std::move(c));
  }
  return out;
}

// Durable destination for granted charges. Write must not return until the
// record is flushed.
class LedgerSink {
 public:
  virtual ~LedgerSink() = default;
  virtual absl::Status Write(const PrivacyCharge& charge) = 0;
};

class FileLedgerSink : public LedgerSink {
 public:
  static absl::StatusOr<std::unique_ptr<FileLedgerSink>> Open(
      const std::string& path) {
    // Created owner-only; the ledger reveals what was asked of whom.
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                    0600);
    std::FILE* file = fd < 0 ? nullptr : ::fdopen(fd, "a");
    if (file == nullptr) {
      if (fd >= 0) ::close(fd);
      return absl::UnavailableError(
          internal::StrCat("cannot open ledger '", path, "'"));
    }
    return std::unique_ptr<FileLedgerSink>(new FileLedgerSink(file));
  }

  ~FileLedgerSink() override { std::fclose(file_); }

  absl::Status Write(const PrivacyCharge& charge) override {
    std::string line = FormatCharge(charge);
    line.push_back('\n');
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
        std::fflush(file_) != 0) {
      return absl::UnavailableError("ledger write failed");
    }
    return absl::OkStatus();
  }

 private:
  explicit FileLedgerSink(std::FILE* file) : file_(file) {}
  std::FILE* file_;
};

struct BudgetStatus {
  std::string scope;
  BudgetKind kind = BudgetKind::kPureEpsilon;
  double budget = 0;
  double spent = 0;
  double remaining = 0;
  // For pure scopes, the spent budget itself; for zCDP scopes, the
  // (eps, delta) conversion rho + 2 sqrt(rho ln(1/delta)).
  double epsilon_equivalent = 0;
  double delta = 0;
  // Best attainable true-positive rate of a test with false-positive rate
  // alpha that tries to tell whether one person is in the data.
  double alpha = 0.05;
  double power_bound_spent = 0;
  double power_bound_budget = 0;
};

// min(1, e^eps * alpha).
inline double PowerBound(double epsilon, double alpha) {
  return std::fmin(1.0, std::exp(epsilon) * alpha);
}

inline double ZcdpToEpsilon(double rho, double delta) {
  if (rho <= 0) return 0;
  return rho + 2 * std::sqrt(rho * std::log(1 / delta));
}

class Accountant {
 public:
  struct Options {
    // Keep every granted charge in memory. Disable for long-running stress
    // workloads that use a sink instead.
    bool retain_ledger = true;
    LedgerSink* sink = nullptr;  // not owned
  };

  static absl::StatusOr<std::unique_ptr<Accountant>> Create(
      std::vector<BudgetScope> scopes, Options options) {
    auto accountant = std::unique_ptr<Accountant>(new Accountant(options));
    for (BudgetScope& s : scopes) {
      if (s.id.empty()) {
        return absl::InvalidArgumentError("budget scope needs an id");
      }
      if (!std::isfinite(s.budget) || s.budget < 0) {
        return absl::InvalidArgumentError(internal::StrCat(
            "budget of scope '", s.id, "' must be finite and nonnegative"));
      }
      std::string id = s.id;
      if (!accountant->scopes_.emplace(id, State{std::move(s), 0.0}).second) {
        return absl::InvalidArgumentError(
            internal::StrCat("scope '", id, "' declared twice"));
      }
    }
    return accountant;
  }

  static absl::StatusOr<std::unique_ptr<Accountant>> Create(
      std::vector<BudgetScope> scopes) {
    return Create(std::move(scopes), Options());
  }

  // Rebuilds spent totals from a ledger. The records are replayed in order
  // with the same arithmetic Charge uses, so the totals come back bit-exact.
  absl::Status Restore(std::span<const PrivacyCharge> ledger) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const PrivacyCharge& c : ledger) {
      auto it = scopes_.find(c.scope);
      if (it == scopes_.end()) {
        return absl::DataLossError(internal::StrCat(
            "ledger references unknown scope '", c.scope, "'"));
      }
      if (it->second.scope.kind != c.kind) {
        return absl::DataLossError("ledger kind does not match its scope");
      }
      it->second.spent += c.amount;
      next_sequence_ = std::max(next_sequence_, c.sequence + 1);
      ++granted_;
      if (options_.retain_ledger) ledger_.push_back(c);
    }
    for (const auto& [id, state] : scopes_) {
      if (state.spent > state.scope.budget) {
        return absl::DataLossError(internal::StrCat(
            "ledger spends more than the budget of scope '", id, "'"));
      }
    }
    return absl::OkStatus();
  }

  // Atomically spends `amount` from the scope if it fits. Denials spend
  // nothing and carry the same message however far over the request was.
  absl::StatusOr<PrivacyCharge> Charge(std::string_view scope_id,
                                       double amount,
                                       std::string_view mechanism,
                                       BudgetKind kind) {
    if (!std::isfinite(amount) || amount < 0) {
      return absl::InvalidArgumentError(
          "privacy charge must be finite and nonnegative");
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto it = scopes_.find(std::string(scope_id));
    if (it == scopes_.end()) {
      return absl::NotFoundError(
          internal::StrCat("unknown budget scope '", scope_id, "'"));
    }
    State& state = it->second;
    if (state.scope.kind != kind) {
      return absl::FailedPreconditionError(internal::StrCat(
          "mechanism '", mechanism, "' charges ", BudgetKindName(kind),
          " but scope '", scope_id, "' is ", BudgetKindName(state.scope.kind)));
    }
    std::int64_t now = WallTimeNs();
    double next = state.spent + amount;
    if (!(next <= state.scope.budget)) {
      denied_.push_back(DeniedCharge{std::string(scope_id),
                                     std::string(mechanism), kind, amount,
                                     now});
      return absl::ResourceExhaustedError("privacy budget exceeded");
    }
    PrivacyCharge charge{next_sequence_, std::string(scope_id),
                         std::string(mechanism), kind, amount, now};
    if (options_.sink != nullptr) {
      DPCORE_RETURN_IF_ERROR(options_.sink->Write(charge));
    }
    state.spent = next;
    ++next_sequence_;
    ++granted_;
    if (options_.retain_ledger) ledger_.push_back(charge);
    return charge;
  }

  absl::StatusOr<double> Remaining(std::string_view scope_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(const State* state, Find(scope_id));
    return state->scope.budget - state->spent;
  }

  absl::StatusOr<double> Spent(std::string_view scope_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(const State* state, Find(scope_id));
    return state->spent;
  }

  absl::StatusOr<BudgetScope> Scope(std::string_view scope_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(const State* state, Find(scope_id));
    return state->scope;
  }

  absl::StatusOr<BudgetStatus> Status(std::string_view scope_id,
                                      double alpha = 0.05,
                                      double delta = 1e-6) const {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(const State* state, Find(scope_id));
    BudgetStatus s;
    s.scope = state->scope.id;
    s.kind = state->scope.kind;
    s.budget = state->scope.budget;
    s.spent = state->spent;
    s.remaining = state->scope.budget - state->spent;
    s.alpha = alpha;
    double eps_budget = s.budget;
    if (s.kind == BudgetKind::kZcdpRho) {
      s.delta = delta;
      s.epsilon_equivalent = ZcdpToEpsilon(s.spent, delta);
      eps_budget = ZcdpToEpsilon(s.budget, delta);
    } else {
      s.epsilon_equivalent = s.spent;
    }
    s.power_bound_spent = PowerBound(s.epsilon_equivalent, alpha);
    s.power_bound_budget = PowerBound(eps_budget, alpha);
    return s;
  }

  std::vector<std::string> ScopeIds() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, state] : scopes_) ids.push_back(id);
    return ids;
  }

  // Granted charges in order (empty if retain_ledger is off).
  std::vector<PrivacyCharge> Ledger() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ledger_;
  }

  std::uint64_t granted_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return granted_;
  }

  std::vector<DeniedCharge> Denials() const {
    std::lock_guard<std::mutex> lock(mu_);
    return denied_;
  }

 private:
  struct State {
    BudgetScope scope;
    double spent = 0;
  };

  explicit Accountant(Options options) : options_(options) {}

  absl::StatusOr<const State*> Find(std::string_view scope_id) const {
    auto it = scopes_.find(std::string(scope_id));
    if (it == scopes_.end()) {
      return absl::NotFoundError(
          internal::StrCat("unknown budget scope '", scope_id, "'"));
    }
    return &it->second;
  }

  static std::int64_t WallTimeNs() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  Options options_;
  mutable std::mutex mu_;
  std::map<std::string, State> scopes_;
  std::vector<PrivacyCharge> ledger_;
  std::vector<DeniedCharge> denied_;
  std::uint64_t next_sequence_ = 1;
  std::uint64_t granted_ = 0;
};

// Total spent per scope, replayed in ledger order.
inline std::map<std::string, double> ReplaySpent(
    std::span<const PrivacyCharge> ledger) {
  std::map<std::string, double> spent;
  for (const PrivacyCharge& c : ledger) spent[c.scope] += c.amount;
  return spent;
}

// Basic composition over a sequence of pure-eps charges, including
// sequences whose parameters were chosen adaptively.
inline absl::StatusOr<double> SequenceEpsilon(
    std::span<const PrivacyCharge> charges) {
  double total = 0;
  for (const PrivacyCharge& c : charges) {
    if (c.kind != BudgetKind::kPureEpsilon) {
      return absl::InvalidArgumentError(
          "sequence_epsilon needs pure-eps charges only");
    }
    total += c.amount;
  }
  return total;
}

inline absl::StatusOr<double> SequenceEpsilon(std::span<const double> eps) {
  double total = 0;
  for (double e : eps) total += e;
  return total;
}

// Exact eps of releasing Q·x + Lap(alpha) for histogram x: the largest column
// L1 norm of diag(1/alpha)·Q.
inline absl::StatusOr<double> LinearQueryEpsilon(
    const Matrix& q, std::span<const double> alphas) {
  if (alphas.size() != q.rows()) {
    return absl::InvalidArgumentError(internal::StrCat(
        "dimension mismatch: ", q.rows(), " queries but ", alphas.size(),
        " scales"));
  }
  for (double a : alphas) {
    if (!(a > 0) || !std::isfinite(a)) {
      return absl::InvalidArgumentError("Laplace scales must be positive");
    }
  }
  double best = 0;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    double column = 0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
      column += std::fabs(q(i, j)) / alphas[i];
    }
    best = std::fmax(best, column);
  }
  return best;
}

// True iff the claimed total is at least the exact eps. The slack covers
// only rounding in the two summation orders.
inline bool VerifyAccounting(double claimed, double ell) {
  return claimed >= ell * (1 - 8 * std::numeric_limits<double>::epsilon());
}

inline bool VerifyAccounting(std::span<const PrivacyCharge> charges,
                             double ell) {
  absl::StatusOr<double> claimed = SequenceEpsilon(charges);
  return claimed.ok() && VerifyAccounting(*claimed, ell);
}

}  // namespace dpcore

#endif  // DPCORE_ACCOUNTANT_H_
