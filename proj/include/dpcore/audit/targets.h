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

// Audit targets: the library's own mechanisms, the seeded-bug catalog and
// external commands, all packaged as MechanismUnderTest.
//
// Builtin queries run against the neighbor-suite tables: the first column is
// the wide-range attribute, the last column the binary one.

#ifndef DPCORE_AUDIT_TARGETS_H_
#define DPCORE_AUDIT_TARGETS_H_

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/audit/blackbox.h"
#include "dpcore/audit/seeded_bugs.h"
#include "dpcore/data_access.h"
#include "dpcore/internal/format.h"
#include "dpcore/mechanisms.h"
#include "dpcore/schema_io.h"

namespace dpcore {
namespace audit {

inline constexpr double kAuditGaussianDelta = 1e-6;

// rho whose (eps, delta) conversion rho + 2 sqrt(rho ln(1/delta)) is eps.
inline double RhoForEpsilon(double eps, double delta) {
  double l = std::log(1 / delta);
  double x = std::sqrt(l + eps) - std::sqrt(l);
  return x * x;
}

namespace internal {

// Accountant with effectively unlimited budget for repeated audit runs. The
// in-memory ledger is off; only the granted count is kept.
struct AuditHarness {
  std::unique_ptr<Accountant> accountant;
  MechanismOptions options;

  static std::shared_ptr<AuditHarness> Create() {
    auto h = std::make_shared<AuditHarness>();
    Accountant::Options opts;
    opts.retain_ledger = false;
    h->accountant = *Accountant::Create(
        {BudgetScope{"audit", BudgetKind::kPureEpsilon, 1e300, ""},
         BudgetScope{"audit_zcdp", BudgetKind::kZcdpRho, 1e300, ""}},
        opts);
    h->options.epsilon_floor = 0;
    return h;
  }

  PrivacyContext Context(RandomSource& rng, bool zcdp = false) {
    return PrivacyContext{accountant.get(), zcdp ? "audit_zcdp" : "audit",
                          &rng, options};
  }
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline absl::StatusOr<StatVector> CountOf(const Table& t) {
  return Aggregate(t, Count{});
}

inline absl::StatusOr<StatVector> SumOfFirst(const Table& t) {
  return Aggregate(t, Sum{t.schema().column(0).name()});
}

inline absl::StatusOr<StatVector> CountsByLast(const Table& t) {
  DPCORE_ASSIGN_OR_RETURN(
      GroupedTable g,
      GroupBy(t, {t.schema().column(t.schema().size() - 1).name()}));
  return Aggregate(g, Count{});
}

template <typename Fn>
double OrNaN(const Fn& fn) {
  auto r = fn();
  return r.ok() ? static_cast<double>(*r) : kNaN;
}

}  // namespace internal

inline std::vector<std::string> BuiltinTargetNames() {
  return {"laplace_count",        "laplace_sum",
          "noisy_histogram",      "report_noisy_max",
          "exponential_mechanism", "gaussian_count"};
}

inline std::vector<std::string> SeededBugNames() {
  return {"bug_half_scale_laplace", "bug_data_dependent_cells",
          "bug_tie_biased_noisy_max", "bug_cumulative_sum_exponential",
          "bug_accountant_bypass"};
}

inline absl::StatusOr<MechanismUnderTest> MakeTarget(std::string_view name) {
  auto h = internal::AuditHarness::Create();
  MechanismUnderTest m;
  m.name = std::string(name);
  using internal::OrNaN;
  if (name == "laplace_count") {
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountOf(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                LaplaceMechanism(v, eps, ctx));
        return r.values()[0];
      });
    };
  } else if (name == "laplace_sum") {
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::SumOfFirst(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                LaplaceMechanism(v, eps, ctx));
        return r.values()[0];
      });
    };
  } else if (name == "noisy_histogram") {
    // Outcome: the noisy cell for last-column value 0.
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(MechanismResult r,
                                NoisyHistogram(v, eps, ctx));
        return r.values()[0];
      });
    };
  } else if (name == "report_noisy_max") {
    m.kind = OutcomeKind::kIndex;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(SelectionResult r,
                                ReportNoisyMax(v, eps, ctx));
        return static_cast<double>(r.index());
      });
    };
  } else if (name == "exponential_mechanism") {
    m.kind = OutcomeKind::kIndex;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(
            SelectionResult r,
            ExponentialMechanism(v.values(), v.l1_sensitivity(), eps, ctx));
        return static_cast<double>(r.index());
      });
    };
  } else if (name == "gaussian_count") {
    // Tested against its (eps, delta) conversion.
    m.delta = kAuditGaussianDelta;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountOf(t));
        PrivacyContext ctx = h->Context(rng, /*zcdp=*/true);
        DPCORE_ASSIGN_OR_RETURN(
            MechanismResult r,
            GaussianMechanism(v, RhoForEpsilon(eps, kAuditGaussianDelta),
                              ctx));
        return r.values()[0];
      });
    };
  } else if (name == "bug_half_scale_laplace") {
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountOf(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(std::vector<double> r,
                                bugs::HalfScaleLaplace(v, eps, ctx));
        return r[0];
      });
    };
  } else if (name == "bug_data_dependent_cells") {
    // Outcome: how many cells were released.
    m.kind = OutcomeKind::kIndex;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(std::vector<double> r,
                                bugs::DataDependentHistogram(v, eps, ctx));
        return static_cast<double>(r.size());
      });
    };
  } else if (name == "bug_tie_biased_noisy_max") {
    m.kind = OutcomeKind::kIndex;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(std::size_t r,
                                bugs::TieBiasedNoisyMax(v, eps, ctx));
        return static_cast<double>(r);
      });
    };
  } else if (name == "bug_cumulative_sum_exponential") {
    m.kind = OutcomeKind::kIndex;
    m.run = [h](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountsByLast(t));
        PrivacyContext ctx = h->Context(rng);
        DPCORE_ASSIGN_OR_RETURN(
            std::size_t r,
            bugs::CumulativeSumExponential(v.values(), v.l1_sensitivity(),
                                           eps, ctx));
        return static_cast<double>(r);
      });
    };
  } else if (name == "bug_accountant_bypass") {
    m.run = [](const Table& t, double eps, RandomSource& rng) {
      return OrNaN([&]() -> absl::StatusOr<double> {
        DPCORE_ASSIGN_OR_RETURN(StatVector v, internal::CountOf(t));
        return bugs::BypassLaplace(v, eps, rng)[0];
      });
    };
  } else {
    return absl::NotFoundError(
        dpcore::internal::StrCat("unknown audit target '", name, "'"));
  }
  return m;
}

// Runs `command CSV EPS N` for a batch; the command prints N outcomes, one
// per line. The table is handed over as CSV with a header row.
inline MechanismUnderTest ExternalCommandTarget(std::string command,
                                                OutcomeKind kind,
                                                std::string scratch_dir) {
  MechanismUnderTest m;
  m.name = command;
  m.kind = kind;
  auto batch = [command, scratch_dir](const Table& t, double eps,
                                      std::size_t n, RandomSource&) {
    std::vector<double> out;
    std::string csv = scratch_dir + "/audit_input.csv";
    if (!WriteStringToFile(csv, FormatCsv(t)).ok()) return out;
    std::string cmd = dpcore::internal::StrCat(
        command, " '", csv, "' ", dpcore::internal::FormatDouble(eps), " ",
        n);
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return out;
    char line[128];
    while (out.size() < n && std::fgets(line, sizeof(line), pipe) != nullptr) {
      std::optional<double> v = dpcore::internal::ParseDouble(line);
      out.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
    }
    ::pclose(pipe);
    out.resize(n, std::numeric_limits<double>::quiet_NaN());
    return out;
  };
  m.run_batch = batch;
  m.run = [batch](const Table& t, double eps, RandomSource& rng) {
    return batch(t, eps, 1, rng)[0];
  };
  return m;
}

}  // namespace audit
}  // namespace dpcore

#endif  // DPCORE_AUDIT_TARGETS_H_
