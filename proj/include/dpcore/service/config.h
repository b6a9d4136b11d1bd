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

// Service configuration, read from JSON:
//
//   {
//     "state_dir": "dpcore_state",
//     "ledger_path": "dpcore_state/ledger.txt",
//     "socket_path": "dpcore_state/dpcore.sock",
//     "epsilon_floor": 0.001,
//     "padding_xi_ns": 0,            // 0: calibrate at startup
//     "overhead_ns": 1000000,
//     "size_granularity": 256,
//     "startup_fraction": 0.01,
//     "sharing": "per_group",        // or "global"
//     "global_scope": "global",
//     "budgets": [
//       {"id": "analysts", "kind": "pure_eps", "budget": 1.0,
//        "group": "analysts"}
//     ]
//   }
//
// Relative paths resolve against the config file's directory.

#ifndef DPCORE_SERVICE_CONFIG_H_
#define DPCORE_SERVICE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/internal/format.h"
#include "dpcore/schema_io.h"
#include "dpcore/status_macros.h"
#include "json.hpp"

namespace dpcore {
namespace service {

enum class SharingPolicy { kPerGroup, kGlobal };

struct ServiceConfig {
  std::string state_dir = "dpcore_state";
  std::string ledger_path;   // default: <state_dir>/ledger.txt
  std::string socket_path;   // default: <state_dir>/dpcore.sock
  double epsilon_floor = 1e-3;
  std::int64_t padding_xi_ns = 0;
  std::int64_t overhead_ns = 1'000'000;
  std::uint64_t size_granularity = 256;
  double startup_fraction = 0.01;
  SharingPolicy sharing = SharingPolicy::kPerGroup;
  std::string global_scope = "global";
  std::vector<BudgetScope> budgets;
};

// One shared pure-eps scope of 1.0, used when no config file is given.
inline ServiceConfig DefaultConfig() {
  ServiceConfig c;
  c.budgets.push_back(
      BudgetScope{"default", BudgetKind::kPureEpsilon, 1.0, ""});
  c.global_scope = "default";
  c.ledger_path = c.state_dir + "/ledger.txt";
  c.socket_path = c.state_dir + "/dpcore.sock";
  return c;
}

inline absl::StatusOr<ServiceConfig> ParseConfig(
    std::string_view text, const std::filesystem::path& base_dir = {}) {
  using nlohmann::json;
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false,
                       /*ignore_comments=*/true);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("config is not a JSON object");
  }
  ServiceConfig c;
  try {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return (path.is_relative() && !base_dir.empty() ? base_dir / path : path)
          .string();
    };
    c.state_dir = resolve(j.value("state_dir", c.state_dir));
    c.ledger_path = j.contains("ledger_path")
                        ? resolve(j["ledger_path"].get<std::string>())
                        : c.state_dir + "/ledger.txt";
    c.socket_path = j.contains("socket_path")
                        ? resolve(j["socket_path"].get<std::string>())
                        : c.state_dir + "/dpcore.sock";
    c.epsilon_floor = j.value("epsilon_floor", c.epsilon_floor);
    c.padding_xi_ns = j.value("padding_xi_ns", c.padding_xi_ns);
    c.overhead_ns = j.value("overhead_ns", c.overhead_ns);
    c.size_granularity = j.value("size_granularity", c.size_granularity);
    c.startup_fraction = j.value("startup_fraction", c.startup_fraction);
    std::string sharing = j.value("sharing", std::string("per_group"));
    if (sharing == "per_group") {
      c.sharing = SharingPolicy::kPerGroup;
    } else if (sharing == "global") {
      c.sharing = SharingPolicy::kGlobal;
    } else {
      return absl::InvalidArgumentError(
          "sharing must be \"per_group\" or \"global\"");
    }
    c.global_scope = j.value("global_scope", c.global_scope);
    if (!j.contains("budgets") || !j["budgets"].is_array() ||
        j["budgets"].empty()) {
      return absl::InvalidArgumentError("config needs a budgets list");
    }
    for (const json& b : j["budgets"]) {
      BudgetScope s;
      s.id = b.at("id").get<std::string>();
      std::string kind = b.value("kind", std::string("pure_eps"));
      std::optional<BudgetKind> k = ParseBudgetKind(kind);
      if (!k) {
        return absl::InvalidArgumentError(dpcore::internal::StrCat(
            "unknown budget kind '", kind, "'"));
      }
      s.kind = *k;
      s.budget = b.at("budget").get<double>();
      s.group = b.value("group", std::string());
      c.budgets.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        dpcore::internal::StrCat("config: ", e.what()));
  }
  if (c.sharing == SharingPolicy::kGlobal) {
    bool found = false;
    for (const BudgetScope& s : c.budgets) found |= s.id == c.global_scope;
    if (!found) {
      return absl::InvalidArgumentError(
          "global sharing needs global_scope to name a budget");
    }
  }
  if (c.padding_xi_ns < 0 || c.overhead_ns < 0 || c.size_granularity == 0) {
    return absl::InvalidArgumentError("bad padding parameters");
  }
  if (!(c.epsilon_floor >= 0)) {
    return absl::InvalidArgumentError("epsilon_floor must be nonnegative");
  }
  return c;
}

inline absl::StatusOr<ServiceConfig> LoadConfig(const std::string& path) {
  DPCORE_ASSIGN_OR_RETURN(std::string text, ReadFileToString(path));
  return ParseConfig(text, std::filesystem::path(path).parent_path());
}

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_CONFIG_H_
