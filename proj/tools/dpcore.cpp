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

// dpcore command-line tool.
//
//   dpcore [--config FILE] ingest --csv F --schema S
//   dpcore [--config FILE] session --dataset ID [--scope S] [--group G]
//   dpcore [--config FILE] query --session ID --plan FILE --mechanism NAME
//                                --eps X [--clamp-nonnegative]
//   dpcore [--config FILE] budget --session ID
//   dpcore audit (--target NAME | --command CMD) [--eps 1,2] [--report F]
//   dpcore serve --config FILE

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "dpcore/audit/blackbox.h"
#include "dpcore/audit/report.h"
#include "dpcore/audit/targets.h"
#include "dpcore/internal/format.h"
#include "dpcore/random_source.h"
#include "dpcore/schema_io.h"
#include "dpcore/service/clock.h"
#include "dpcore/service/config.h"
#include "dpcore/service/server.h"
#include "dpcore/service/service.h"

namespace {

using ::dpcore::service::Service;
using ::dpcore::service::ServiceConfig;

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status.message() << "\n";
  return 1;
}

absl::StatusOr<ServiceConfig> ResolveConfig(const std::string& path) {
  if (!path.empty()) return dpcore::service::LoadConfig(path);
  if (const char* env = std::getenv("DPCORE_CONFIG"); env && *env) {
    return dpcore::service::LoadConfig(env);
  }
  return dpcore::service::DefaultConfig();
}

struct AuditFlags {
  std::string target;
  std::string command;
  std::string kind = "real";
  std::string suite = "standard";
  std::vector<double> eps = {1.0};
  std::size_t n_search = 50000;
  std::size_t n_test = 100000;
  int repetitions = 50;
  unsigned workers = 1;
  std::string report;
  std::uint64_t seed = 0;
  bool list = false;
};

int RunAudit(const AuditFlags& f) {
  namespace audit = dpcore::audit;
  if (f.list) {
    for (const std::string& n : audit::BuiltinTargetNames()) {
      std::cout << n << "\n";
    }
    for (const std::string& n : audit::SeededBugNames()) {
      std::cout << n << "\n";
    }
    return 0;
  }
  if (f.target.empty() == f.command.empty()) {
    std::cerr << "error: give exactly one of --target and --command\n";
    return 1;
  }
  audit::MechanismUnderTest m;
  if (!f.target.empty()) {
    absl::StatusOr<audit::MechanismUnderTest> t = audit::MakeTarget(f.target);
    if (!t.ok()) return Fail(t.status());
    m = std::move(*t);
  } else {
    std::filesystem::path scratch =
        std::filesystem::temp_directory_path() /
        fmt::format("dpcore-audit-{}", ::getpid());
    std::filesystem::create_directories(scratch);
    m = audit::ExternalCommandTarget(
        f.command,
        f.kind == "index" ? audit::OutcomeKind::kIndex
                          : audit::OutcomeKind::kReal,
        scratch.string());
  }
  dpcore::Schema schema = f.suite == "draft" ? audit::DraftSuiteSchema()
                                             : audit::StandardSuiteSchema();
  absl::StatusOr<std::vector<audit::NeighborPair>> pairs =
      audit::DefaultNeighborSuite(schema);
  if (!pairs.ok()) return Fail(pairs.status());

  audit::BatteryOptions options;
  options.n_search = f.n_search;
  options.n_test = f.n_test;
  options.repetitions = f.repetitions;
  options.workers = f.workers;
  dpcore::RandomSource root = dpcore::RandomSource::FromOsEntropy();
  std::string report;
  bool violation = false;
  for (double eps : f.eps) {
    audit::BatteryResult r = audit::RunBattery(m, *pairs, eps, options, root);
    violation |= r.violation;
    if (!report.empty()) report += "\n";
    report += audit::FormatBatteryReport(r, options);
  }
  if (f.report.empty()) {
    std::cout << report;
  } else {
    absl::Status s = dpcore::WriteStringToFile(f.report, report);
    if (!s.ok()) return Fail(s);
    std::cout << "violation=" << (violation ? "true" : "false") << "\n";
  }
  return violation ? 2 : 0;
}

dpcore::service::SocketServer* g_server = nullptr;

void OnSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpcore: differentially private queries, accounting, audits"};
  app.require_subcommand(1);
  app.fallthrough();  // --config may also follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path,
                 "Service config (JSON); default $DPCORE_CONFIG or built-in");

  std::string csv, schema;
  CLI::App* ingest = app.add_subcommand("ingest", "Register a dataset");
  ingest->add_option("--csv", csv, "CSV file with a header row")->required();
  ingest->add_option("--schema", schema, "Schema sidecar")->required();

  std::string dataset, scope, group;
  CLI::App* session = app.add_subcommand("session", "Open a query session");
  session->add_option("--dataset", dataset, "Dataset handle")->required();
  session->add_option("--scope", scope, "Budget scope");
  session->add_option("--group", group, "Requester group");

  std::string session_id, plan_path, mechanism;
  double eps = 0;
  bool clamp = false;
  CLI::App* query = app.add_subcommand("query", "Run a query in a session");
  query->add_option("--session", session_id, "Session id")->required();
  query->add_option("--plan", plan_path, "Plan file")->required();
  query->add_option("--mechanism", mechanism,
                    "laplace, gaussian, noisy_histogram, report_noisy_max or "
                    "exponential_mechanism")
      ->required();
  query->add_option("--eps", eps, "Budget to spend (rho for gaussian)")
      ->required();
  query->add_flag("--clamp-nonnegative", clamp,
                  "Clamp released values at zero");

  CLI::App* budget = app.add_subcommand("budget", "Show a session's budget");
  budget->add_option("--session", session_id, "Session id")->required();

  AuditFlags audit_flags;
  CLI::App* audit = app.add_subcommand("audit", "Black-box privacy audit");
  audit->add_option("--target", audit_flags.target, "Built-in target name");
  audit->add_option("--command", audit_flags.command,
                    "External command: CMD CSV EPS N prints N outcomes");
  audit->add_option("--kind", audit_flags.kind, "Outcome kind of --command")
      ->check(CLI::IsMember({"real", "index"}));
  audit->add_option("--suite", audit_flags.suite, "Neighbor suite")
      ->check(CLI::IsMember({"standard", "draft"}));
  audit->add_option("--eps", audit_flags.eps, "Claimed eps values")
      ->delimiter(',');
  audit->add_option("--n-search", audit_flags.n_search, "Search-phase runs");
  audit->add_option("--n-test", audit_flags.n_test, "Test-phase runs");
  audit->add_option("--repetitions", audit_flags.repetitions,
                    "p-value repetitions");
  audit->add_option("--workers", audit_flags.workers, "Parallel workers");
  audit->add_option("--report", audit_flags.report, "Report path");
  audit->add_flag("--list", audit_flags.list, "List built-in targets");

  CLI::App* serve = app.add_subcommand("serve", "Serve the socket protocol");

  CLI11_PARSE(app, argc, argv);

  if (audit->parsed()) return RunAudit(audit_flags);

  absl::StatusOr<ServiceConfig> config = ResolveConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  dpcore::service::SteadyClock clock;
  absl::StatusOr<std::unique_ptr<Service>> service =
      Service::Create(*config, clock);
  if (!service.ok()) return Fail(service.status());
  Service& svc = **service;

  if (ingest->parsed()) {
    absl::StatusOr<std::string> id = svc.IngestDataset(csv, schema);
    if (!id.ok()) return Fail(id.status());
    std::cout << "dataset=" << *id << "\n";
    return 0;
  }
  if (session->parsed()) {
    if (scope.empty()) scope = config->global_scope;
    absl::StatusOr<std::string> id = svc.OpenSession(dataset, scope, group);
    if (!id.ok()) return Fail(id.status());
    std::cout << "session=" << *id << "\n";
    return 0;
  }
  if (query->parsed()) {
    dpcore::service::QueryRequest request;
    absl::StatusOr<std::string> plan = dpcore::ReadFileToString(plan_path);
    if (!plan.ok()) return Fail(plan.status());
    request.plan = *plan;
    request.mechanism = mechanism;
    request.budget = eps;
    request.clamp_nonnegative = clamp;
    dpcore::service::QueryResponse r = svc.Query(session_id, request);
    std::cout << r.Serialize();
    return r.ok ? 0 : 1;
  }
  if (budget->parsed()) {
    absl::StatusOr<dpcore::BudgetStatus> s = svc.Budget(session_id);
    if (!s.ok()) return Fail(s.status());
    std::cout << dpcore::service::FormatBudgetStatus(*s);
    return 0;
  }
  if (serve->parsed()) {
    dpcore::service::SocketServer server(svc);
    absl::Status s = server.Listen(config->socket_path);
    if (!s.ok()) return Fail(s);
    g_server = &server;
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    std::cerr << "listening on " << config->socket_path << "\n";
    server.Serve();
    return 0;
  }
  return 0;
}
