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

// A service instance: accountant restored from the durable ledger, dataset
// registry, open sessions. The CLI builds one per command; the socket
// server keeps one alive.
//
// State on disk, under state_dir:
//   registry.json    dataset handles and sessions (with their released n̂)
//   datasets/        private copies of ingested CSVs and schemas
//   dev.log          developer diagnostics, owner-only permissions

#ifndef DPCORE_SERVICE_SERVICE_H_
#define DPCORE_SERVICE_SERVICE_H_

#include <sys/stat.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/accountant.h"
#include "dpcore/internal/format.h"
#include "dpcore/random_source.h"
#include "dpcore/relational.h"
#include "dpcore/schema_io.h"
#include "dpcore/service/clock.h"
#include "dpcore/service/config.h"
#include "dpcore/service/padding.h"
#include "dpcore/service/session.h"
#include "dpcore/status_macros.h"
#include "json.hpp"

namespace dpcore {
namespace service {

class Service {
 public:
  static absl::StatusOr<std::unique_ptr<Service>> Create(ServiceConfig config,
                                                         Clock& clock) {
    std::error_code ec;
    std::filesystem::create_directories(
        std::filesystem::path(config.state_dir) / "datasets", ec);
    if (ec) {
      return absl::UnavailableError(dpcore::internal::StrCat(
          "cannot create state directory '", config.state_dir, "'"));
    }
    auto service = std::unique_ptr<Service>(new Service(std::move(config),
                                                        clock));
    DPCORE_RETURN_IF_ERROR(service->Load());
    return service;
  }

  ~Service() { FlushDevLog(); }

  const ServiceConfig& config() const { return config_; }
  Accountant& accountant() { return *accountant_; }
  std::int64_t xi_ns() const { return xi_ns_; }

  // Copies the files into the state directory and registers a handle. The
  // result names the handle only.
  absl::StatusOr<std::string> IngestDataset(const std::string& csv_path,
                                            const std::string& schema_path) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string id = NewId("ds");
    std::filesystem::path dir =
        std::filesystem::path(config_.state_dir) / "datasets";
    std::string csv_copy = (dir / (id + ".csv")).string();
    std::string schema_copy = (dir / (id + ".schema")).string();
    DPCORE_ASSIGN_OR_RETURN(DatasetHandle handle,
                            Ingest(id, csv_path, schema_path));
    DPCORE_ASSIGN_OR_RETURN(std::string csv_text, ReadFileToString(csv_path));
    DPCORE_ASSIGN_OR_RETURN(std::string schema_text,
                            ReadFileToString(schema_path));
    DPCORE_RETURN_IF_ERROR(WritePrivate(csv_copy, csv_text));
    DPCORE_RETURN_IF_ERROR(WritePrivate(schema_copy, schema_text));
    datasets_.emplace(id, DatasetRecord{csv_copy, schema_copy});
    handles_.emplace(id, std::move(handle));
    DPCORE_RETURN_IF_ERROR(SaveRegistry());
    return id;
  }

  // Opens a session on `scope` for a requester in `group`. Under global
  // sharing every session lands on the global scope.
  absl::StatusOr<std::string> OpenSession(const std::string& dataset_id,
                                          std::string scope,
                                          const std::string& group) {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(DatasetHandle handle, Handle(dataset_id));
    if (config_.sharing == SharingPolicy::kGlobal) {
      scope = config_.global_scope;
    }
    DPCORE_ASSIGN_OR_RETURN(BudgetScope s, accountant_->Scope(scope));
    if (!s.Admits(group)) {
      return absl::PermissionDeniedError(dpcore::internal::StrCat(
          "scope '", scope, "' belongs to another group"));
    }
    std::string id = NewId("s");
    RandomSource rng = rng_.Derive();
    DPCORE_ASSIGN_OR_RETURN(
        std::unique_ptr<QuerySession> session,
        QuerySession::Open(id, std::move(handle), *accountant_, scope,
                           Options(xi_ns_), rng));
    sessions_.emplace(id, SessionRecord{dataset_id, scope, session->n_hat(),
                                        xi_ns_});
    live_.try_emplace(id, std::move(session), std::move(rng));
    DPCORE_RETURN_IF_ERROR(SaveRegistry());
    return id;
  }

  // Unknown sessions produce an invalid_request response, not an error.
  QueryResponse Query(const std::string& session_id,
                      const QueryRequest& request) {
    Live* live = nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      absl::StatusOr<Live*> l = Session(session_id);
      if (!l.ok()) {
        QueryResponse r;
        r.code = std::string(kInvalidRequest);
        return r;
      }
      live = *l;
    }
    std::lock_guard<std::mutex> session_lock(live->mu);
    return live->session->Run(request, clock_, live->rng);
  }

  absl::StatusOr<BudgetStatus> Budget(const std::string& session_id) {
    std::lock_guard<std::mutex> lock(mu_);
    DPCORE_ASSIGN_OR_RETURN(Live * live, Session(session_id));
    return live->session->Budget();
  }

  // Moves developer-log entries to <state_dir>/dev.log.
  void FlushDevLog() {
    std::vector<std::string> entries = DevLog::Global().Drain();
    if (entries.empty()) return;
    std::string path =
        (std::filesystem::path(config_.state_dir) / "dev.log").string();
    std::string text;
    for (const std::string& e : entries) {
      dpcore::internal::StrAppend(&text, e, "\n");
    }
    (void)AppendPrivate(path, text);
  }

 private:
  struct DatasetRecord {
    std::string csv;
    std::string schema;
  };
  struct SessionRecord {
    std::string dataset;
    std::string scope;
    double n_hat = 0;
    std::int64_t xi_ns = 0;
  };
  struct Live {
    std::unique_ptr<QuerySession> session;
    RandomSource rng;
    std::mutex mu;
    Live(std::unique_ptr<QuerySession> s, RandomSource r)
        : session(std::move(s)), rng(std::move(r)) {}
  };

  Service(ServiceConfig config, Clock& clock)
      : config_(std::move(config)),
        clock_(clock),
        rng_(RandomSource::FromOsEntropy()) {}

  SessionOptions Options(std::int64_t xi) const {
    SessionOptions o;
    o.startup_fraction = config_.startup_fraction;
    o.xi_ns = xi;
    o.overhead_ns = config_.overhead_ns;
    o.size_granularity = config_.size_granularity;
    o.mechanism.epsilon_floor = config_.epsilon_floor;
    return o;
  }

  std::string RegistryPath() const {
    return (std::filesystem::path(config_.state_dir) / "registry.json")
        .string();
  }

  std::string NewId(std::string_view prefix) {
    return fmt::format("{}-{:016x}", prefix, rng_.NextU64());
  }

  absl::Status Load() {
    xi_ns_ = config_.padding_xi_ns > 0 ? config_.padding_xi_ns
                                       : CalibrateXi(calibration_clock_);
    std::string ledger_text;
    if (std::filesystem::exists(config_.ledger_path)) {
      DPCORE_ASSIGN_OR_RETURN(ledger_text,
                              ReadFileToString(config_.ledger_path));
    }
    DPCORE_ASSIGN_OR_RETURN(std::vector<PrivacyCharge> ledger,
                            ParseLedger(ledger_text));
    DPCORE_ASSIGN_OR_RETURN(sink_, FileLedgerSink::Open(config_.ledger_path));
    Accountant::Options options;
    options.sink = sink_.get();
    DPCORE_ASSIGN_OR_RETURN(accountant_,
                            Accountant::Create(config_.budgets, options));
    DPCORE_RETURN_IF_ERROR(accountant_->Restore(ledger));

    if (!std::filesystem::exists(RegistryPath())) return absl::OkStatus();
    DPCORE_ASSIGN_OR_RETURN(std::string text, ReadFileToString(RegistryPath()));
    using nlohmann::json;
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) return absl::DataLossError("registry is corrupt");
    try {
      const json datasets = j.value("datasets", json::object());
      const json sessions = j.value("sessions", json::object());
      for (const auto& [id, d] : datasets.items()) {
        datasets_.emplace(id, DatasetRecord{d.at("csv"), d.at("schema")});
      }
      for (const auto& [id, s] : sessions.items()) {
        sessions_.emplace(id, SessionRecord{s.at("dataset"), s.at("scope"),
                                            s.at("n_hat"), s.at("xi_ns")});
      }
    } catch (const json::exception&) {
      return absl::DataLossError("registry is corrupt");
    }
    return absl::OkStatus();
  }

  absl::Status SaveRegistry() {
    using nlohmann::json;
    json j;
    j["datasets"] = json::object();
    j["sessions"] = json::object();
    for (const auto& [id, d] : datasets_) {
      j["datasets"][id] = {{"csv", d.csv}, {"schema", d.schema}};
    }
    for (const auto& [id, s] : sessions_) {
      j["sessions"][id] = {{"dataset", s.dataset},
                           {"scope", s.scope},
                           {"n_hat", s.n_hat},
                           {"xi_ns", s.xi_ns}};
    }
    std::string tmp = RegistryPath() + ".tmp";
    DPCORE_RETURN_IF_ERROR(WritePrivate(tmp, j.dump(2) + "\n"));
    std::error_code ec;
    std::filesystem::rename(tmp, RegistryPath(), ec);
    if (ec) return absl::UnavailableError("cannot replace registry");
    return absl::OkStatus();
  }

  absl::StatusOr<DatasetHandle> Handle(const std::string& id) {
    auto h = handles_.find(id);
    if (h != handles_.end()) return h->second;
    auto d = datasets_.find(id);
    if (d == datasets_.end()) {
      return absl::NotFoundError(
          dpcore::internal::StrCat("unknown dataset '", id, "'"));
    }
    DPCORE_ASSIGN_OR_RETURN(DatasetHandle handle,
                            Ingest(id, d->second.csv, d->second.schema));
    handles_.emplace(id, handle);
    return handle;
  }

  absl::StatusOr<Live*> Session(const std::string& id) {
    auto l = live_.find(id);
    if (l != live_.end()) return &l->second;
    auto s = sessions_.find(id);
    if (s == sessions_.end()) {
      return absl::NotFoundError(
          dpcore::internal::StrCat("unknown session '", id, "'"));
    }
    DPCORE_ASSIGN_OR_RETURN(DatasetHandle handle, Handle(s->second.dataset));
    DPCORE_ASSIGN_OR_RETURN(
        std::unique_ptr<QuerySession> session,
        QuerySession::Resume(id, std::move(handle), *accountant_,
                             s->second.scope, s->second.n_hat,
                             Options(s->second.xi_ns)));
    auto [it, inserted] =
        live_.try_emplace(id, std::move(session), rng_.Derive());
    (void)inserted;
    return &it->second;
  }

  static absl::Status WritePrivate(const std::string& path,
                                   const std::string& text) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    DPCORE_RETURN_IF_ERROR(AppendPrivate(path, text));
    return absl::OkStatus();
  }

  static absl::Status AppendPrivate(const std::string& path,
                                    const std::string& text) {
    mode_t old = ::umask(077);
    std::FILE* f = std::fopen(path.c_str(), "a");
    ::umask(old);
    if (f == nullptr) {
      return absl::UnavailableError(
          dpcore::internal::StrCat("cannot write '", path, "'"));
    }
    bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    ok &= std::fclose(f) == 0;
    return ok ? absl::OkStatus() : absl::UnavailableError("write failed");
  }

  std::mutex mu_;
  ServiceConfig config_;
  Clock& clock_;
  SteadyClock calibration_clock_;
  RandomSource rng_;
  std::int64_t xi_ns_ = 0;
  std::unique_ptr<FileLedgerSink> sink_;
  std::unique_ptr<Accountant> accountant_;
  std::map<std::string, DatasetRecord> datasets_;
  std::map<std::string, SessionRecord> sessions_;
  std::map<std::string, DatasetHandle> handles_;
  std::map<std::string, Live> live_;
};

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_SERVICE_H_
