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

// Line-delimited JSON over a Unix domain socket. One request object per
// line, one response object per line:
//
//   {"op": "ingest", "csv": "...", "schema": "..."}
//   {"op": "session", "dataset": "ds-...", "scope": "analysts",
//    "group": "analysts"}
//   {"op": "query", "session": "s-...", "plan": "count",
//    "mechanism": "laplace", "eps": 0.1, "clamp_nonnegative": false}
//   {"op": "budget", "session": "s-..."}
//
// Query and budget responses carry the same key=value fields the CLI
// prints, as JSON strings.

#ifndef DPCORE_SERVICE_SERVER_H_
#define DPCORE_SERVICE_SERVER_H_

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "dpcore/internal/format.h"
#include "dpcore/service/service.h"
#include "json.hpp"

namespace dpcore {
namespace service {

// key=value lines to a flat JSON object of strings.
inline nlohmann::json KeyValueToJson(std::string_view text) {
  nlohmann::json j = nlohmann::json::object();
  for (std::string_view line : dpcore::internal::Split(text, "\n", true)) {
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    j[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return j;
}

// Handles one request line. Never throws.
inline std::string HandleRequestLine(Service& service, std::string_view line) {
  using nlohmann::json;
  auto error = [](std::string_view code) {
    return json{{"status", "error"}, {"code", std::string(code)}}.dump();
  };
  json req = json::parse(line, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return error(kInvalidRequest);
  try {
    std::string op = req.value("op", std::string());
    if (op == "ingest") {
      absl::StatusOr<std::string> id = service.IngestDataset(
          req.at("csv").get<std::string>(), req.at("schema").get<std::string>());
      service.FlushDevLog();
      if (!id.ok()) {
        return json{{"status", "error"},
                    {"code", std::string(kInvalidRequest)},
                    {"message", std::string(id.status().message())}}
            .dump();
      }
      return json{{"status", "ok"}, {"dataset", *id}}.dump();
    }
    if (op == "session") {
      absl::StatusOr<std::string> id = service.OpenSession(
          req.at("dataset").get<std::string>(),
          req.value("scope", service.config().global_scope),
          req.value("group", std::string()));
      if (!id.ok()) {
        return error(id.status().code() == absl::StatusCode::kResourceExhausted
                         ? kBudgetExceeded
                         : kInvalidRequest);
      }
      return json{{"status", "ok"}, {"session", *id}}.dump();
    }
    if (op == "query") {
      QueryRequest q;
      q.plan = req.at("plan").get<std::string>();
      q.mechanism = req.at("mechanism").get<std::string>();
      q.budget = req.at("eps").get<double>();
      q.clamp_nonnegative = req.value("clamp_nonnegative", false);
      QueryResponse r =
          service.Query(req.at("session").get<std::string>(), q);
      service.FlushDevLog();
      return KeyValueToJson(r.Serialize()).dump();
    }
    if (op == "budget") {
      absl::StatusOr<BudgetStatus> s =
          service.Budget(req.at("session").get<std::string>());
      if (!s.ok()) return error(kInvalidRequest);
      json j = KeyValueToJson(FormatBudgetStatus(*s));
      j["status"] = "ok";
      return j.dump();
    }
  } catch (const json::exception&) {
  }
  return error(kInvalidRequest);
}

class SocketServer {
 public:
  explicit SocketServer(Service& service) : service_(service) {}
  ~SocketServer() { Stop(); }

  absl::Status Listen(const std::string& path) {
    sockaddr_un addr{};
    if (path.size() >= sizeof(addr.sun_path)) {
      return absl::InvalidArgumentError("socket path too long");
    }
    fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd_ < 0) return absl::UnavailableError("socket() failed");
    addr.sun_family = AF_UNIX;
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    ::unlink(path.c_str());
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd_, 16) != 0) {
      return absl::UnavailableError(dpcore::internal::StrCat(
          "cannot listen on '", path, "': ", std::strerror(errno)));
    }
    path_ = path;
    return absl::OkStatus();
  }

  // Accepts until Stop(). Each connection gets a thread; requests on one
  // connection are served in order.
  void Serve() {
    while (!stopping_) {
      int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) {
        if (errno == EINTR) continue;
        break;
      }
      workers_.emplace_back([this, client] { ServeConnection(client); });
    }
    for (std::thread& t : workers_) t.join();
    workers_.clear();
  }

  void Stop() {
    if (stopping_.exchange(true)) return;
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
    if (!path_.empty()) ::unlink(path_.c_str());
  }

 private:
  void ServeConnection(int client) {
    std::string buffer;
    char chunk[4096];
    while (true) {
      ssize_t n = ::read(client, chunk, sizeof(chunk));
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (dpcore::internal::StripWhitespace(line).empty()) continue;
        std::string reply = HandleRequestLine(service_, line) + "\n";
        std::size_t sent = 0;
        while (sent < reply.size()) {
          ssize_t w = ::write(client, reply.data() + sent, reply.size() - sent);
          if (w <= 0) break;
          sent += static_cast<std::size_t>(w);
        }
      }
    }
    ::close(client);
  }

  Service& service_;
  int fd_ = -1;
  std::string path_;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> workers_;
};

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_SERVER_H_
