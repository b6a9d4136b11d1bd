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

// Time source for padded query execution. Production uses the monotonic
// clock; tests script time so response-time traces can be compared exactly.

#ifndef DPCORE_SERVICE_CLOCK_H_
#define DPCORE_SERVICE_CLOCK_H_

#include <chrono>
#include <cstdint>
#include <mutex>
#include <thread>

namespace dpcore {
namespace service {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t NowNs() = 0;
  // Returns once NowNs() >= deadline_ns. Past deadlines return at once.
  virtual void SleepUntil(std::int64_t deadline_ns) = 0;
  // Simulated work. Real clocks ignore it; the work itself takes the time.
  virtual void Consume(std::int64_t /*ns*/) {}
};

class SteadyClock : public Clock {
 public:
  std::int64_t NowNs() override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }

  void SleepUntil(std::int64_t deadline_ns) override {
    // Coarse sleep, then spin for the last stretch: the scheduler's wakeup
    // jitter is far larger than a per-record pad.
    constexpr std::int64_t kSpinNs = 200'000;
    std::int64_t now = NowNs();
    if (deadline_ns - now > kSpinNs) {
      std::this_thread::sleep_for(
          std::chrono::nanoseconds(deadline_ns - now - kSpinNs));
    }
    while (NowNs() < deadline_ns) {
    }
  }
};

// Time moves only when told to. Thread-safe.
class ScriptedClock : public Clock {
 public:
  explicit ScriptedClock(std::int64_t start_ns = 0) : now_(start_ns) {}

  std::int64_t NowNs() override {
    std::lock_guard<std::mutex> lock(mu_);
    return now_;
  }
  void SleepUntil(std::int64_t deadline_ns) override {
    std::lock_guard<std::mutex> lock(mu_);
    if (deadline_ns > now_) now_ = deadline_ns;
  }
  void Consume(std::int64_t ns) override { Advance(ns); }
  void Advance(std::int64_t ns) {
    std::lock_guard<std::mutex> lock(mu_);
    if (ns > 0) now_ += ns;
  }

 private:
  std::mutex mu_;
  std::int64_t now_;
};

}  // namespace service
}  // namespace dpcore

#endif  // DPCORE_SERVICE_CLOCK_H_
