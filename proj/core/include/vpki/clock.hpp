// Copyright 2026 The VPKIaaS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>

namespace vpki {

// All validity windows and ticket windows are whole UTC seconds.
using UnixSeconds = std::int64_t;

using Clock = std::function<UnixSeconds()>;

inline UnixSeconds system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline Clock system_clock() { return &system_now; }

// Test clock that only moves when told to.
class ManualClock {
 public:
  explicit ManualClock(UnixSeconds start) : now_(start) {}
  UnixSeconds now() const { return now_.load(); }
  void set(UnixSeconds t) { now_.store(t); }
  void advance(std::int64_t s) { now_.fetch_add(s); }
  Clock fn() {
    return [this] { return now(); };
  }

 private:
  std::atomic<UnixSeconds> now_;
};

inline double monotonic_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

inline double unix_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(system_clock::now().time_since_epoch())
      .count();
}

}  // namespace vpki
