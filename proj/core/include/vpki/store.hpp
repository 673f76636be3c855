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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "vpki/codec.hpp"

namespace vpki {

enum class Namespace : std::uint8_t {
  Vehicles = 0,
  TicketsLedger = 1,
  ConsumedTickets = 2,
  IssuanceRecords = 3,
  Crl = 4,
};
inline constexpr std::size_t kNamespaceCount = 5;

std::string_view namespace_name(Namespace ns);

enum class ConsumeOutcome { Won, AlreadyConsumed };

// Keyed record storage shared by every LTCA and PCA replica. All operations
// are single-key atomic and safe to call from any number of threads. Keys are
// opaque byte strings and never cross namespaces.
class Store {
 public:
  virtual ~Store() = default;

  virtual void put(Namespace ns, std::string_view key, ByteView value) = 0;
  virtual std::optional<Bytes> get(Namespace ns, std::string_view key) const = 0;
  // Results are ordered by key.
  virtual std::vector<std::pair<std::string, Bytes>> scan_prefix(
      Namespace ns, std::string_view prefix) const = 0;

  // Writes value only if the key's current value equals expected (nullopt
  // meaning absent). Returns whether the write happened.
  virtual bool compare_and_put(Namespace ns, std::string_view key,
                               const std::optional<Bytes>& expected,
                               ByteView value) = 0;

  // Atomic insert-if-absent. Exactly one caller per key ever sees Won.
  ConsumeOutcome consume_once(Namespace ns, std::string_view key);

  // Fault hook: while unavailable every call throws StoreUnavailable.
  void set_available(bool available) { available_.store(available); }
  bool available() const { return available_.load(); }

 protected:
  void check_available() const;
  static void check_key(std::string_view key);

 private:
  std::atomic<bool> available_{true};
};

class MemoryStore final : public Store {
 public:
  void put(Namespace ns, std::string_view key, ByteView value) override;
  std::optional<Bytes> get(Namespace ns, std::string_view key) const override;
  std::vector<std::pair<std::string, Bytes>> scan_prefix(
      Namespace ns, std::string_view prefix) const override;
  bool compare_and_put(Namespace ns, std::string_view key,
                       const std::optional<Bytes>& expected,
                       ByteView value) override;

  std::size_t size(Namespace ns) const;

 private:
  using Table = std::map<std::string, Bytes, std::less<>>;
  mutable std::shared_mutex mu_;
  Table tables_[kNamespaceCount];
};

// Single-file append-only log. Every mutation is appended and fdatasync'd
// before the call returns; the log is replayed into memory on open. A torn
// record at the tail (crash mid-write) is discarded on replay.
class FileStore final : public Store {
 public:
  explicit FileStore(std::filesystem::path path);
  ~FileStore() override;
  FileStore(const FileStore&) = delete;
  FileStore& operator=(const FileStore&) = delete;

  void put(Namespace ns, std::string_view key, ByteView value) override;
  std::optional<Bytes> get(Namespace ns, std::string_view key) const override;
  std::vector<std::pair<std::string, Bytes>> scan_prefix(
      Namespace ns, std::string_view prefix) const override;
  bool compare_and_put(Namespace ns, std::string_view key,
                       const std::optional<Bytes>& expected,
                       ByteView value) override;

  const std::filesystem::path& path() const { return path_; }

 private:
  void replay();
  void append(Namespace ns, std::string_view key, ByteView value);

  std::filesystem::path path_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  std::map<std::string, Bytes, std::less<>> tables_[kNamespaceCount];
};

// "mem" or "memory" -> MemoryStore, "file:<path>" -> FileStore.
std::shared_ptr<Store> open_store(std::string_view address);

struct WriteMode {
  enum class Kind { Strict, Async } kind = Kind::Strict;
  std::chrono::milliseconds delay{50};

  static WriteMode strict() { return {}; }
  static WriteMode async(std::chrono::milliseconds d) { return {Kind::Async, d}; }
  bool is_async() const { return kind == Kind::Async; }
};

// Write-behind queue for Async mode. Each queued write becomes visible in the
// backing store once its delay has elapsed; backlog() is observable so tests
// can tell queued from applied writes.
class AsyncWriter {
 public:
  AsyncWriter(std::shared_ptr<Store> store, std::chrono::milliseconds delay);
  ~AsyncWriter();
  AsyncWriter(const AsyncWriter&) = delete;
  AsyncWriter& operator=(const AsyncWriter&) = delete;

  void enqueue(Namespace ns, std::string key, Bytes value);
  std::size_t backlog() const;
  // Blocks until every write queued so far has been applied.
  void flush();

 private:
  struct Pending {
    std::chrono::steady_clock::time_point due;
    Namespace ns;
    std::string key;
    Bytes value;
  };
  void run(std::stop_token stop);

  std::shared_ptr<Store> store_;
  std::chrono::milliseconds delay_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::condition_variable drained_;
  std::deque<Pending> queue_;
  std::size_t in_flight_ = 0;
  std::jthread worker_;
};

}  // namespace vpki
