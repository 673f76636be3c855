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
#include "vpki/store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>

#include "vpki/error.hpp"

namespace vpki {

std::string_view namespace_name(Namespace ns) {
  switch (ns) {
    case Namespace::Vehicles: return "vehicles";
    case Namespace::TicketsLedger: return "tickets_ledger";
    case Namespace::ConsumedTickets: return "consumed_tickets";
    case Namespace::IssuanceRecords: return "issuance_records";
    case Namespace::Crl: return "crl";
  }
  return "?";
}

namespace {
std::size_t index(Namespace ns) { return static_cast<std::size_t>(ns); }

template <class Table>
std::vector<std::pair<std::string, Bytes>> scan(const Table& t,
                                                std::string_view prefix) {
  std::vector<std::pair<std::string, Bytes>> out;
  for (auto it = t.lower_bound(prefix); it != t.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.emplace_back(it->first, it->second);
  }
  return out;
}

template <class Table>
bool matches(const Table& t, std::string_view key,
             const std::optional<Bytes>& expected) {
  auto it = t.find(key);
  if (!expected) return it == t.end();
  return it != t.end() && it->second == *expected;
}
}  // namespace

void Store::check_available() const {
  if (!available_.load()) fail(Errc::StoreUnavailable, "store is unavailable");
}

void Store::check_key(std::string_view key) {
  if (key.empty()) fail(Errc::InvalidArgument, "store keys must be non-empty");
}

ConsumeOutcome Store::consume_once(Namespace ns, std::string_view key) {
  static const Bytes kMarker{1};
  return compare_and_put(ns, key, std::nullopt, kMarker)
             ? ConsumeOutcome::Won
             : ConsumeOutcome::AlreadyConsumed;
}

void MemoryStore::put(Namespace ns, std::string_view key, ByteView value) {
  check_available();
  check_key(key);
  std::unique_lock lock(mu_);
  tables_[index(ns)].insert_or_assign(std::string(key),
                                      Bytes(value.begin(), value.end()));
}

std::optional<Bytes> MemoryStore::get(Namespace ns, std::string_view key) const {
  check_available();
  check_key(key);
  std::shared_lock lock(mu_);
  const auto& t = tables_[index(ns)];
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, Bytes>> MemoryStore::scan_prefix(
    Namespace ns, std::string_view prefix) const {
  check_available();
  std::shared_lock lock(mu_);
  return scan(tables_[index(ns)], prefix);
}

bool MemoryStore::compare_and_put(Namespace ns, std::string_view key,
                                  const std::optional<Bytes>& expected,
                                  ByteView value) {
  check_available();
  check_key(key);
  std::unique_lock lock(mu_);
  auto& t = tables_[index(ns)];
  if (!matches(t, key, expected)) return false;
  t.insert_or_assign(std::string(key), Bytes(value.begin(), value.end()));
  return true;
}

std::size_t MemoryStore::size(Namespace ns) const {
  std::shared_lock lock(mu_);
  return tables_[index(ns)].size();
}

// Log record: u8 ns | u32 key_len | key | u32 value_len | value | u32 crc32
// where the crc covers everything before it.
FileStore::FileStore(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd_ < 0) {
    fail(Errc::StoreUnavailable,
         "cannot open " + path_.string() + ": " + std::strerror(errno));
  }
  replay();
}

FileStore::~FileStore() {
  if (fd_ >= 0) ::close(fd_);
}

void FileStore::replay() {
  Bytes data;
  {
    std::uint8_t buf[1 << 16];
    ::lseek(fd_, 0, SEEK_SET);
    for (;;) {
      auto n = ::read(fd_, buf, sizeof(buf));
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(Errc::StoreUnavailable, "read failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) break;
      data.insert(data.end(), buf, buf + n);
    }
  }
  std::size_t pos = 0;
  std::size_t good = 0;
  while (pos < data.size()) {
    const std::size_t start = pos;
    if (data.size() - pos < 5) break;
    auto ns = data[pos];
    auto klen = be::get_u32(&data[pos + 1]);
    pos += 5;
    if (ns >= kNamespaceCount || data.size() - pos < klen + 4ull) break;
    std::string key(reinterpret_cast<const char*>(&data[pos]), klen);
    pos += klen;
    auto vlen = be::get_u32(&data[pos]);
    pos += 4;
    if (data.size() - pos < vlen + 4ull) break;
    Bytes value(data.begin() + pos, data.begin() + pos + vlen);
    pos += vlen;
    auto stored_crc = be::get_u32(&data[pos]);
    auto crc = crc32(0L, &data[start], static_cast<uInt>(pos - start));
    pos += 4;
    if (crc != stored_crc) break;
    tables_[ns].insert_or_assign(std::move(key), std::move(value));
    good = pos;
  }
  if (good != data.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(good)) != 0) {
      fail(Errc::StoreUnavailable, "cannot truncate torn log tail");
    }
  }
}

void FileStore::append(Namespace ns, std::string_view key, ByteView value) {
  Bytes rec;
  rec.reserve(13 + key.size() + value.size());
  rec.push_back(static_cast<std::uint8_t>(ns));
  be::put_u32(rec, static_cast<std::uint32_t>(key.size()));
  rec.insert(rec.end(), key.begin(), key.end());
  be::put_u32(rec, static_cast<std::uint32_t>(value.size()));
  rec.insert(rec.end(), value.begin(), value.end());
  be::put_u32(rec, static_cast<std::uint32_t>(
                       crc32(0L, rec.data(), static_cast<uInt>(rec.size()))));
  std::size_t off = 0;
  while (off < rec.size()) {
    auto n = ::write(fd_, rec.data() + off, rec.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::StoreUnavailable, "append failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fdatasync(fd_) != 0) {
    fail(Errc::StoreUnavailable, "fdatasync failed: " + std::string(std::strerror(errno)));
  }
}

void FileStore::put(Namespace ns, std::string_view key, ByteView value) {
  check_available();
  check_key(key);
  std::unique_lock lock(mu_);
  append(ns, key, value);
  tables_[index(ns)].insert_or_assign(std::string(key),
                                      Bytes(value.begin(), value.end()));
}

std::optional<Bytes> FileStore::get(Namespace ns, std::string_view key) const {
  check_available();
  check_key(key);
  std::shared_lock lock(mu_);
  const auto& t = tables_[index(ns)];
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, Bytes>> FileStore::scan_prefix(
    Namespace ns, std::string_view prefix) const {
  check_available();
  std::shared_lock lock(mu_);
  return scan(tables_[index(ns)], prefix);
}

bool FileStore::compare_and_put(Namespace ns, std::string_view key,
                                const std::optional<Bytes>& expected,
                                ByteView value) {
  check_available();
  check_key(key);
  std::unique_lock lock(mu_);
  auto& t = tables_[index(ns)];
  if (!matches(t, key, expected)) return false;
  append(ns, key, value);
  t.insert_or_assign(std::string(key), Bytes(value.begin(), value.end()));
  return true;
}

std::shared_ptr<Store> open_store(std::string_view address) {
  if (address.empty() || address == "mem" || address == "memory") {
    return std::make_shared<MemoryStore>();
  }
  constexpr std::string_view kFile = "file:";
  if (address.substr(0, kFile.size()) == kFile) {
    return std::make_shared<FileStore>(std::string(address.substr(kFile.size())));
  }
  fail(Errc::InvalidConfig, "unknown store address '" + std::string(address) + "'");
}

AsyncWriter::AsyncWriter(std::shared_ptr<Store> store,
                         std::chrono::milliseconds delay)
    : store_(std::move(store)), delay_(delay) {
  worker_ = std::jthread([this](std::stop_token st) { run(st); });
}

AsyncWriter::~AsyncWriter() {
  worker_.request_stop();
  cv_.notify_all();
}

void AsyncWriter::enqueue(Namespace ns, std::string key, Bytes value) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(
        {std::chrono::steady_clock::now() + delay_, ns, std::move(key), std::move(value)});
  }
  cv_.notify_all();
}

std::size_t AsyncWriter::backlog() const {
  std::lock_guard lock(mu_);
  return queue_.size() + in_flight_;
}

void AsyncWriter::flush() {
  std::unique_lock lock(mu_);
  drained_.wait(lock, [&] { return queue_.empty() && in_flight_ == 0; });
}

void AsyncWriter::run(std::stop_token stop) {
  std::unique_lock lock(mu_);
  while (!stop.stop_requested()) {
    if (queue_.empty()) {
      cv_.wait(lock, stop, [&] { return !queue_.empty(); });
      continue;
    }
    auto due = queue_.front().due;
    if (std::chrono::steady_clock::now() < due) {
      cv_.wait_until(lock, stop, due, [] { return false; });
      continue;
    }
    Pending p = std::move(queue_.front());
    queue_.pop_front();
    ++in_flight_;
    lock.unlock();
    bool ok = true;
    try {
      store_->put(p.ns, p.key, p.value);
    } catch (const VpkiError&) {
      ok = false;
    }
    lock.lock();
    --in_flight_;
    if (!ok) {
      // Store outage: keep the write and try again after another delay.
      p.due = std::chrono::steady_clock::now() + delay_;
      queue_.push_back(std::move(p));
    }
    if (queue_.empty() && in_flight_ == 0) drained_.notify_all();
  }
}

}  // namespace vpki
