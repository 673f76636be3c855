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

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "vpki/clock.hpp"
#include "vpki/credentials.hpp"
#include "vpki/gateway.hpp"
#include "vpki/messages.hpp"

namespace vpki {

// Per-leg network delay. A request/response exchange has two legs, so one
// acquisition crosses four.
struct DelayModel {
  enum class Jitter { None, Uniform, Exponential };

  double base_ms = 0;
  Jitter jitter = Jitter::None;
  double jitter_ms = 0;  // max for Uniform, mean for Exponential
  std::uint64_t seed = 1;

  // Deterministic in (seed, request, leg) so concurrent replays draw the
  // same delays regardless of scheduling.
  double sample(std::uint64_t request_seq, unsigned leg) const;
  void validate() const;
};

DelayModel::Jitter jitter_from_name(std::string_view name);

class DelayedEndpoint final : public Endpoint {
 public:
  DelayedEndpoint(std::shared_ptr<Endpoint> inner, DelayModel model,
                  std::uint64_t request_seq, unsigned first_leg)
      : inner_(std::move(inner)), model_(model), seq_(request_seq), leg_(first_leg) {}
  Envelope call(Envelope request, std::chrono::milliseconds deadline) override;

 private:
  std::shared_ptr<Endpoint> inner_;
  DelayModel model_;
  std::uint64_t seq_;
  unsigned leg_;
};

struct ClientTargets {
  std::shared_ptr<Endpoint> ltca;
  std::shared_ptr<Endpoint> pca;
  std::string pca_id = "pca";
  // Root anchors plus the PCA certificate used as the chain intermediate.
  std::vector<Certificate> anchors;
  Certificate pca_cert;
  std::chrono::milliseconds deadline{30000};
};

struct VehicleCredential {
  std::string vehicle_id;
  KeyPair ltc_key;
  Certificate ltc;
};

VehicleCredential register_vehicle(Endpoint& ltca, const std::string& vehicle_id,
                                   Validity validity, Curve curve = Curve::P256,
                                   std::chrono::milliseconds deadline = std::chrono::seconds(30));

struct StepTimes {
  double ticket_ms = 0;
  double keygen_ms = 0;
  double pseudonym_ms = 0;
  double verify_ms = 0;
};

struct AcquireOptions {
  bool keygen_in_timing = true;
  bool verify = true;
  Curve curve = Curve::P256;
  Clock clock = system_clock();
};

struct AcquisitionResult {
  Ticket ticket;
  std::vector<std::pair<Certificate, KeyPair>> pseudonyms;
  double t_request_sent = 0;       // monotonic ms
  double t_response_received = 0;  // monotonic ms
  double end_to_end_ms = 0;
  StepTimes steps;
};

std::uint32_t pseudonyms_for_trip(UnixSeconds trip_start, UnixSeconds trip_end,
                                  std::int64_t lifetime);

// Ticket, then one batch of ceil(trip / lifetime) CSRs. Failures carry the
// step name ("ticket", "pseudonym", "verify") in VpkiError::step().
AcquisitionResult acquire(const ClientTargets& targets, const VehicleCredential& vehicle,
                          UnixSeconds trip_start, UnixSeconds trip_end,
                          std::int64_t pseudonym_lifetime_s, const AcquireOptions& options = {});

// Chain, key binding and slot checks on a returned batch. Throws SlotMismatch
// or a chain error.
void verify_batch(const Ticket& ticket, const std::vector<KeyPair>& keys,
                  const std::vector<Certificate>& pseudonyms, const ClientTargets& targets,
                  UnixSeconds now);

// Registered vehicles, created on first use.
class Fleet {
 public:
  Fleet(std::shared_ptr<Endpoint> ltca, Validity ltc_validity, Curve curve = Curve::P256)
      : ltca_(std::move(ltca)), validity_(ltc_validity), curve_(curve) {}

  std::shared_ptr<const VehicleCredential> get(const std::string& vehicle_id);
  std::size_t size() const;

 private:
  std::shared_ptr<Endpoint> ltca_;
  Validity validity_;
  Curve curve_;
  mutable std::mutex mu_;
  // Concurrent first requests for one vehicle share a single registration.
  std::map<std::string, std::shared_future<std::shared_ptr<const VehicleCredential>>> vehicles_;
};

struct LatencyRecord {
  std::uint64_t seq = 0;
  std::string vehicle_id;
  double t_start_unix_ms = 0;
  double end_to_end_ms = 0;
  std::int64_t tau_s = 0;
  std::uint32_t pseudonyms = 0;
  StepTimes steps;
  std::string status = "ok";  // "ok" or the error code name
  std::string step;           // failing step, if any

  bool ok() const { return status == "ok"; }
};

std::string latency_record_json(const LatencyRecord& r);
LatencyRecord parse_latency_record(std::string_view line);

// Append-only, safe for concurrent writers.
class RecordSink {
 public:
  void add(LatencyRecord r);
  std::vector<LatencyRecord> take();
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<LatencyRecord> records_;
};

enum class Arrival { Uniform, Poisson };

struct LoadProfile {
  std::size_t workers = 1;
  double requests_per_worker_per_hour = 3600;
  std::size_t concurrent_streams_per_worker = 1;
  std::size_t csrs_per_request = 1;
  double duration_s = 60;
  Arrival arrival = Arrival::Uniform;
  std::uint64_t seed = 1;
  std::int64_t pseudonym_lifetime_s = 300;
  std::size_t vehicles = 16;
  // Optional multiplier on the nominal rate as a function of elapsed
  // seconds. Must be non-negative; the nominal rate applies where it is 1.
  std::function<double(double)> rate_shape;

  double nominal_rate_per_s() const {
    return static_cast<double>(workers) * requests_per_worker_per_hour / 3600.0;
  }
  // Throws InvalidConfig.
  void validate() const;
};

// Request start offsets, in seconds from the run start.
std::vector<double> arrival_schedule(const LoadProfile& profile);

struct LoadOptions {
  AcquireOptions acquire;
  DelayModel delay;
  // Called for every record as it completes, from worker threads.
  std::function<void(const LatencyRecord&)> on_record;
};

// Open-loop load: requests start on the arrival schedule and run on
// workers x streams threads. Every scheduled request yields exactly one
// record. Throws TargetUnreachable if the targets do not answer a ping.
std::vector<LatencyRecord> run_load(const LoadProfile& profile, const ClientTargets& targets,
                                    Fleet& fleet, const LoadOptions& options = {});

void ping(Endpoint& ep, std::chrono::milliseconds deadline);

}  // namespace vpki
