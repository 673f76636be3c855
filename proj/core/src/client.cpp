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
#include "vpki/client.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "vpki/error.hpp"
#include "vpki/thread_pool.hpp"

namespace vpki {
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void sleep_ms(double ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

template <class F>
auto in_step(const char* step, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const VpkiError& e) {
    throw VpkiError(e.code(), e.message(), e.detail(), step);
  }
}

}  // namespace

DelayModel::Jitter jitter_from_name(std::string_view name) {
  if (name == "none") return DelayModel::Jitter::None;
  if (name == "uniform") return DelayModel::Jitter::Uniform;
  if (name == "exponential" || name == "exp") return DelayModel::Jitter::Exponential;
  fail(Errc::InvalidConfig, "unknown jitter '" + std::string(name) + "'");
}

void DelayModel::validate() const {
  if (!(base_ms >= 0)) fail(Errc::InvalidConfig, "base_ms must be >= 0");
  if (!(jitter_ms >= 0)) fail(Errc::InvalidConfig, "jitter must be >= 0");
  if (jitter == Jitter::Exponential && jitter_ms == 0) {
    fail(Errc::InvalidConfig, "exponential jitter needs a positive mean");
  }
}

double DelayModel::sample(std::uint64_t request_seq, unsigned leg) const {
  switch (jitter) {
    case Jitter::None:
      return base_ms;
    case Jitter::Uniform: {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(request_seq * 8 + leg)));
      return base_ms + std::uniform_real_distribution<double>(0, jitter_ms)(rng);
    }
    case Jitter::Exponential: {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(request_seq * 8 + leg)));
      return base_ms + std::exponential_distribution<double>(1.0 / jitter_ms)(rng);
    }
  }
  return base_ms;
}

Envelope DelayedEndpoint::call(Envelope request, std::chrono::milliseconds deadline) {
  sleep_ms(model_.sample(seq_, leg_));
  auto resp = inner_->call(std::move(request), deadline);
  sleep_ms(model_.sample(seq_, leg_ + 1));
  return resp;
}

void ping(Endpoint& ep, std::chrono::milliseconds deadline) {
  PingMessage p{{'p', 'i', 'n', 'g'}};
  rpc(ep, MessageType::Ping, p.encode(), MessageType::Pong, deadline);
}

VehicleCredential register_vehicle(Endpoint& ltca, const std::string& vehicle_id,
                                   Validity validity, Curve curve,
                                   std::chrono::milliseconds deadline) {
  auto key = KeyPair::generate(curve);
  RegisterRequest q{vehicle_id, key.public_key(), validity};
  auto body = rpc(ltca, MessageType::RegisterRequest, q.encode(),
                  MessageType::RegisterResponse, deadline);
  return {vehicle_id, std::move(key), CertificateMessage::decode(body).cert};
}

std::uint32_t pseudonyms_for_trip(UnixSeconds trip_start, UnixSeconds trip_end,
                                  std::int64_t lifetime) {
  if (trip_end <= trip_start) fail(Errc::InvalidArgument, "trip must end after it starts");
  if (lifetime <= 0) fail(Errc::InvalidArgument, "pseudonym lifetime must be positive");
  auto span = trip_end - trip_start;
  return static_cast<std::uint32_t>((span + lifetime - 1) / lifetime);
}

void verify_batch(const Ticket& ticket, const std::vector<KeyPair>& keys,
                  const std::vector<Certificate>& pseudonyms, const ClientTargets& targets,
                  UnixSeconds now) {
  if (pseudonyms.size() != keys.size()) {
    fail(Errc::SlotMismatch, "asked for " + std::to_string(keys.size()) + " pseudonyms, got " +
                                 std::to_string(pseudonyms.size()));
  }
  std::set<CertSerial> serials;
  std::vector<Certificate> intermediates{targets.pca_cert};
  for (std::size_t i = 0; i < pseudonyms.size(); ++i) {
    const auto& p = pseudonyms[i];
    auto idx = static_cast<std::int64_t>(i);
    if (p.kind() != CertKind::Pseudonym || !p.body.subject_id.empty()) {
      throw VpkiError(Errc::SlotMismatch, "not an anonymous pseudonym", idx);
    }
    if (!(p.body.subject_public_key == keys[i].public_key())) {
      throw VpkiError(Errc::SlotMismatch, "pseudonym not bound to its CSR key", idx);
    }
    if (!(p.validity() == ticket.slot(static_cast<std::uint32_t>(i)))) {
      throw VpkiError(Errc::SlotMismatch, "pseudonym validity is not its ticket slot", idx);
    }
    if (!serials.insert(p.serial()).second) {
      throw VpkiError(Errc::SlotMismatch, "repeated pseudonym serial", idx);
    }
    // Checked at the slot start: later slots are not valid yet, but the
    // chain itself must be.
    verify_chain(p, targets.anchors, std::max(now, p.validity().start), intermediates);
  }
}

AcquisitionResult acquire(const ClientTargets& targets, const VehicleCredential& vehicle,
                          UnixSeconds trip_start, UnixSeconds trip_end,
                          std::int64_t lifetime, const AcquireOptions& options) {
  const auto n = pseudonyms_for_trip(trip_start, trip_end, lifetime);
  AcquisitionResult out;
  std::vector<KeyPair> keys;
  std::vector<Csr> csrs;
  auto keygen = [&] {
    const double t = monotonic_ms();
    keys.reserve(n);
    csrs.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      keys.push_back(KeyPair::generate(options.curve));
      csrs.push_back(make_csr(keys.back()));
    }
    out.steps.keygen_ms = monotonic_ms() - t;
  };
  if (!options.keygen_in_timing) keygen();

  out.t_request_sent = monotonic_ms();
  out.ticket = in_step("ticket", [&] {
    auto req = make_ticket_request(vehicle.ltc_key, vehicle.ltc, trip_start,
                                   trip_end - trip_start, targets.pca_id, options.clock());
    auto body = rpc(*targets.ltca, MessageType::TicketRequest, req.encode(),
                    MessageType::TicketResponse, targets.deadline);
    return TicketMessage::decode(body).ticket;
  });
  out.steps.ticket_ms = monotonic_ms() - out.t_request_sent;
  if (options.keygen_in_timing) keygen();

  const double t_batch = monotonic_ms();
  auto certs = in_step("pseudonym", [&] {
    PseudonymBatchRequest q{out.ticket, std::move(csrs)};
    auto body = rpc(*targets.pca, MessageType::PseudonymBatchRequest, q.encode(),
                    MessageType::PseudonymBatchResponse, targets.deadline);
    return PseudonymBatchResponse::decode(body).pseudonyms;
  });
  out.t_response_received = monotonic_ms();
  out.steps.pseudonym_ms = out.t_response_received - t_batch;
  out.end_to_end_ms = out.t_response_received - out.t_request_sent;

  if (options.verify) {
    const double t = monotonic_ms();
    in_step("verify", [&] {
      verify_batch(out.ticket, keys, certs, targets, options.clock());
      return 0;
    });
    out.steps.verify_ms = monotonic_ms() - t;
  }
  out.pseudonyms.reserve(certs.size());
  for (std::size_t i = 0; i < certs.size(); ++i) {
    out.pseudonyms.emplace_back(std::move(certs[i]), std::move(keys[i]));
  }
  return out;
}

std::shared_ptr<const VehicleCredential> Fleet::get(const std::string& vehicle_id) {
  std::promise<std::shared_ptr<const VehicleCredential>> promise;
  std::shared_future<std::shared_ptr<const VehicleCredential>> pending;
  {
    std::lock_guard lock(mu_);
    auto it = vehicles_.find(vehicle_id);
    if (it != vehicles_.end()) {
      pending = it->second;
    } else {
      vehicles_.emplace(vehicle_id, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  try {
    auto cred = std::make_shared<const VehicleCredential>(
        register_vehicle(*ltca_, vehicle_id, validity_, curve_));
    promise.set_value(cred);
    return cred;
  } catch (...) {
    // Waiters see the failure; the next caller tries again.
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    vehicles_.erase(vehicle_id);
    throw;
  }
}

std::size_t Fleet::size() const {
  std::lock_guard lock(mu_);
  return vehicles_.size();
}

std::string latency_record_json(const LatencyRecord& r) {
  json j{{"seq", r.seq},
         {"vehicle_id", r.vehicle_id},
         {"t_start_unix_ms", r.t_start_unix_ms},
         {"end_to_end_ms", r.end_to_end_ms},
         {"tau_s", r.tau_s},
         {"pseudonyms", r.pseudonyms},
         {"step_times",
          {{"ticket_ms", r.steps.ticket_ms},
           {"keygen_ms", r.steps.keygen_ms},
           {"pseudonym_ms", r.steps.pseudonym_ms},
           {"verify_ms", r.steps.verify_ms}}},
         {"status", r.status}};
  if (!r.step.empty()) j["step"] = r.step;
  return j.dump();
}

LatencyRecord parse_latency_record(std::string_view line) {
  try {
    auto j = json::parse(line);
    LatencyRecord r;
    r.seq = j.value("seq", std::uint64_t{0});
    r.vehicle_id = j.value("vehicle_id", "");
    r.t_start_unix_ms = j.value("t_start_unix_ms", 0.0);
    r.end_to_end_ms = j.at("end_to_end_ms").get<double>();
    r.tau_s = j.value("tau_s", std::int64_t{0});
    r.pseudonyms = j.value("pseudonyms", std::uint32_t{0});
    if (j.contains("step_times")) {
      const auto& s = j["step_times"];
      r.steps = {s.value("ticket_ms", 0.0), s.value("keygen_ms", 0.0),
                 s.value("pseudonym_ms", 0.0), s.value("verify_ms", 0.0)};
    }
    r.status = j.value("status", "ok");
    r.step = j.value("step", "");
    if (r.end_to_end_ms < 0) fail(Errc::ParseError, "negative end_to_end_ms");
    return r;
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("latency record: ") + e.what());
  }
}

void RecordSink::add(LatencyRecord r) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(r));
}

std::vector<LatencyRecord> RecordSink::take() {
  std::lock_guard lock(mu_);
  auto out = std::move(records_);
  records_.clear();
  return out;
}

std::size_t RecordSink::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void LoadProfile::validate() const {
  auto bad = [](const std::string& what) { fail(Errc::InvalidConfig, what); };
  if (workers == 0) bad("workers must be positive");
  if (!(requests_per_worker_per_hour > 0)) bad("requests_per_worker_per_hour must be positive");
  if (concurrent_streams_per_worker == 0) bad("concurrent_streams_per_worker must be positive");
  if (csrs_per_request == 0) bad("csrs_per_request must be positive");
  if (!(duration_s > 0)) bad("duration_s must be positive");
  if (pseudonym_lifetime_s <= 0) bad("pseudonym_lifetime_s must be positive");
  if (vehicles == 0) bad("vehicles must be positive");
}

std::vector<double> arrival_schedule(const LoadProfile& profile) {
  profile.validate();
  const double rate = profile.nominal_rate_per_s();
  std::mt19937_64 rng(profile.seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<double> out;

  if (!profile.rate_shape) {
    double u = profile.arrival == Arrival::Uniform ? 0.5 : unit_exp(rng);
    while (u / rate < profile.duration_s) {
      out.push_back(u / rate);
      u += profile.arrival == Arrival::Uniform ? 1.0 : unit_exp(rng);
    }
    return out;
  }

  // Time-varying rate: draw arrivals in expected-count space and map them
  // back through the cumulative intensity.
  const std::size_t steps = 20000;
  const double dt = profile.duration_s / steps;
  std::vector<double> cum(steps + 1, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    double shape = std::max(0.0, profile.rate_shape((i + 0.5) * dt));
    cum[i + 1] = cum[i] + rate * shape * dt;
  }
  double u = profile.arrival == Arrival::Uniform ? 0.5 : unit_exp(rng);
  std::size_t i = 0;
  while (u < cum[steps]) {
    while (cum[i + 1] < u) ++i;
    double span = cum[i + 1] - cum[i];
    double frac = span > 0 ? (u - cum[i]) / span : 0;
    out.push_back((static_cast<double>(i) + frac) * dt);
    u += profile.arrival == Arrival::Uniform ? 1.0 : unit_exp(rng);
  }
  return out;
}

std::vector<LatencyRecord> run_load(const LoadProfile& profile, const ClientTargets& targets,
                                    Fleet& fleet, const LoadOptions& options) {
  profile.validate();
  options.delay.validate();
  for (auto* ep : {targets.ltca.get(), targets.pca.get()}) {
    try {
      if (!ep) fail(Errc::InvalidConfig, "missing target");
      ping(*ep, std::min(targets.deadline, std::chrono::milliseconds(5000)));
    } catch (const VpkiError& e) {
      fail(Errc::TargetUnreachable, e.what());
    }
  }

  const auto schedule = arrival_schedule(profile);
  const bool delayed = options.delay.base_ms > 0 || options.delay.jitter != DelayModel::Jitter::None;
  const auto tau = profile.pseudonym_lifetime_s;
  RecordSink sink;
  {
    ThreadPool pool(profile.workers * profile.concurrent_streams_per_worker);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::nanoseconds>(
                                             std::chrono::duration<double>(schedule[k])));
      pool.submit([&, k] {
        LatencyRecord r;
        r.seq = k;
        r.vehicle_id = "load-" + std::to_string(profile.seed) + "-" +
                       std::to_string(k % profile.vehicles);
        r.tau_s = tau;
        r.t_start_unix_ms = unix_ms();
        const double started = monotonic_ms();
        try {
          auto vehicle = in_step("register", [&] { return fleet.get(r.vehicle_id); });
          ClientTargets t = targets;
          if (delayed) {
            t.ltca = std::make_shared<DelayedEndpoint>(targets.ltca, options.delay, k, 0);
            t.pca = std::make_shared<DelayedEndpoint>(targets.pca, options.delay, k, 2);
          }
          const auto now = options.acquire.clock();
          const auto start = now - (now % tau);
          auto res = acquire(t, *vehicle, start,
                             start + tau * static_cast<std::int64_t>(profile.csrs_per_request), tau,
                             options.acquire);
          r.end_to_end_ms = res.end_to_end_ms;
          r.steps = res.steps;
          r.pseudonyms = static_cast<std::uint32_t>(res.pseudonyms.size());
        } catch (const VpkiError& e) {
          r.status = std::string(errc_name(e.code()));
          r.step = e.step();
          r.end_to_end_ms = monotonic_ms() - started;
        } catch (const std::exception&) {
          r.status = "InternalError";
          r.end_to_end_ms = monotonic_ms() - started;
        }
        if (options.on_record) options.on_record(r);
        sink.add(std::move(r));
      });
    }
    pool.shutdown();
  }
  auto records = sink.take();
  std::sort(records.begin(), records.end(),
            [](const LatencyRecord& a, const LatencyRecord& b) { return a.seq < b.seq; });
  return records;
}

}  // namespace vpki
