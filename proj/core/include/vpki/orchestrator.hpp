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
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vpki/gateway.hpp"
#include "vpki/ltca.hpp"
#include "vpki/pca.hpp"
#include "vpki/thread_pool.hpp"

namespace vpki {

enum class ServiceKind { Ltca, Pca };
std::string_view service_kind_name(ServiceKind k);
ServiceKind service_kind_from_name(std::string_view name);

struct DeploymentConfig {
  ServiceKind service_kind = ServiceKind::Pca;
  std::string service_name = "pca";
  std::size_t min_replicas = 1;
  std::size_t max_replicas = 4;
  double scale_out_threshold = 0.7;
  double scale_in_threshold = 0.3;
  double cooldown_s = 30;
  double probe_interval_s = 5;
  int probe_failure_threshold = 3;
  double probe_timeout_s = 1;
  // Period of the load-sampling and decision loop.
  double control_interval_s = 1;
  // Concurrent request slots per pod; load is busy time over slots.
  std::size_t pod_slots = 4;
  // Minimum wall time a pod spends on each request. Zero disables it. Used
  // to give pods a fixed capacity that does not depend on the host's cores.
  double emulated_service_ms = 0;
  double drain_timeout_s = 5;

  // Throws InvalidConfig.
  void validate() const;
};

DeploymentConfig parse_deployment_config(std::string_view json_text);
DeploymentConfig load_deployment_config(const std::filesystem::path& path);
std::string deployment_config_json(const DeploymentConfig& cfg);

enum class PodStatus { Starting, Ready, Unhealthy, Terminated };
std::string_view pod_status_name(PodStatus s);

struct PodState {
  std::string pod_id;
  ServiceKind service_kind = ServiceKind::Pca;
  PodStatus status = PodStatus::Starting;
  double last_load = 0;
  int consecutive_probe_failures = 0;
};

struct DeploymentState {
  std::vector<PodState> pods;
  // Time of the last scale-out or scale-in, for the cooldown.
  double last_scale_time = -std::numeric_limits<double>::infinity();

  std::size_t live() const;
};

struct PodSample {
  std::string pod_id;
  double load = 0;
  std::optional<bool> healthy;  // empty when no probe ran this step
};

struct MetricsSnapshot {
  double timestamp = 0;
  std::vector<PodSample> pods;
};

struct ScalingAction {
  enum class Kind { SpawnPod, KillPod, ReplacePod } kind;
  std::string pod_id;  // empty for SpawnPod

  bool operator==(const ScalingAction&) const = default;
};
std::string_view action_name(ScalingAction::Kind k);

// Pure decision function. Loads come from the snapshot when present and from
// the state otherwise; probe failures come from the state.
std::vector<ScalingAction> controller_step(const DeploymentConfig& cfg,
                                           const MetricsSnapshot& snapshot,
                                           const DeploymentState& state, double now);

enum class FaultKind { None, DropAll, Delay, Crash };

struct Fault {
  FaultKind kind = FaultKind::None;
  std::chrono::milliseconds delay{0};

  static Fault none() { return {}; }
  static Fault drop_all() { return {FaultKind::DropAll, {}}; }
  static Fault delayed(std::chrono::milliseconds d) { return {FaultKind::Delay, d}; }
  static Fault crash() { return {FaultKind::Crash, {}}; }
};

// What a pod runs: the service's request handler and its health probe.
struct PodService {
  Handler handler;
  std::function<void()> probe;
  std::shared_ptr<void> owner;  // keeps the service object alive
};
using PodFactory = std::function<PodService(const std::string& pod_id)>;

class Pod {
 public:
  Pod(std::string id, PodService service, std::size_t slots,
      std::chrono::microseconds emulated_service);
  ~Pod();
  Pod(const Pod&) = delete;
  Pod& operator=(const Pod&) = delete;

  const std::string& id() const { return id_; }

  Envelope call(const Envelope& request, std::chrono::milliseconds deadline);
  // Healthy iff the probe completes without error inside the deadline.
  bool probe(std::chrono::milliseconds deadline);

  // Busy-time fraction of all slots since the previous call.
  double sample_load();

  void inject_fault(Fault f);
  std::size_t in_flight() const { return in_flight_.load(); }
  // Stops accepting work and waits for queued requests, up to the timeout.
  bool drain(std::chrono::milliseconds timeout);

 private:
  template <class T>
  std::future<T> submit(std::function<T()> work);
  void begin_busy(std::size_t& slot);
  void end_busy(std::size_t slot);
  double busy_total_ms();

  std::string id_;
  PodService service_;
  std::size_t slots_;
  std::chrono::microseconds emulated_service_;

  mutable std::mutex mu_;
  Fault fault_;
  bool accepting_ = true;
  double busy_done_ms_ = 0;
  std::vector<std::optional<double>> busy_since_;
  double last_sample_at_;
  double busy_at_last_sample_ = 0;
  std::vector<std::shared_ptr<void>> black_hole_;
  std::atomic<std::size_t> in_flight_{0};
  ThreadPool pool_;
};

struct ScalingEvent {
  double timestamp = 0;
  std::string service;
  std::string action;
  std::string pod_id;
  std::size_t replica_count = 0;
};

std::string scaling_event_json(const ScalingEvent& e);
ScalingEvent parse_scaling_event(std::string_view line);

// Newline-delimited scaling events, kept in memory and optionally appended
// to a file.
class ScalingLog {
 public:
  ScalingLog() = default;
  explicit ScalingLog(const std::filesystem::path& path);

  void append(ScalingEvent e);
  std::vector<ScalingEvent> events() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScalingEvent> events_;
  std::ofstream out_;
};

class Deployment {
 public:
  Deployment(DeploymentConfig cfg, PodFactory factory,
             std::shared_ptr<ScalingLog> log = nullptr);
  ~Deployment();
  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  // Spawns min_replicas pods and, if run_loop, starts the control loop.
  void start(bool run_loop = true);
  void stop();

  // Round-robin over Ready pods; NoReadyPods if there are none.
  std::string route();
  // Failures, including NoReadyPods and pod timeouts, come back as Error
  // envelopes. routed_to receives the chosen pod id.
  Envelope call(const Envelope& request, std::chrono::milliseconds deadline,
                std::string* routed_to = nullptr);
  std::shared_ptr<Endpoint> endpoint();
  Handler handler();

  // One pass of the control loop: probe (when due), sample, decide, apply.
  std::vector<ScalingAction> tick();
  MetricsSnapshot take_snapshot(bool probe);
  void apply_actions(const std::vector<ScalingAction>& actions);

  void inject_fault(const std::string& pod_id, Fault f);
  DeploymentState state() const;
  std::size_t live_replicas() const;
  std::size_t ready_replicas() const;
  const DeploymentConfig& config() const { return cfg_; }
  const std::shared_ptr<ScalingLog>& log() const { return log_; }
  std::uint64_t spawn_failures() const { return spawn_failures_.load(); }

 private:
  struct Entry {
    PodState state;
    std::shared_ptr<Pod> pod;
  };
  std::optional<std::string> spawn(const char* reason);
  void terminate(const std::string& pod_id, const char* reason);
  void record(const std::string& action, const std::string& pod_id);
  std::shared_ptr<Pod> find(const std::string& pod_id) const;
  double now() const;

  DeploymentConfig cfg_;
  PodFactory factory_;
  std::shared_ptr<ScalingLog> log_;

  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  double last_scale_time_ = -std::numeric_limits<double>::infinity();
  double last_probe_time_ = -std::numeric_limits<double>::infinity();
  std::size_t rr_ = 0;
  std::uint64_t next_pod_ = 0;
  std::atomic<std::uint64_t> spawn_failures_{0};

  std::mutex drain_mu_;
  std::vector<std::thread> drains_;
  std::jthread loop_;
};

// Factories building one service instance per pod over a shared store.
PodFactory ltca_pod_factory(LtcaConfig cfg, AuthorityCredential cred,
                            std::vector<Certificate> anchors, std::shared_ptr<Store> store);
PodFactory pca_pod_factory(PcaConfig cfg, AuthorityCredential cred, Certificate ltca_cert,
                           std::vector<Certificate> anchors, std::shared_ptr<Store> store,
                           std::function<Ticket()> probe_ticket);

}  // namespace vpki
