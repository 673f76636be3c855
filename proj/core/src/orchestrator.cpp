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
#include "vpki/orchestrator.hpp"

#include <algorithm>
#include <condition_variable>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vpki/error.hpp"
#include "vpki/pki.hpp"

namespace vpki {
using nlohmann::json;

std::string_view service_kind_name(ServiceKind k) {
  return k == ServiceKind::Ltca ? "ltca" : "pca";
}

ServiceKind service_kind_from_name(std::string_view name) {
  if (name == "ltca") return ServiceKind::Ltca;
  if (name == "pca") return ServiceKind::Pca;
  fail(Errc::InvalidConfig, "unknown service kind '" + std::string(name) + "'");
}

std::string_view pod_status_name(PodStatus s) {
  switch (s) {
    case PodStatus::Starting: return "starting";
    case PodStatus::Ready: return "ready";
    case PodStatus::Unhealthy: return "unhealthy";
    case PodStatus::Terminated: return "terminated";
  }
  return "?";
}

std::string_view action_name(ScalingAction::Kind k) {
  switch (k) {
    case ScalingAction::Kind::SpawnPod: return "spawn";
    case ScalingAction::Kind::KillPod: return "kill";
    case ScalingAction::Kind::ReplacePod: return "replace";
  }
  return "?";
}

void DeploymentConfig::validate() const {
  auto bad = [](const std::string& what) { fail(Errc::InvalidConfig, what); };
  if (service_name.empty()) bad("service_name must be non-empty");
  if (min_replicas < 1) bad("min_replicas must be at least 1");
  if (max_replicas < min_replicas) bad("max_replicas must be >= min_replicas");
  if (!(scale_out_threshold > 0 && scale_out_threshold <= 1)) {
    bad("scale_out_threshold must be in (0, 1]");
  }
  if (!(scale_in_threshold >= 0 && scale_in_threshold < scale_out_threshold)) {
    bad("scale_in_threshold must be in [0, scale_out_threshold)");
  }
  if (!(cooldown_s >= 0)) bad("cooldown_s must be >= 0");
  if (!(probe_interval_s > 0)) bad("probe_interval_s must be > 0");
  if (probe_failure_threshold < 1) bad("probe_failure_threshold must be >= 1");
  if (!(probe_timeout_s > 0)) bad("probe_timeout_s must be > 0");
  if (!(control_interval_s > 0)) bad("control_interval_s must be > 0");
  if (pod_slots < 1) bad("pod_slots must be >= 1");
  if (!(emulated_service_ms >= 0)) bad("emulated_service_ms must be >= 0");
  if (!(drain_timeout_s >= 0)) bad("drain_timeout_s must be >= 0");
}

DeploymentConfig parse_deployment_config(std::string_view json_text) {
  DeploymentConfig cfg;
  try {
    auto j = json::parse(json_text);
    if (!j.is_object()) fail(Errc::InvalidConfig, "deployment config must be a JSON object");
    static const std::set<std::string> known{
        "service_kind",      "service_name",       "min_replicas",
        "max_replicas",      "scale_out_threshold", "scale_in_threshold",
        "cooldown_s",        "probe_interval_s",    "probe_failure_threshold",
        "probe_timeout_s",   "control_interval_s",  "pod_slots",
        "emulated_service_ms", "drain_timeout_s"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) fail(Errc::InvalidConfig, "unknown config key '" + key + "'");
    }
    if (j.contains("service_kind")) {
      cfg.service_kind = service_kind_from_name(j["service_kind"].get<std::string>());
      cfg.service_name = std::string(service_kind_name(cfg.service_kind));
    }
    cfg.service_name = j.value("service_name", cfg.service_name);
    cfg.min_replicas = j.value("min_replicas", cfg.min_replicas);
    cfg.max_replicas = j.value("max_replicas", cfg.max_replicas);
    cfg.scale_out_threshold = j.value("scale_out_threshold", cfg.scale_out_threshold);
    cfg.scale_in_threshold = j.value("scale_in_threshold", cfg.scale_in_threshold);
    cfg.cooldown_s = j.value("cooldown_s", cfg.cooldown_s);
    cfg.probe_interval_s = j.value("probe_interval_s", cfg.probe_interval_s);
    cfg.probe_failure_threshold = j.value("probe_failure_threshold", cfg.probe_failure_threshold);
    cfg.probe_timeout_s = j.value("probe_timeout_s", cfg.probe_timeout_s);
    cfg.control_interval_s = j.value("control_interval_s", cfg.control_interval_s);
    cfg.pod_slots = j.value("pod_slots", cfg.pod_slots);
    cfg.emulated_service_ms = j.value("emulated_service_ms", cfg.emulated_service_ms);
    cfg.drain_timeout_s = j.value("drain_timeout_s", cfg.drain_timeout_s);
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("deployment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

DeploymentConfig load_deployment_config(const std::filesystem::path& path) {
  auto raw = read_file(path);
  return parse_deployment_config(std::string(raw.begin(), raw.end()));
}

std::string deployment_config_json(const DeploymentConfig& cfg) {
  json j{{"service_kind", service_kind_name(cfg.service_kind)},
         {"service_name", cfg.service_name},
         {"min_replicas", cfg.min_replicas},
         {"max_replicas", cfg.max_replicas},
         {"scale_out_threshold", cfg.scale_out_threshold},
         {"scale_in_threshold", cfg.scale_in_threshold},
         {"cooldown_s", cfg.cooldown_s},
         {"probe_interval_s", cfg.probe_interval_s},
         {"probe_failure_threshold", cfg.probe_failure_threshold},
         {"probe_timeout_s", cfg.probe_timeout_s},
         {"control_interval_s", cfg.control_interval_s},
         {"pod_slots", cfg.pod_slots},
         {"emulated_service_ms", cfg.emulated_service_ms},
         {"drain_timeout_s", cfg.drain_timeout_s}};
  return j.dump(2);
}

std::size_t DeploymentState::live() const {
  return static_cast<std::size_t>(std::count_if(pods.begin(), pods.end(), [](const PodState& p) {
    return p.status != PodStatus::Terminated;
  }));
}

std::vector<ScalingAction> controller_step(const DeploymentConfig& cfg,
                                           const MetricsSnapshot& snapshot,
                                           const DeploymentState& state, double now) {
  using Kind = ScalingAction::Kind;
  std::map<std::string, double> sampled;
  for (const auto& s : snapshot.pods) sampled[s.pod_id] = s.load;
  auto load_of = [&](const PodState& p) {
    auto it = sampled.find(p.pod_id);
    return it == sampled.end() ? p.last_load : it->second;
  };

  std::vector<ScalingAction> actions;
  std::vector<const PodState*> live;
  std::set<std::string> replacing;
  for (const auto& p : state.pods) {
    if (p.status == PodStatus::Terminated) continue;
    live.push_back(&p);
    if (p.consecutive_probe_failures >= cfg.probe_failure_threshold) {
      actions.push_back({Kind::ReplacePod, p.pod_id});
      replacing.insert(p.pod_id);
    }
  }

  std::vector<const PodState*> ready;
  for (const auto* p : live) {
    if (p->status == PodStatus::Ready && !replacing.count(p->pod_id)) ready.push_back(p);
  }
  auto least_loaded = [&](const std::vector<const PodState*>& pool) {
    return *std::min_element(pool.begin(), pool.end(), [&](const PodState* a, const PodState* b) {
      auto la = load_of(*a), lb = load_of(*b);
      return la != lb ? la < lb : a->pod_id < b->pod_id;
    });
  };

  const auto n = live.size();
  if (n < cfg.min_replicas) {
    actions.push_back({Kind::SpawnPod, {}});
    return actions;
  }
  if (n > cfg.max_replicas) {
    std::vector<const PodState*> pool;
    for (const auto* p : live) {
      if (!replacing.count(p->pod_id)) pool.push_back(p);
    }
    if (!pool.empty()) actions.push_back({Kind::KillPod, least_loaded(pool)->pod_id});
    return actions;
  }

  if (ready.empty() || now - state.last_scale_time < cfg.cooldown_s) return actions;
  double mean = 0;
  for (const auto* p : ready) mean += load_of(*p);
  mean /= static_cast<double>(ready.size());
  if (mean > cfg.scale_out_threshold && n < cfg.max_replicas) {
    actions.push_back({Kind::SpawnPod, {}});
  } else if (mean < cfg.scale_in_threshold && n > cfg.min_replicas) {
    actions.push_back({Kind::KillPod, least_loaded(ready)->pod_id});
  }
  return actions;
}

// ---------------------------------------------------------------- Pod

Pod::Pod(std::string id, PodService service, std::size_t slots,
         std::chrono::microseconds emulated_service)
    : id_(std::move(id)),
      service_(std::move(service)),
      slots_(std::max<std::size_t>(slots, 1)),
      emulated_service_(emulated_service),
      busy_since_(slots_),
      last_sample_at_(monotonic_ms()),
      pool_(slots_) {}

Pod::~Pod() {
  {
    std::lock_guard lock(mu_);
    accepting_ = false;
    black_hole_.clear();
  }
  pool_.shutdown();
}

void Pod::begin_busy(std::size_t& slot) {
  std::lock_guard lock(mu_);
  for (slot = 0; slot < busy_since_.size(); ++slot) {
    if (!busy_since_[slot]) break;
  }
  if (slot == busy_since_.size()) busy_since_.emplace_back();
  busy_since_[slot] = monotonic_ms();
}

void Pod::end_busy(std::size_t slot) {
  std::lock_guard lock(mu_);
  busy_done_ms_ += monotonic_ms() - *busy_since_[slot];
  busy_since_[slot].reset();
}

double Pod::busy_total_ms() {
  double total = busy_done_ms_;
  const double t = monotonic_ms();
  for (const auto& since : busy_since_) {
    if (since) total += t - *since;
  }
  return total;
}

double Pod::sample_load() {
  std::lock_guard lock(mu_);
  const double t = monotonic_ms();
  const double busy = busy_total_ms();
  const double window = t - last_sample_at_;
  double load = 0;
  if (window > 0) {
    load = (busy - busy_at_last_sample_) / (static_cast<double>(slots_) * window);
  }
  last_sample_at_ = t;
  busy_at_last_sample_ = busy;
  return std::clamp(load, 0.0, 1.0);
}

void Pod::inject_fault(Fault f) {
  std::lock_guard lock(mu_);
  fault_ = f;
  if (f.kind == FaultKind::None) black_hole_.clear();
}

template <class T>
std::future<T> Pod::submit(std::function<T()> work) {
  auto promise = std::make_shared<std::promise<T>>();
  auto future = promise->get_future();
  auto unavailable = [this] {
    return std::make_exception_ptr(VpkiError(Errc::PodUnavailable, "pod " + id_ + " is down"));
  };
  {
    std::lock_guard lock(mu_);
    if (!accepting_ || fault_.kind == FaultKind::Crash) {
      promise->set_exception(unavailable());
      return future;
    }
  }
  ++in_flight_;
  pool_.submit([this, promise, work = std::move(work), unavailable] {
    Fault f;
    {
      std::lock_guard lock(mu_);
      f = fault_;
      if (f.kind == FaultKind::DropAll) black_hole_.push_back(promise);
    }
    if (f.kind == FaultKind::Crash) {
      promise->set_exception(unavailable());
    } else if (f.kind != FaultKind::DropAll) {
      std::size_t slot = 0;
      begin_busy(slot);
      const auto started = std::chrono::steady_clock::now();
      if (f.kind == FaultKind::Delay) std::this_thread::sleep_for(f.delay);
      std::exception_ptr error;
      std::optional<T> value;
      try {
        value.emplace(work());
      } catch (...) {
        error = std::current_exception();
      }
      std::this_thread::sleep_until(started + emulated_service_);
      end_busy(slot);
      if (error) {
        promise->set_exception(error);
      } else {
        promise->set_value(std::move(*value));
      }
    }
    --in_flight_;
  });
  return future;
}

Envelope Pod::call(const Envelope& request, std::chrono::milliseconds deadline) {
  auto future = submit<Envelope>([this, request] {
    return dispatch_safely(service_.handler, request);
  });
  if (future.wait_for(deadline) != std::future_status::ready) {
    fail(Errc::Timeout, "pod " + id_ + " did not answer within " +
                            std::to_string(deadline.count()) + " ms");
  }
  try {
    return future.get();
  } catch (const std::future_error&) {
    fail(Errc::PodUnavailable, "pod " + id_ + " dropped the request");
  }
}

bool Pod::probe(std::chrono::milliseconds deadline) {
  auto future = submit<bool>([this] {
    service_.probe();
    return true;
  });
  if (future.wait_for(deadline) != std::future_status::ready) return false;
  try {
    return future.get();
  } catch (...) {
    return false;
  }
}

bool Pod::drain(std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(mu_);
    accepting_ = false;
  }
  const auto until = std::chrono::steady_clock::now() + timeout;
  while (in_flight_.load() > 0 && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  std::lock_guard lock(mu_);
  black_hole_.clear();
  return in_flight_.load() == 0;
}

// ---------------------------------------------------------------- scaling log

std::string scaling_event_json(const ScalingEvent& e) {
  return json{{"timestamp", e.timestamp},
              {"service", e.service},
              {"action", e.action},
              {"pod_id", e.pod_id},
              {"replica_count", e.replica_count}}
      .dump();
}

ScalingEvent parse_scaling_event(std::string_view line) {
  try {
    auto j = json::parse(line);
    ScalingEvent e;
    e.timestamp = j.at("timestamp").get<double>();
    e.service = j.value("service", "");
    e.action = j.at("action").get<std::string>();
    e.pod_id = j.value("pod_id", "");
    e.replica_count = j.at("replica_count").get<std::size_t>();
    return e;
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("scaling event: ") + e.what());
  }
}

ScalingLog::ScalingLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) fail(Errc::InvalidArgument, "cannot open scaling log " + path.string());
}

void ScalingLog::append(ScalingEvent e) {
  std::lock_guard lock(mu_);
  if (out_.is_open()) out_ << scaling_event_json(e) << '\n' << std::flush;
  events_.push_back(std::move(e));
}

std::vector<ScalingEvent> ScalingLog::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

// ---------------------------------------------------------------- Deployment

namespace {

class DeploymentEndpoint final : public Endpoint {
 public:
  explicit DeploymentEndpoint(Deployment* d) : d_(d) {}
  Envelope call(Envelope request, std::chrono::milliseconds deadline) override {
    return d_->call(request, deadline);
  }

 private:
  Deployment* d_;
};

}  // namespace

Deployment::Deployment(DeploymentConfig cfg, PodFactory factory,
                       std::shared_ptr<ScalingLog> log)
    : cfg_(std::move(cfg)), factory_(std::move(factory)), log_(std::move(log)) {
  cfg_.validate();
  if (!log_) log_ = std::make_shared<ScalingLog>();
}

Deployment::~Deployment() { stop(); }

double Deployment::now() const { return monotonic_ms() / 1000.0; }

void Deployment::record(const std::string& action, const std::string& pod_id) {
  log_->append({unix_ms() / 1000.0, cfg_.service_name, action, pod_id, live_replicas()});
}

std::optional<std::string> Deployment::spawn(const char* reason) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = cfg_.service_name + "-" + std::to_string(next_pod_++);
  }
  std::shared_ptr<Pod> pod;
  try {
    pod = std::make_shared<Pod>(
        id, factory_(id), cfg_.pod_slots,
        std::chrono::microseconds(static_cast<std::int64_t>(cfg_.emulated_service_ms * 1000)));
  } catch (const std::exception&) {
    ++spawn_failures_;
    record("spawn_failed", id);
    return std::nullopt;
  }
  {
    std::lock_guard lock(mu_);
    entries_.push_back({{id, cfg_.service_kind, PodStatus::Starting, 0, 0}, pod});
  }
  const bool ok = pod->probe(
      std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.probe_timeout_s * 1000)));
  {
    std::lock_guard lock(mu_);
    for (auto& e : entries_) {
      if (e.state.pod_id != id || e.state.status == PodStatus::Terminated) continue;
      e.state.status = ok ? PodStatus::Ready : PodStatus::Unhealthy;
      e.state.consecutive_probe_failures = ok ? 0 : 1;
    }
  }
  record(reason, id);
  return id;
}

void Deployment::terminate(const std::string& pod_id, const char* reason) {
  std::shared_ptr<Pod> pod;
  {
    std::lock_guard lock(mu_);
    for (auto& e : entries_) {
      if (e.state.pod_id == pod_id && e.state.status != PodStatus::Terminated) {
        e.state.status = PodStatus::Terminated;
        pod = std::move(e.pod);
      }
    }
  }
  if (!pod) return;
  if (reason) record(reason, pod_id);
  auto timeout =
      std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.drain_timeout_s * 1000));
  std::lock_guard lock(drain_mu_);
  drains_.emplace_back([pod = std::move(pod), timeout]() mutable {
    pod->drain(timeout);
    pod.reset();
  });
}

void Deployment::start(bool run_loop) {
  for (std::size_t i = 0; i < cfg_.min_replicas; ++i) spawn("start");
  if (!run_loop) return;
  loop_ = std::jthread([this](std::stop_token st) {
    std::mutex m;
    std::condition_variable_any cv;
    const auto period =
        std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.control_interval_s * 1000));
    auto next = std::chrono::steady_clock::now() + period;
    while (!st.stop_requested()) {
      {
        std::unique_lock lock(m);
        cv.wait_until(lock, st, next, [] { return false; });
      }
      if (st.stop_requested()) break;
      tick();
      next += period;
      auto t = std::chrono::steady_clock::now();
      if (next < t) next = t + period;
    }
  });
}

void Deployment::stop() {
  if (loop_.joinable()) {
    loop_.request_stop();
    loop_.join();
  }
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_) {
      if (e.state.status != PodStatus::Terminated) ids.push_back(e.state.pod_id);
    }
  }
  for (const auto& id : ids) terminate(id, nullptr);
  std::vector<std::thread> drains;
  {
    std::lock_guard lock(drain_mu_);
    drains.swap(drains_);
  }
  for (auto& t : drains) t.join();
}

std::shared_ptr<Pod> Deployment::find(const std::string& pod_id) const {
  std::lock_guard lock(mu_);
  for (const auto& e : entries_) {
    if (e.state.pod_id == pod_id && e.state.status != PodStatus::Terminated) return e.pod;
  }
  return nullptr;
}

std::string Deployment::route() {
  std::lock_guard lock(mu_);
  std::vector<const Entry*> ready;
  for (const auto& e : entries_) {
    if (e.state.status == PodStatus::Ready) ready.push_back(&e);
  }
  if (ready.empty()) fail(Errc::NoReadyPods, "no Ready pods for " + cfg_.service_name);
  return ready[rr_++ % ready.size()]->state.pod_id;
}

Envelope Deployment::call(const Envelope& request, std::chrono::milliseconds deadline,
                          std::string* routed_to) {
  try {
    std::shared_ptr<Pod> pod;
    {
      auto id = route();
      if (routed_to) *routed_to = id;
      pod = find(id);
    }
    if (!pod) fail(Errc::PodUnavailable, "pod terminated while routing");
    return pod->call(request, deadline);
  } catch (const VpkiError& e) {
    return make_error_response(request, e.code(), e.message(), e.detail(),
                               e.step().empty() ? cfg_.service_name : e.step());
  }
}

std::shared_ptr<Endpoint> Deployment::endpoint() {
  return std::make_shared<DeploymentEndpoint>(this);
}

Handler Deployment::handler() {
  return [this](const Envelope& e) { return call(e, std::chrono::milliseconds(30000)); };
}

MetricsSnapshot Deployment::take_snapshot(bool probe) {
  std::vector<std::pair<std::string, std::shared_ptr<Pod>>> live;
  {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_) {
      if (e.state.status != PodStatus::Terminated) live.emplace_back(e.state.pod_id, e.pod);
    }
  }
  MetricsSnapshot snap;
  snap.timestamp = now();
  std::vector<std::future<bool>> probes;
  if (probe) {
    auto timeout =
        std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.probe_timeout_s * 1000));
    for (auto& [id, pod] : live) {
      probes.push_back(std::async(std::launch::async, [p = pod, timeout] {
        return p->probe(timeout);
      }));
    }
  }
  for (std::size_t i = 0; i < live.size(); ++i) {
    PodSample s{live[i].first, live[i].second->sample_load(), std::nullopt};
    if (probe) s.healthy = probes[i].get();
    snap.pods.push_back(std::move(s));
  }
  std::lock_guard lock(mu_);
  for (const auto& s : snap.pods) {
    for (auto& e : entries_) {
      if (e.state.pod_id != s.pod_id || e.state.status == PodStatus::Terminated) continue;
      e.state.last_load = s.load;
      if (!s.healthy) continue;
      if (*s.healthy) {
        e.state.consecutive_probe_failures = 0;
        e.state.status = PodStatus::Ready;
      } else {
        ++e.state.consecutive_probe_failures;
        e.state.status = PodStatus::Unhealthy;
      }
    }
  }
  return snap;
}

std::vector<ScalingAction> Deployment::tick() {
  const double t = now();
  const bool probe_due = t - last_probe_time_ >= cfg_.probe_interval_s - 1e-3;
  if (probe_due) last_probe_time_ = t;
  auto snap = take_snapshot(probe_due);
  DeploymentState st = state();
  auto actions = controller_step(cfg_, snap, st, now());
  apply_actions(actions);
  return actions;
}

void Deployment::apply_actions(const std::vector<ScalingAction>& actions) {
  for (const auto& a : actions) {
    switch (a.kind) {
      case ScalingAction::Kind::SpawnPod:
        spawn("spawn");
        {
          std::lock_guard lock(mu_);
          last_scale_time_ = now();
        }
        break;
      case ScalingAction::Kind::KillPod:
        terminate(a.pod_id, "kill");
        {
          std::lock_guard lock(mu_);
          last_scale_time_ = now();
        }
        break;
      case ScalingAction::Kind::ReplacePod:
        terminate(a.pod_id, "replace");
        spawn("spawn");
        break;
    }
  }
}

void Deployment::inject_fault(const std::string& pod_id, Fault f) {
  auto pod = find(pod_id);
  if (!pod) fail(Errc::PodUnavailable, "no live pod '" + pod_id + "'");
  pod->inject_fault(f);
}

DeploymentState Deployment::state() const {
  std::lock_guard lock(mu_);
  DeploymentState st;
  st.last_scale_time = last_scale_time_;
  for (const auto& e : entries_) st.pods.push_back(e.state);
  return st;
}

std::size_t Deployment::live_replicas() const { return state().live(); }

std::size_t Deployment::ready_replicas() const {
  auto st = state();
  return static_cast<std::size_t>(std::count_if(
      st.pods.begin(), st.pods.end(), [](const PodState& p) { return p.status == PodStatus::Ready; }));
}

// ---------------------------------------------------------------- factories

PodFactory ltca_pod_factory(LtcaConfig cfg, AuthorityCredential cred,
                            std::vector<Certificate> anchors, std::shared_ptr<Store> store) {
  return [=](const std::string&) {
    auto ltca = std::make_shared<Ltca>(cfg, cred, anchors, store);
    return PodService{ltca->handler(), [ltca] { ltca->probe(); }, ltca};
  };
}

PodFactory pca_pod_factory(PcaConfig cfg, AuthorityCredential cred, Certificate ltca_cert,
                           std::vector<Certificate> anchors, std::shared_ptr<Store> store,
                           std::function<Ticket()> probe_ticket) {
  return [=](const std::string&) {
    auto pca = std::make_shared<Pca>(cfg, cred, ltca_cert, anchors, store);
    pca->set_probe_ticket(probe_ticket());
    return PodService{pca->handler(), [pca] { pca->probe(); }, pca};
  };
}

}  // namespace vpki
