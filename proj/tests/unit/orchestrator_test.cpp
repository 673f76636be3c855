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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <thread>

#include <unistd.h>

#include "errc_matchers.hpp"
#include "fixture.hpp"
#include "vpki/messages.hpp"

namespace vpki {
namespace {

using namespace std::chrono_literals;
using testing::code_of;
using Kind = ScalingAction::Kind;

DeploymentConfig base_config() {
  DeploymentConfig c;
  c.min_replicas = 1;
  c.max_replicas = 4;
  c.scale_out_threshold = 0.6;
  c.scale_in_threshold = 0.3;
  c.cooldown_s = 10;
  c.probe_failure_threshold = 3;
  return c;
}

PodState ready(std::string id, double load, int failures = 0) {
  return {std::move(id), ServiceKind::Pca, PodStatus::Ready, load, failures};
}

DeploymentState state_of(std::vector<PodState> pods, double last_scale = -1e9) {
  DeploymentState s;
  s.pods = std::move(pods);
  s.last_scale_time = last_scale;
  return s;
}

// ---------------------------------------------------------------- controller

struct Case {
  const char* name;
  DeploymentState state;
  MetricsSnapshot snapshot;
  double now;
  std::vector<ScalingAction> expected;
};

// Each row stepped by hand through the rules: replace faulty pods; clamp to
// [min, max]; otherwise, once the cooldown has passed, compare the mean Ready
// load against the two thresholds.
TEST(Controller, HandSteppedRuleTable) {
  auto cfg = base_config();
  std::vector<Case> cases{
      {"two hot pods scale out", state_of({ready("p0", 0.9), ready("p1", 0.7)}), {}, 100,
       {{Kind::SpawnPod, ""}}},
      {"three cool pods drop the least loaded",
       state_of({ready("p0", 0.2), ready("p1", 0.1), ready("p2", 0.2)}), {}, 100,
       {{Kind::KillPod, "p1"}}},
      {"never below min", state_of({ready("p0", 0.05)}), {}, 100, {}},
      {"cooldown holds scale out", state_of({ready("p0", 0.9), ready("p1", 0.7)}, 95), {}, 100,
       {}},
      {"cooldown boundary is inclusive", state_of({ready("p0", 0.9), ready("p1", 0.7)}, 90), {},
       100, {{Kind::SpawnPod, ""}}},
      {"at max no spawn",
       state_of({ready("p0", 1), ready("p1", 1), ready("p2", 1), ready("p3", 1)}), {}, 100, {}},
      {"mean equal to threshold is not above", state_of({ready("p0", 0.6), ready("p1", 0.6)}), {},
       100, {}},
      {"mean between thresholds", state_of({ready("p0", 0.5), ready("p1", 0.35)}), {}, 100, {}},
      {"equal loads kill the lowest id", state_of({ready("p1", 0.1), ready("p0", 0.1)}), {}, 100,
       {{Kind::KillPod, "p0"}}},
      {"faulty pod is replaced", state_of({ready("p0", 0.5), ready("p1", 0.0, 3)}), {}, 100,
       {{Kind::ReplacePod, "p1"}}},
      {"replaced pod excluded from mean",
       state_of({ready("p0", 0.9), ready("p1", 0.0, 4)}), {}, 100,
       {{Kind::ReplacePod, "p1"}, {Kind::SpawnPod, ""}}},
      {"empty deployment spawns", state_of({}), {}, 100, {{Kind::SpawnPod, ""}}},
      {"over max kills regardless of cooldown",
       state_of({ready("p0", 0.9), ready("p1", 0.8), ready("p2", 0.95), ready("p3", 0.9),
                 ready("p4", 0.99)},
                99),
       {}, 100, {{Kind::KillPod, "p1"}}},
      {"unhealthy pods do not count toward mean",
       state_of({ready("p0", 0.9),
                 {"p1", ServiceKind::Pca, PodStatus::Unhealthy, 0.0, 1}}),
       {}, 100, {{Kind::SpawnPod, ""}}},
      {"terminated pods are ignored",
       state_of({ready("p0", 0.1), {"p1", ServiceKind::Pca, PodStatus::Terminated, 0.0, 9}}), {},
       100, {}},
      {"snapshot load wins over stale state",
       state_of({ready("p0", 0.1), ready("p1", 0.1)}),
       MetricsSnapshot{100, {{"p0", 0.95, std::nullopt}, {"p1", 0.9, true}}}, 100,
       {{Kind::SpawnPod, ""}}},
      {"no ready pods no scaling",
       state_of({{"p0", ServiceKind::Pca, PodStatus::Starting, 0.9, 0}}), {}, 100, {}},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(controller_step(cfg, c.snapshot, c.state, c.now), c.expected) << c.name;
  }
}

// Random inputs: bounds hold after applying, a step never both grows and
// shrinks the service, and identical inputs give identical outputs.
TEST(Controller, PropertiesOverRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int iter = 0; iter < 5000; ++iter) {
    DeploymentConfig cfg;
    cfg.min_replicas = 1 + rng() % 3;
    cfg.max_replicas = cfg.min_replicas + rng() % 4;
    cfg.scale_out_threshold = 0.5 + 0.5 * u(rng);
    cfg.scale_in_threshold = cfg.scale_out_threshold * u(rng);
    cfg.cooldown_s = static_cast<double>(rng() % 20);
    cfg.probe_failure_threshold = 1 + static_cast<int>(rng() % 3);

    std::vector<PodState> pods;
    const auto n = cfg.min_replicas + rng() % (cfg.max_replicas - cfg.min_replicas + 1);
    for (std::size_t i = 0; i < n; ++i) {
      pods.push_back({"p" + std::to_string(i), ServiceKind::Pca,
                      rng() % 5 == 0 ? PodStatus::Unhealthy : PodStatus::Ready, u(rng),
                      rng() % 6 == 0 ? static_cast<int>(rng() % 5) : 0});
    }
    auto st = state_of(pods, static_cast<double>(rng() % 40));
    const double now = 40;
    auto a1 = controller_step(cfg, {}, st, now);
    auto a2 = controller_step(cfg, {}, st, now);
    ASSERT_EQ(a1, a2);

    long live = static_cast<long>(n);
    bool spawn = false, kill = false;
    for (const auto& a : a1) {
      if (a.kind == Kind::SpawnPod) ++live, spawn = true;
      if (a.kind == Kind::KillPod) --live, kill = true;
    }
    ASSERT_FALSE(spawn && kill);
    ASSERT_GE(live, static_cast<long>(cfg.min_replicas));
    ASSERT_LE(live, static_cast<long>(cfg.max_replicas));
    for (const auto& p : pods) {
      bool replaced = std::count(a1.begin(), a1.end(), ScalingAction{Kind::ReplacePod, p.pod_id});
      ASSERT_EQ(replaced, p.consecutive_probe_failures >= cfg.probe_failure_threshold);
    }
  }
}

// Closed-form driver: offered load rises then falls; each Ready pod carries
// an equal share. The replica series must rise then fall, and never shrink
// while the mean load is above the scale-out threshold.
TEST(Controller, TracksRisingThenFallingLoad) {
  auto cfg = base_config();
  cfg.max_replicas = 6;
  cfg.cooldown_s = 3;
  DeploymentState st = state_of({ready("p0", 0)});
  int next_id = 1;
  std::vector<std::size_t> series;
  for (int t = 0; t < 240; ++t) {
    const double offered = t < 120 ? t * 0.04 : (240 - t) * 0.04;  // in pod units
    const double share = std::min(1.0, offered / static_cast<double>(st.pods.size()));
    for (auto& p : st.pods) p.last_load = share;
    auto actions = controller_step(cfg, {}, st, t);
    for (const auto& a : actions) {
      if (a.kind == Kind::SpawnPod) {
        st.pods.push_back(ready("p" + std::to_string(next_id++), share));
      } else if (a.kind == Kind::KillPod) {
        ASSERT_LE(share, cfg.scale_out_threshold) << "scaled in under load at t=" << t;
        std::erase_if(st.pods, [&](const PodState& p) { return p.pod_id == a.pod_id; });
      }
      st.last_scale_time = t;
    }
    series.push_back(st.pods.size());
  }
  auto peak = std::max_element(series.begin(), series.end());
  EXPECT_GE(*peak, 4u);
  EXPECT_TRUE(std::is_sorted(series.begin(), peak + 1));
  EXPECT_TRUE(std::is_sorted(peak, series.end(), std::greater<>()));
  EXPECT_EQ(series.back(), 1u);
}

// ---------------------------------------------------------------- config

TEST(Config, JsonRoundTripAndValidation) {
  auto cfg = base_config();
  cfg.service_kind = ServiceKind::Ltca;
  cfg.service_name = "ltca";
  auto back = parse_deployment_config(deployment_config_json(cfg));
  EXPECT_EQ(back.service_kind, ServiceKind::Ltca);
  EXPECT_EQ(back.min_replicas, cfg.min_replicas);
  EXPECT_EQ(back.scale_out_threshold, cfg.scale_out_threshold);
  EXPECT_EQ(back.cooldown_s, cfg.cooldown_s);

  auto partial = parse_deployment_config(R"({"max_replicas": 9, "cooldown_s": 1})");
  EXPECT_EQ(partial.max_replicas, 9u);
  EXPECT_EQ(partial.min_replicas, DeploymentConfig{}.min_replicas);

  for (const char* bad : {
           R"({"min_replicas": 0})",
           R"({"min_replicas": 5, "max_replicas": 4})",
           R"({"scale_out_threshold": 0})",
           R"({"scale_out_threshold": 1.5})",
           R"({"scale_in_threshold": 0.8, "scale_out_threshold": 0.7})",
           R"({"probe_failure_threshold": 0})",
           R"({"service_kind": "ra"})",
           R"({"scale_out": 0.5})",
           R"([1, 2])",
           "not json",
       }) {
    EXPECT_EQ(code_of([&] { parse_deployment_config(bad); }), Errc::InvalidConfig) << bad;
  }
}

// ---------------------------------------------------------------- pods

Envelope pong(const Envelope& req) {
  Envelope r = req;
  r.type = MessageType::Pong;
  return r;
}

PodService echo_service() { return {pong, [] {}, nullptr}; }

PodFactory echo_factory() {
  return [](const std::string&) { return echo_service(); };
}

TEST(Pod, IdleLoadIsZero) {
  Pod pod("p", echo_service(), 2, 0us);
  std::this_thread::sleep_for(50ms);
  EXPECT_EQ(pod.sample_load(), 0.0);
}

// Saturation harness: more clients than slots keep the pod busy for the
// whole window.
TEST(Pod, SaturatedLoadNearOne) {
  Pod pod("p", echo_service(), 2, 20ms);
  std::atomic<bool> run{true};
  std::vector<std::thread> clients;
  for (int i = 0; i < 6; ++i) {
    clients.emplace_back([&] {
      while (run) pod.call({1, MessageType::Ping, 0, {}}, 5s);
    });
  }
  std::this_thread::sleep_for(100ms);
  pod.sample_load();
  std::this_thread::sleep_for(600ms);
  double load = pod.sample_load();
  run = false;
  for (auto& c : clients) c.join();
  EXPECT_GE(load, 0.95);
}

// Calibrate the pod's maximum throughput, then offer half of it.
TEST(Pod, HalfThroughputGivesHalfLoad) {
  Pod pod("p", echo_service(), 2, 20ms);
  std::atomic<bool> run{true};
  std::atomic<int> done{0};
  {
    std::vector<std::thread> clients;
    for (int i = 0; i < 6; ++i) {
      clients.emplace_back([&] {
        while (run) {
          pod.call({1, MessageType::Ping, 0, {}}, 5s);
          ++done;
        }
      });
    }
    std::this_thread::sleep_for(100ms);
    done = 0;
    std::this_thread::sleep_for(1000ms);
    run = false;
    for (auto& c : clients) c.join();
  }
  const double max_rps = done.load() / 1.0;
  ASSERT_GT(max_rps, 10);

  const double target = max_rps / 2;
  const auto interval = std::chrono::duration<double>(2.0 / target);  // two paced clients
  pod.sample_load();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> paced;
  for (int c = 0; c < 2; ++c) {
    paced.emplace_back([&, c] {
      auto next = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           interval * (c * 0.5));
      while (next < t0 + 1500ms) {
        std::this_thread::sleep_until(next);
        pod.call({1, MessageType::Ping, 0, {}}, 5s);
        next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
      }
    });
  }
  for (auto& t : paced) t.join();
  double load = pod.sample_load();
  EXPECT_NEAR(load, 0.5, 0.15) << "max throughput " << max_rps << " req/s";
}

TEST(Pod, FaultsFailTheProbe) {
  Pod pod("p", echo_service(), 2, 0us);
  EXPECT_TRUE(pod.probe(500ms));

  pod.inject_fault(Fault::drop_all());
  EXPECT_FALSE(pod.probe(100ms));
  EXPECT_EQ(code_of([&] { pod.call({1, MessageType::Ping, 0, {}}, 100ms); }), Errc::Timeout);

  pod.inject_fault(Fault::delayed(300ms));
  EXPECT_FALSE(pod.probe(100ms));
  EXPECT_TRUE(pod.probe(1000ms));

  pod.inject_fault(Fault::crash());
  EXPECT_FALSE(pod.probe(500ms));
  EXPECT_EQ(code_of([&] { pod.call({1, MessageType::Ping, 0, {}}, 500ms); }),
            Errc::PodUnavailable);

  pod.inject_fault(Fault::none());
  EXPECT_TRUE(pod.probe(500ms));
}

TEST(Pod, DrainLetsInFlightRequestFinish) {
  Pod pod("p", echo_service(), 1, 300ms);
  auto fut = std::async(std::launch::async,
                        [&] { return pod.call({1, MessageType::Ping, 0, {}}, 5s); });
  std::this_thread::sleep_for(50ms);
  EXPECT_EQ(pod.in_flight(), 1u);
  EXPECT_TRUE(pod.drain(5s));
  EXPECT_EQ(fut.get().type, MessageType::Pong);
  EXPECT_EQ(code_of([&] { pod.call({1, MessageType::Ping, 0, {}}, 100ms); }),
            Errc::PodUnavailable);
}

TEST(Pod, HealthyPcaAndLtcaReplicasPassProbes) {
  testing::World w;
  auto pca_factory = pca_pod_factory(PcaConfig{}, w.pki.pca("pca"), w.pki.ltca.cert,
                                     w.pki.anchors(), w.store, [&] { return w.ltca->probe(); });
  Pod pca("pca-0", pca_factory("pca-0"), 2, 0us);
  EXPECT_TRUE(pca.probe(1s));
  EXPECT_TRUE(pca.probe(1s));

  auto ltca_factory = ltca_pod_factory(LtcaConfig{}, w.pki.ltca, w.pki.anchors(), w.store);
  Pod ltca("ltca-0", ltca_factory("ltca-0"), 2, 0us);
  EXPECT_TRUE(ltca.probe(1s));

  w.store->set_available(false);
  EXPECT_FALSE(pca.probe(1s));
  EXPECT_FALSE(ltca.probe(1s));
}

// ---------------------------------------------------------------- deployment

std::map<std::string, PodStatus> statuses(const Deployment& d) {
  std::map<std::string, PodStatus> out;
  for (const auto& p : d.state().pods) out[p.pod_id] = p.status;
  return out;
}

TEST(Deployment, SpawnOnEmptyDeploymentReachesReady) {
  auto cfg = base_config();
  Deployment d(cfg, echo_factory());
  EXPECT_EQ(d.live_replicas(), 0u);
  d.apply_actions({{Kind::SpawnPod, ""}});
  auto st = d.state();
  ASSERT_EQ(st.pods.size(), 1u);
  EXPECT_EQ(st.pods[0].status, PodStatus::Ready);
  EXPECT_EQ(d.ready_replicas(), 1u);
}

TEST(Deployment, RoundRobinOverReadyPods) {
  auto cfg = base_config();
  cfg.min_replicas = 3;
  Deployment d(cfg, echo_factory());
  d.start(false);
  ASSERT_EQ(d.ready_replicas(), 3u);
  std::map<std::string, int> hits;
  for (int i = 0; i < 9; ++i) hits[d.route()]++;
  ASSERT_EQ(hits.size(), 3u);
  for (const auto& [id, n] : hits) EXPECT_EQ(n, 3) << id;

  // One pod turns Unhealthy; the rest keep the traffic.
  auto victim = hits.begin()->first;
  d.inject_fault(victim, Fault::drop_all());
  d.take_snapshot(true);
  EXPECT_EQ(statuses(d).at(victim), PodStatus::Unhealthy);
  for (int i = 0; i < 6; ++i) EXPECT_NE(d.route(), victim);

  for (const auto& [id, n] : hits) d.apply_actions({{Kind::KillPod, id}});
  EXPECT_EQ(code_of([&] { d.route(); }), Errc::NoReadyPods);
  auto resp = d.call({1, MessageType::Ping, 3, {}}, 100ms);
  ASSERT_EQ(resp.type, MessageType::Error);
  EXPECT_EQ(resp.correlation_id, 3u);
  EXPECT_EQ(ErrorMessage::decode(resp.body).code, static_cast<std::uint16_t>(Errc::NoReadyPods));
  d.stop();
}

TEST(Deployment, KillDrainsInFlightRequest) {
  auto cfg = base_config();
  cfg.emulated_service_ms = 300;
  Deployment d(cfg, echo_factory());
  d.start(false);
  std::string routed;
  auto fut = std::async(std::launch::async, [&] {
    return d.call({1, MessageType::Ping, 0, {}}, 5s, &routed);
  });
  std::this_thread::sleep_for(50ms);
  d.apply_actions({{Kind::KillPod, d.state().pods.at(0).pod_id}});
  EXPECT_EQ(statuses(d).begin()->second, PodStatus::Terminated);
  EXPECT_EQ(fut.get().type, MessageType::Pong);
  d.stop();
}

TEST(Deployment, FaultyPodIsReplacedWithoutHurtingHealthyOnes) {
  auto cfg = base_config();
  cfg.min_replicas = 2;
  cfg.max_replicas = 2;
  cfg.probe_interval_s = 0.2;
  cfg.probe_timeout_s = 0.1;
  cfg.probe_failure_threshold = 2;
  cfg.control_interval_s = 0.05;
  auto log = std::make_shared<ScalingLog>();
  Deployment d(cfg, echo_factory(), log);
  d.start(true);
  ASSERT_EQ(d.ready_replicas(), 2u);

  std::atomic<bool> run{true};
  std::mutex mu;
  std::map<std::string, int> failures, successes;
  std::vector<std::thread> clients;
  for (int c = 0; c < 3; ++c) {
    clients.emplace_back([&] {
      while (run) {
        std::string routed;
        auto r = d.call({1, MessageType::Ping, 0, {}}, 150ms, &routed);
        std::lock_guard lock(mu);
        (r.type == MessageType::Pong ? successes : failures)[routed]++;
        std::this_thread::sleep_for(5ms);
      }
    });
  }
  std::this_thread::sleep_for(200ms);
  const auto victim = d.state().pods.at(0).pod_id;
  const auto t0 = std::chrono::steady_clock::now();
  d.inject_fault(victim, Fault::drop_all());
  while (statuses(d).at(victim) != PodStatus::Terminated &&
         std::chrono::steady_clock::now() - t0 < 5s) {
    std::this_thread::sleep_for(5ms);
  }
  const double replaced_after =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::this_thread::sleep_for(300ms);
  run = false;
  for (auto& c : clients) c.join();

  EXPECT_EQ(statuses(d).at(victim), PodStatus::Terminated);
  // Two probe periods, the timeout of the last failing probe and one control
  // tick of scheduling slack.
  EXPECT_LE(replaced_after, 2 * cfg.probe_interval_s + cfg.probe_timeout_s +
                                cfg.control_interval_s + 0.2);
  EXPECT_EQ(d.ready_replicas(), 2u);
  for (const auto& [pod, n] : failures) {
    EXPECT_EQ(pod, victim) << n << " failures on healthy pod " << pod;
  }
  int healthy_ok = 0;
  for (const auto& [pod, n] : successes) {
    if (pod != victim) healthy_ok += n;
  }
  EXPECT_GT(healthy_ok, 20);

  bool saw_replace = false;
  for (const auto& e : log->events()) saw_replace |= (e.action == "replace" && e.pod_id == victim);
  EXPECT_TRUE(saw_replace);
  d.stop();
}

TEST(Deployment, SpawnFailureIsCountedAndLogged) {
  auto cfg = base_config();
  std::atomic<int> calls{0};
  auto log = std::make_shared<ScalingLog>();
  Deployment d(cfg,
               [&](const std::string&) -> PodService {
                 if (calls++ == 0) throw std::runtime_error("no capacity");
                 return echo_service();
               },
               log);
  d.start(false);
  EXPECT_EQ(d.spawn_failures(), 1u);
  EXPECT_EQ(d.live_replicas(), 0u);
  d.tick();
  EXPECT_EQ(d.ready_replicas(), 1u);
  auto ev = log->events();
  ASSERT_GE(ev.size(), 2u);
  EXPECT_EQ(ev[0].action, "spawn_failed");
}

TEST(Deployment, ScalesOutUnderLoadAndBackIn) {
  auto cfg = base_config();
  cfg.pod_slots = 1;
  cfg.emulated_service_ms = 20;
  cfg.cooldown_s = 0.3;
  cfg.control_interval_s = 0.2;
  cfg.probe_interval_s = 10;
  cfg.max_replicas = 3;
  Deployment d(cfg, echo_factory());
  d.start(true);
  std::atomic<bool> run{true};
  std::vector<std::thread> clients;
  for (int c = 0; c < 4; ++c) {
    clients.emplace_back([&] {
      while (run) d.call({1, MessageType::Ping, 0, {}}, 2s);
    });
  }
  auto t0 = std::chrono::steady_clock::now();
  while (d.live_replicas() < 3 && std::chrono::steady_clock::now() - t0 < 10s) {
    std::this_thread::sleep_for(20ms);
  }
  EXPECT_EQ(d.live_replicas(), 3u);
  run = false;
  for (auto& c : clients) c.join();
  t0 = std::chrono::steady_clock::now();
  while (d.live_replicas() > 1 && std::chrono::steady_clock::now() - t0 < 10s) {
    std::this_thread::sleep_for(20ms);
  }
  EXPECT_EQ(d.live_replicas(), 1u);
  d.stop();
}

// ---------------------------------------------------------------- scaling log

TEST(ScalingLog, NdjsonRoundTrip) {
  ScalingEvent e{1700000000.25, "pca", "spawn", "pca-3", 4};
  auto line = scaling_event_json(e);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  auto back = parse_scaling_event(line);
  EXPECT_EQ(back.timestamp, e.timestamp);
  EXPECT_EQ(back.service, "pca");
  EXPECT_EQ(back.action, "spawn");
  EXPECT_EQ(back.pod_id, "pca-3");
  EXPECT_EQ(back.replica_count, 4u);
  EXPECT_EQ(code_of([] { parse_scaling_event("{\"action\": 1}"); }), Errc::ParseError);

  auto path = std::filesystem::temp_directory_path() /
              ("vpki_scaling_" + std::to_string(::getpid()) + ".ndjson");
  std::filesystem::remove(path);
  {
    ScalingLog log(path);
    log.append(e);
    e.action = "kill";
    e.replica_count = 3;
    log.append(e);
  }
  std::ifstream in(path);
  std::string l1, l2, l3;
  ASSERT_TRUE(std::getline(in, l1));
  ASSERT_TRUE(std::getline(in, l2));
  EXPECT_FALSE(std::getline(in, l3));
  EXPECT_EQ(parse_scaling_event(l2).action, "kill");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace vpki
