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
// vpki: command-line front end for the services, the client and the
// benchmark toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vpki/bench.hpp"
#include "vpki/client.hpp"
#include "vpki/gateway.hpp"
#include "vpki/golden.hpp"
#include "vpki/ltca.hpp"
#include "vpki/orchestrator.hpp"
#include "vpki/pca.hpp"
#include "vpki/pki.hpp"
#include "vpki/ra.hpp"
#include "vpki/store.hpp"
#include "vpki/tls.hpp"

namespace {

using namespace vpki;
using namespace std::chrono_literals;
namespace fs = std::filesystem;
using json = nlohmann::json;

std::atomic<bool> g_stop{false};

std::string read_text(const fs::path& path) {
  auto b = read_file(path);
  return {b.begin(), b.end()};
}

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(100ms);
}

// Options every networked subcommand shares.
struct Common {
  std::string pki_dir = "pki";
  bool insecure = false;
  int deadline_ms = 30000;

  PkiMaterial pki() const { return load_pki(pki_dir); }

  ChannelOptions channel(const PkiMaterial& p) const {
    ChannelOptions o;
    if (!insecure) o.tls = TlsClientContext::create(p.tls_root_pem);
    return o;
  }
  ServerOptions server(const PkiMaterial& p, const std::string& listen) const {
    ServerOptions o;
    o.listen = HostPort::parse(listen);
    if (!insecure) o.tls = TlsServerContext::create(p.tls_server);
    return o;
  }
  std::shared_ptr<Endpoint> remote(const PkiMaterial& p, const std::string& addr) const {
    return std::make_shared<RemoteEndpoint>(HostPort::parse(addr), channel(p));
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--pki", c.pki_dir, "PKI directory written by 'vpki init'")
      ->capture_default_str();
  app->add_flag("--insecure", c.insecure, "plaintext connections (tests only)");
  app->add_option("--deadline-ms", c.deadline_ms, "per-request deadline")->capture_default_str();
}

void serve(Server& server, const std::string& what) {
  server.start();
  std::cerr << what << " listening on " << server.address().str() << std::endl;
  wait_for_signal();
  server.stop();
}

AuthorityCredential override_key(AuthorityCredential cred, const std::string& key_file) {
  if (!key_file.empty()) cred.key = KeyPair::from_pem(read_text((key_file)));
  return cred;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw VpkiError(Errc::InvalidArgument, "cannot write " + path);
  return file;
}

// ---------------------------------------------------------------- authorities

void cmd_init(const std::string& out, const std::vector<std::string>& pca_ids,
              const std::vector<std::string>& tls_names) {
  PkiOptions o;
  o.pca_ids = pca_ids;
  o.tls_names = tls_names;
  save_pki(bootstrap_pki(o), out);
  std::cout << "wrote " << out << std::endl;
}

struct LtcaArgs {
  std::string listen = "127.0.0.1:7001";
  std::string store = "mem";
  std::int64_t tau = 300;
  std::int64_t window_cap = 24 * 3600;
  std::string key;
};

void cmd_ltca(const Common& c, const LtcaArgs& a) {
  auto p = c.pki();
  LtcaConfig cfg;
  cfg.pseudonym_lifetime_s = a.tau;
  cfg.window_cap_s = a.window_cap;
  Ltca ltca(cfg, override_key(p.ltca, a.key), p.anchors(), open_store(a.store));
  Server server(c.server(p, a.listen), ltca.handler());
  serve(server, "ltca");
}

struct PcaArgs {
  std::string id = "pca";
  std::string listen = "127.0.0.1:7002";
  std::string store = "mem";
  std::string mode = "strict";
  int async_delay_ms = 50;
  std::string key;
  std::string ltca_cert;
};

void cmd_pca(const Common& c, const PcaArgs& a) {
  auto p = c.pki();
  PcaConfig cfg;
  cfg.id = a.id;
  if (a.mode == "async") {
    cfg.mode = WriteMode::async(std::chrono::milliseconds(a.async_delay_ms));
  } else if (a.mode != "strict") {
    throw VpkiError(Errc::InvalidConfig, "mode must be strict or async");
  }
  auto ltca_cert = a.ltca_cert.empty() ? p.ltca.cert : Certificate::decode(read_file(a.ltca_cert));
  Pca pca(cfg, override_key(p.pca(a.id), a.key), ltca_cert, p.anchors(), open_store(a.store));
  Server server(c.server(p, a.listen), pca.handler());
  serve(server, "pca " + a.id);
}

struct RaArgs {
  std::string listen = "127.0.0.1:7003";
  std::string ltca = "127.0.0.1:7001";
  std::vector<std::string> pcas{"pca=127.0.0.1:7002"};
  std::string key;
};

std::map<std::string, std::string> parse_pca_map(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& s : items) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw VpkiError(Errc::InvalidArgument, "expected id=host:port: " + s);
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

void cmd_ra(const Common& c, const RaArgs& a) {
  auto p = c.pki();
  std::map<std::string, std::shared_ptr<Endpoint>> pcas;
  for (const auto& [id, addr] : parse_pca_map(a.pcas)) pcas[id] = c.remote(p, addr);
  Ra ra(RaConfig{}, override_key(p.ra, a.key), c.remote(p, a.ltca), pcas);
  Server server(c.server(p, a.listen), ra.handler());
  serve(server, "ra");
}

// ---------------------------------------------------------------- vehicles

VehicleCredential load_vehicle(const std::string& dir, const std::string& id) {
  return {id, KeyPair::from_pem(read_text((fs::path(dir) / (id + ".key.pem")))),
          Certificate::decode(read_file(fs::path(dir) / (id + ".cert")))};
}

void cmd_register(const Common& c, const std::string& ltca, const std::string& vehicle,
                  const std::string& out_dir, std::int64_t days) {
  auto p = c.pki();
  auto ep = c.remote(p, ltca);
  const auto now = system_now();
  auto v = register_vehicle(*ep, vehicle, {now - 60, now + days * 86400}, Curve::P256,
                            std::chrono::milliseconds(c.deadline_ms));
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / (vehicle + ".key.pem"), as_bytes(v.ltc_key.to_pem()));
  write_file(fs::path(out_dir) / (vehicle + ".cert"), v.ltc.encode());
  std::cout << "ltc " << v.ltc.serial().hex() << " valid " << v.ltc.validity().start << ".."
            << v.ltc.validity().end << std::endl;
}

struct TargetArgs {
  std::string ltca = "127.0.0.1:7001";
  std::string pca = "127.0.0.1:7002";
  std::string pca_id = "pca";
};

void add_targets(CLI::App* app, TargetArgs& t) {
  app->add_option("--ltca", t.ltca, "LTCA address")->capture_default_str();
  app->add_option("--pca", t.pca, "PCA address")->capture_default_str();
  app->add_option("--pca-id", t.pca_id, "PCA identity")->capture_default_str();
}

ClientTargets make_targets(const Common& c, const PkiMaterial& p, const TargetArgs& t) {
  ClientTargets out;
  out.ltca = c.remote(p, t.ltca);
  out.pca = c.remote(p, t.pca);
  out.pca_id = t.pca_id;
  out.anchors = p.anchors();
  out.pca_cert = p.pca(t.pca_id).cert;
  return out;
}

void cmd_acquire(const Common& c, const TargetArgs& t, const std::string& vehicle_dir,
                 const std::string& vehicle, std::int64_t start, std::int64_t duration,
                 std::int64_t tau, const std::string& out_dir) {
  auto p = c.pki();
  auto v = load_vehicle(vehicle_dir, vehicle);
  if (start == 0) start = system_now();
  auto got = acquire(make_targets(c, p, t), v, start, start + duration, tau);
  for (const auto& [cert, key] : got.pseudonyms) {
    std::cout << cert.serial().hex() << " " << cert.validity().start << " "
              << cert.validity().end << "\n";
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / (cert.serial().hex() + ".cert"), cert.encode());
      write_file(fs::path(out_dir) / (cert.serial().hex() + ".key.pem"), as_bytes(key.to_pem()));
    }
  }
  std::cerr << got.pseudonyms.size() << " pseudonyms in " << got.end_to_end_ms << " ms"
            << std::endl;
}

// ---------------------------------------------------------------- load

void apply_profile_file(const std::string& path, LoadProfile& lp) {
  auto j = json::parse(read_text((path)));
  lp.workers = j.value("workers", lp.workers);
  lp.requests_per_worker_per_hour =
      j.value("requests_per_worker_per_hour", lp.requests_per_worker_per_hour);
  lp.concurrent_streams_per_worker =
      j.value("concurrent_streams_per_worker", lp.concurrent_streams_per_worker);
  lp.csrs_per_request = j.value("csrs_per_request", lp.csrs_per_request);
  lp.duration_s = j.value("duration_s", lp.duration_s);
  lp.seed = j.value("seed", lp.seed);
  lp.pseudonym_lifetime_s = j.value("pseudonym_lifetime_s", lp.pseudonym_lifetime_s);
  lp.vehicles = j.value("vehicles", lp.vehicles);
  const auto arrival = j.value("arrival", std::string("uniform"));
  if (arrival == "poisson") {
    lp.arrival = Arrival::Poisson;
  } else if (arrival == "uniform") {
    lp.arrival = Arrival::Uniform;
  } else {
    throw VpkiError(Errc::InvalidConfig, "arrival must be uniform or poisson");
  }
}

struct DelayArgs {
  double base_ms = 0;
  std::string jitter = "none";
  double jitter_ms = 0;
  std::uint64_t seed = 1;

  DelayModel model() const {
    DelayModel d{base_ms, jitter_from_name(jitter), jitter_ms, seed};
    d.validate();
    return d;
  }
};

void add_delay(CLI::App* app, DelayArgs& d) {
  app->add_option("--base-ms", d.base_ms, "fixed delay per network leg")->capture_default_str();
  app->add_option("--jitter", d.jitter, "none, uniform or exponential")->capture_default_str();
  app->add_option("--jitter-ms", d.jitter_ms, "jitter max (uniform) or mean (exponential)");
  app->add_option("--delay-seed", d.seed, "delay model seed")->capture_default_str();
}

void write_records(const std::string& out, const std::vector<LatencyRecord>& records) {
  if (out.empty() || out == "-") {
    for (const auto& r : records) std::cout << latency_record_json(r) << "\n";
  } else {
    write_latency_records(out, records);
  }
}

void cmd_loadgen(const Common& c, const TargetArgs& t, LoadProfile lp,
                 const std::string& profile_file, const std::string& arrival,
                 const DelayArgs& delay, const std::string& out) {
  if (!profile_file.empty()) apply_profile_file(profile_file, lp);
  if (!arrival.empty()) lp.arrival = arrival == "poisson" ? Arrival::Poisson : Arrival::Uniform;
  auto p = c.pki();
  const auto now = system_now();
  Fleet fleet(c.remote(p, t.ltca), {now - 60, now + 7 * 86400});
  LoadOptions lo;
  lo.delay = delay.model();
  auto records = run_load(lp, make_targets(c, p, t), fleet, lo);
  write_records(out, records);
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.ok();
  std::cerr << records.size() << " requests, " << ok << " ok" << std::endl;
}

// ---------------------------------------------------------------- RA and CRL

void cmd_resolve(const Common& c, const std::string& ra, const std::string& serial, bool revoke) {
  auto p = c.pki();
  auto ep = c.remote(p, ra);
  ResolveRequest q{CertSerial::from_hex(serial), revoke};
  auto body = rpc(*ep, MessageType::ResolveRequest, q.encode(), MessageType::ResolveResponse,
                  std::chrono::milliseconds(c.deadline_ms));
  auto r = ResolutionResult::decode(body);
  json j{{"pseudonym_serial", r.pseudonym_serial.hex()},
         {"ticket_id", r.ticket_id.hex()},
         {"ltc_serial", r.ltc_serial.hex()}};
  if (revoke) {
    auto& list = j["revoked_pseudonym_serials"] = json::array();
    for (const auto& s : r.revoked_pseudonym_serials) list.push_back(s.hex());
  }
  std::cout << j.dump(2) << std::endl;
}

void cmd_crl(const Common& c, const std::string& pca, const std::string& pca_id,
             const std::string& out) {
  auto p = c.pki();
  auto ep = c.remote(p, pca);
  auto crl = Crl::decode(rpc(*ep, MessageType::CrlRequest, {}, MessageType::CrlResponse,
                             std::chrono::milliseconds(c.deadline_ms)));
  if (!verify_crl(crl, p.pca(pca_id).cert.body.subject_public_key)) {
    throw VpkiError(Errc::BadSignature, "CRL signature does not verify");
  }
  if (!out.empty()) write_file(out, crl.encode());
  std::cerr << "crl from " << crl.issuer_id << " at " << crl.issued_at << ": "
            << crl.revoked_serials.size() << " serials" << std::endl;
  for (const auto& s : crl.revoked_serials) std::cout << s.hex() << "\n";
}

// ---------------------------------------------------------------- deploy

void cmd_deploy(const Common& c, const std::string& config, const std::string& listen,
                const std::string& store_addr, const std::string& log_path,
                std::int64_t tau) {
  auto p = c.pki();
  auto cfg = config.empty() ? DeploymentConfig{} : load_deployment_config(config);
  cfg.validate();
  auto store = open_store(store_addr);
  auto log = log_path.empty() ? std::make_shared<ScalingLog>()
                              : std::make_shared<ScalingLog>(log_path);

  // PCA pods need a probe ticket; a private LTCA instance on the same
  // credential issues it.
  LtcaConfig lc;
  lc.pseudonym_lifetime_s = tau;
  auto prober = std::make_shared<Ltca>(lc, p.ltca, p.anchors(), std::make_shared<MemoryStore>());
  PodFactory factory;
  if (cfg.service_kind == ServiceKind::Ltca) {
    factory = ltca_pod_factory(lc, p.ltca, p.anchors(), store);
  } else {
    PcaConfig pc;
    pc.id = cfg.service_name;
    factory = pca_pod_factory(pc, p.pca(cfg.service_name), p.ltca.cert, p.anchors(), store,
                              [prober] { return prober->probe(); });
  }
  Deployment d(cfg, factory, log);
  d.start(true);
  Server server(c.server(p, listen), d.handler());
  serve(server, std::string(service_kind_name(cfg.service_kind)) + " deployment");
  d.stop();
}

// ---------------------------------------------------------------- bench

void cmd_trace_gen(TraceGenOptions o, const std::string& out) {
  std::ofstream file;
  write_trace(open_out(out, file), generate_trace(o));
}

void cmd_replay(const Common& c, const TargetArgs& t, const std::string& trace,
                ReplayOptions o, const DelayArgs& delay, const std::string& out) {
  auto p = c.pki();
  o.delay = delay.model();
  const auto now = system_now();
  Fleet fleet(c.remote(p, t.ltca), {now - 60, now + 7 * 86400});
  auto records = replay(ingest_trace(trace), o, make_targets(c, p, t), fleet);
  write_records(out, records);
}

void cmd_cdf(const std::string& records_path, const std::vector<double>& percentiles,
             std::optional<std::int64_t> tau) {
  auto records = read_latency_records(records_path);
  if (tau) std::erase_if(records, [&](const LatencyRecord& r) { return r.tau_s != *tau; });
  std::cout << "percentile,value_ms\n";
  for (const auto& row : cdf(records, percentiles)) {
    std::cout << row.percentile << "," << row.value_ms << "\n";
  }
}

void cmd_plotdata(const std::string& records_path, const std::string& log_path,
                  const std::string& out_dir, double bucket_s) {
  auto records = records_path.empty() ? std::vector<LatencyRecord>{}
                                       : read_latency_records(records_path);
  auto events = log_path.empty() ? std::vector<ScalingEvent>{} : read_scaling_log(log_path);
  for (const auto& f : render_plot_data(out_dir, records, events, bucket_s)) {
    std::cout << f.string() << "\n";
  }
}

constexpr const char* kGoldenHeader =
    "# Copyright 2026 The VPKIaaS Authors. All Rights Reserved.\n"
    "#\n"
    "# Licensed under the Apache License, Version 2.0 (the \"License\");\n"
    "# you may not use this file except in compliance with the License.\n"
    "# You may obtain a copy of the License at\n"
    "#\n"
    "#     http://www.apache.org/licenses/LICENSE-2.0\n"
    "#\n"
    "# Unless required by applicable law or agreed to in writing, software\n"
    "# distributed under the License is distributed on an \"AS IS\" BASIS,\n"
    "# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.\n"
    "# See the License for the specific language governing permissions and\n"
    "# limitations under the License.\n";

// First line that is not a comment.
std::string read_hex_file(const fs::path& path) {
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') return line;
  }
  return {};
}

// Writes one .hex file per vector, or with check set compares against them.
int cmd_golden(const std::string& dir, bool check) {
  int mismatches = 0;
  for (const auto& v : golden_vectors()) {
    const auto path = fs::path(dir) / (v.name + ".hex");
    const auto hex = to_hex(v.bytes);
    if (check) {
      if (read_hex_file(path) != hex) {
        std::cerr << "mismatch: " << path.string() << "\n";
        ++mismatches;
      }
    } else {
      fs::create_directories(dir);
      std::ofstream(path) << kGoldenHeader << "\n" << hex << "\n";
    }
  }
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vehicular PKI as a service"};
  app.require_subcommand(1);
  Common common;

  // init
  std::string init_out = "pki";
  std::vector<std::string> pca_ids{"pca"}, tls_names;
  auto* init = app.add_subcommand("init", "create a root, authority credentials and TLS material");
  init->add_option("--out", init_out)->capture_default_str();
  init->add_option("--pca-ids", pca_ids)->delimiter(',')->capture_default_str();
  init->add_option("--tls-name", tls_names, "extra DNS name or IP for the service certificate");

  // services
  LtcaArgs ltca_args;
  auto* ltca = app.add_subcommand("ltca", "run the long-term certification authority");
  add_common(ltca, common);
  ltca->add_option("--listen", ltca_args.listen)->capture_default_str();
  ltca->add_option("--store", ltca_args.store, "mem or file:<path>")->capture_default_str();
  ltca->add_option("--tau", ltca_args.tau, "pseudonym lifetime in seconds")->capture_default_str();
  ltca->add_option("--window-cap", ltca_args.window_cap, "longest ticket window in seconds")
      ->capture_default_str();
  ltca->add_option("--key", ltca_args.key, "authority key PEM (default: from --pki)");

  PcaArgs pca_args;
  auto* pca = app.add_subcommand("pca", "run a pseudonym certification authority");
  add_common(pca, common);
  pca->add_option("--id", pca_args.id)->capture_default_str();
  pca->add_option("--listen", pca_args.listen)->capture_default_str();
  pca->add_option("--store", pca_args.store, "mem or file:<path>")->capture_default_str();
  pca->add_option("--mode", pca_args.mode, "strict or async")->capture_default_str();
  pca->add_option("--async-delay-ms", pca_args.async_delay_ms)->capture_default_str();
  pca->add_option("--key", pca_args.key, "authority key PEM (default: from --pki)");
  pca->add_option("--ltca-cert", pca_args.ltca_cert, "LTCA certificate (default: from --pki)");

  RaArgs ra_args;
  auto* ra = app.add_subcommand("ra", "run the resolution authority");
  add_common(ra, common);
  ra->add_option("--listen", ra_args.listen)->capture_default_str();
  ra->add_option("--ltca", ra_args.ltca)->capture_default_str();
  ra->add_option("--pca", ra_args.pcas, "id=host:port, repeatable")->capture_default_str();
  ra->add_option("--key", ra_args.key, "RA key PEM (default: from --pki)");

  // vehicles
  TargetArgs targets;
  std::string vehicle = "vehicle-1", vehicle_dir = "vehicles";
  std::int64_t ltc_days = 365;
  auto* reg = app.add_subcommand("register", "register a vehicle and store its LTC");
  add_common(reg, common);
  reg->add_option("--ltca", targets.ltca)->capture_default_str();
  reg->add_option("--vehicle", vehicle)->capture_default_str();
  reg->add_option("--out", vehicle_dir)->capture_default_str();
  reg->add_option("--days", ltc_days, "LTC validity")->capture_default_str();

  std::int64_t trip_start = 0, trip_duration = 3600, tau = 300;
  std::string pseudonym_dir;
  auto* acq = app.add_subcommand("acquire", "obtain pseudonyms for one trip");
  add_common(acq, common);
  add_targets(acq, targets);
  acq->add_option("--vehicle", vehicle)->capture_default_str();
  acq->add_option("--vehicle-dir", vehicle_dir)->capture_default_str();
  acq->add_option("--start", trip_start, "trip start, Unix seconds (default: now)");
  acq->add_option("--duration", trip_duration, "trip length in seconds")->capture_default_str();
  acq->add_option("--tau", tau, "pseudonym lifetime in seconds")->capture_default_str();
  acq->add_option("--out", pseudonym_dir, "directory for pseudonyms and keys");

  LoadProfile lp;
  std::string profile_file, arrival, records_out;
  DelayArgs delay;
  auto* load = app.add_subcommand("loadgen", "open-loop pseudonym request load");
  add_common(load, common);
  add_targets(load, targets);
  load->add_option("--profile", profile_file, "JSON profile; flags given later still apply");
  load->add_option("--workers", lp.workers)->capture_default_str();
  load->add_option("--rate", lp.requests_per_worker_per_hour, "requests per worker per hour")
      ->capture_default_str();
  load->add_option("--streams", lp.concurrent_streams_per_worker, "streams per worker")
      ->capture_default_str();
  load->add_option("--csrs", lp.csrs_per_request, "CSRs per request")->capture_default_str();
  load->add_option("--duration", lp.duration_s, "seconds")->capture_default_str();
  load->add_option("--arrival", arrival, "uniform or poisson");
  load->add_option("--seed", lp.seed)->capture_default_str();
  load->add_option("--tau", lp.pseudonym_lifetime_s)->capture_default_str();
  load->add_option("--vehicles", lp.vehicles)->capture_default_str();
  load->add_option("--out", records_out, "latency records, NDJSON (default: stdout)");
  add_delay(load, delay);

  std::string ra_addr = "127.0.0.1:7003", serial;
  bool revoke = false;
  auto* res = app.add_subcommand("resolve", "resolve a pseudonym, optionally revoking the vehicle");
  add_common(res, common);
  res->add_option("--ra", ra_addr)->capture_default_str();
  res->add_option("--serial", serial, "pseudonym serial, hex")->required();
  res->add_flag("--revoke", revoke);

  std::string crl_out;
  auto* crl = app.add_subcommand("crl", "fetch and verify a PCA's revocation list");
  add_common(crl, common);
  crl->add_option("--pca", targets.pca)->capture_default_str();
  crl->add_option("--pca-id", targets.pca_id)->capture_default_str();
  crl->add_option("--out", crl_out, "also write the encoded CRL here");

  std::string deploy_cfg, deploy_listen = "127.0.0.1:7002", deploy_store = "mem", scaling_log;
  auto* deploy = app.add_subcommand("deploy", "run an autoscaled deployment behind one address");
  add_common(deploy, common);
  deploy->add_option("--config", deploy_cfg, "deployment config JSON");
  deploy->add_option("--listen", deploy_listen)->capture_default_str();
  deploy->add_option("--store", deploy_store)->capture_default_str();
  deploy->add_option("--scaling-log", scaling_log, "NDJSON scaling events");
  deploy->add_option("--tau", tau, "pseudonym lifetime for LTCA pods")->capture_default_str();

  // bench
  TraceGenOptions gen;
  std::string trace_out;
  auto* trace = app.add_subcommand("trace", "mobility traces");
  trace->require_subcommand(1);
  auto* tgen = trace->add_subcommand("gen", "synthetic diurnal trip trace");
  tgen->add_option("--trips", gen.trips)->capture_default_str();
  tgen->add_option("--vehicles", gen.vehicles, "distinct vehicles (default: trips / 2)");
  tgen->add_option("--seed", gen.seed)->capture_default_str();
  tgen->add_option("--day-start", gen.day_start, "Unix seconds of midnight")->capture_default_str();
  tgen->add_option("--morning-peak-h", gen.morning_peak_h)->capture_default_str();
  tgen->add_option("--evening-peak-h", gen.evening_peak_h)->capture_default_str();
  tgen->add_option("--peak-sd-h", gen.peak_sd_h)->capture_default_str();
  tgen->add_option("--background-weight", gen.background_weight)->capture_default_str();
  tgen->add_option("--median-trip-s", gen.median_trip_s)->capture_default_str();
  tgen->add_option("--out", trace_out, "CSV (default: stdout)");

  ReplayOptions ro;
  std::string trace_in;
  auto* rep = app.add_subcommand("replay", "drive acquisitions from a trip trace");
  add_common(rep, common);
  add_targets(rep, targets);
  rep->add_option("--trace", trace_in)->required();
  rep->add_option("--tau", ro.pseudonym_lifetime_s)->capture_default_str();
  rep->add_option("--compression", ro.time_compression, "trace seconds per wall second")
      ->capture_default_str();
  rep->add_option("--concurrency", ro.concurrency)->capture_default_str();
  rep->add_option("--out", records_out, "latency records, NDJSON (default: stdout)");
  add_delay(rep, delay);

  std::string records_in;
  std::vector<double> percentiles{50, 90, 95, 99};
  std::optional<std::int64_t> cdf_tau;
  auto* cdfc = app.add_subcommand("cdf", "percentile table from latency records");
  cdfc->add_option("--records", records_in)->required();
  cdfc->add_option("--percentiles", percentiles)->delimiter(',')->capture_default_str();
  cdfc->add_option("--tau", cdf_tau, "only records with this pseudonym lifetime");

  std::string plot_dir = "plot", log_in;
  double bucket_s = 1;
  auto* plot = app.add_subcommand("plotdata", "CSV series for CDF, replica and rate plots");
  plot->add_option("--records", records_in);
  plot->add_option("--scaling-log", log_in);
  plot->add_option("--out", plot_dir)->capture_default_str();
  plot->add_option("--bucket-s", bucket_s, "request-rate bucket width")->capture_default_str();

  std::uint64_t vehicles = 350'000'000;
  double hours = 1;
  std::int64_t days = 365;
  std::int64_t sizing_tau = 300;
  auto* sizing = app.add_subcommand("sizing", "pseudonyms needed per period for a fleet");
  sizing->add_option("--vehicles", vehicles)->capture_default_str();
  sizing->add_option("--hours", hours, "driving hours per vehicle per day")->capture_default_str();
  sizing->add_option("--tau", sizing_tau)->capture_default_str();
  sizing->add_option("--days", days)->capture_default_str();

  std::string golden_dir = "docs/golden";
  bool golden_check = false;
  auto* golden = app.add_subcommand("golden", "write or check wire-format golden vectors");
  golden->add_option("--dir", golden_dir)->capture_default_str();
  golden->add_flag("--check", golden_check);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) cmd_init(init_out, pca_ids, tls_names);
    if (*ltca) cmd_ltca(common, ltca_args);
    if (*pca) cmd_pca(common, pca_args);
    if (*ra) cmd_ra(common, ra_args);
    if (*reg) cmd_register(common, targets.ltca, vehicle, vehicle_dir, ltc_days);
    if (*acq) {
      cmd_acquire(common, targets, vehicle_dir, vehicle, trip_start, trip_duration, tau,
                  pseudonym_dir);
    }
    if (*load) cmd_loadgen(common, targets, lp, profile_file, arrival, delay, records_out);
    if (*res) cmd_resolve(common, ra_addr, serial, revoke);
    if (*crl) cmd_crl(common, targets.pca, targets.pca_id, crl_out);
    if (*deploy) cmd_deploy(common, deploy_cfg, deploy_listen, deploy_store, scaling_log, tau);
    if (*tgen) cmd_trace_gen(gen, trace_out);
    if (*rep) cmd_replay(common, targets, trace_in, ro, delay, records_out);
    if (*cdfc) cmd_cdf(records_in, percentiles, cdf_tau);
    if (*plot) cmd_plotdata(records_in, log_in, plot_dir, bucket_s);
    if (*sizing) std::cout << fleet_sizing(vehicles, hours, sizing_tau, days) << std::endl;
    if (*golden) return cmd_golden(golden_dir, golden_check);
  } catch (const VpkiError& e) {
    std::cerr << "error: " << e.what();
    if (!e.step().empty()) std::cerr << " (step " << e.step() << ")";
    std::cerr << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
