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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vpki/client.hpp"
#include "vpki/ltca.hpp"
#include "vpki/pca.hpp"
#include "vpki/pki.hpp"
#include "vpki/ra.hpp"
#include "vpki/store.hpp"

namespace vpki::testing {

// One PKI, one shared store, an LTCA and any number of PCAs, all wired
// through in-process endpoints.
struct World {
  explicit World(std::vector<std::string> pca_ids = {"pca"}, std::int64_t tau = 300,
                 WriteMode mode = WriteMode::strict(), Clock clock = system_clock())
      : pki(bootstrap_pki({.pca_ids = pca_ids})),
        store(std::make_shared<MemoryStore>()),
        clock(clock) {
    LtcaConfig lc;
    lc.pseudonym_lifetime_s = tau;
    lc.clock = clock;
    ltca = std::make_shared<Ltca>(lc, pki.ltca, pki.anchors(), store);
    ltca_ep = std::make_shared<LocalEndpoint>(ltca->handler());
    for (const auto& id : pca_ids) {
      PcaConfig pc;
      pc.id = id;
      pc.mode = mode;
      pc.clock = clock;
      auto p = std::make_shared<Pca>(pc, pki.pca(id), pki.ltca.cert, pki.anchors(), store);
      pca_eps[id] = std::make_shared<LocalEndpoint>(p->handler());
      pcas[id] = std::move(p);
    }
  }

  Pca& pca(const std::string& id = "pca") { return *pcas.at(id); }

  ClientTargets targets(const std::string& pca_id = "pca") {
    ClientTargets t;
    t.ltca = ltca_ep;
    t.pca = pca_eps.at(pca_id);
    t.pca_id = pca_id;
    t.anchors = pki.anchors();
    t.pca_cert = pki.pca(pca_id).cert;
    return t;
  }

  VehicleCredential vehicle(const std::string& id) {
    auto now = clock();
    return register_vehicle(*ltca_ep, id, {now - 60, now + 365 * 86400});
  }

  Ticket ticket(const VehicleCredential& v, UnixSeconds start, std::int64_t duration,
                const std::string& pca_id = "pca") {
    return ltca->issue_ticket(
        make_ticket_request(v.ltc_key, v.ltc, start, duration, pca_id, clock()));
  }

  RaAuth ra_auth(std::string_view op, ByteView payload) {
    return make_ra_auth(pki.ra.key, pki.ra.cert, op, payload, clock());
  }

  std::map<std::string, std::shared_ptr<Endpoint>> pca_endpoints() {
    return {pca_eps.begin(), pca_eps.end()};
  }

  PkiMaterial pki;
  std::shared_ptr<MemoryStore> store;
  Clock clock;
  std::shared_ptr<Ltca> ltca;
  std::shared_ptr<LocalEndpoint> ltca_ep;
  std::map<std::string, std::shared_ptr<Pca>> pcas;
  std::map<std::string, std::shared_ptr<LocalEndpoint>> pca_eps;
};

inline std::vector<Csr> make_csrs(std::size_t n, std::vector<KeyPair>* keys = nullptr) {
  std::vector<Csr> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto kp = KeyPair::generate();
    out.push_back(make_csr(kp));
    if (keys) keys->push_back(std::move(kp));
  }
  return out;
}

inline UnixSeconds aligned_now(std::int64_t tau) {
  auto now = system_now();
  return now - now % tau;
}

}  // namespace vpki::testing
