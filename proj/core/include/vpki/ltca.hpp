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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vpki/clock.hpp"
#include "vpki/credentials.hpp"
#include "vpki/gateway.hpp"
#include "vpki/messages.hpp"
#include "vpki/store.hpp"

namespace vpki {

struct LtcaConfig {
  std::string id = "ltca";
  // Pseudonym lifetime. Ticket windows are aligned outward to multiples of
  // it, counted from the Unix epoch.
  std::int64_t pseudonym_lifetime_s = 300;
  std::int64_t window_cap_s = 24 * 3600;
  std::int64_t max_request_skew_s = 300;
  std::vector<std::string> ra_ids{"ra"};
  Clock clock = system_clock();
};

// Ticket window for a request, before the cap is applied.
Validity align_ticket_window(UnixSeconds start, std::int64_t duration,
                             std::int64_t pseudonym_lifetime_s);

// Long-term certification authority: vehicle registration, LTC issuance,
// ticket issuance and the ticket ledger used for resolution. Stateless
// between requests; all state lives in the store, so several replicas can
// share one.
class Ltca {
 public:
  Ltca(LtcaConfig config, AuthorityCredential self, std::vector<Certificate> anchors,
       std::shared_ptr<Store> store);

  Certificate register_vehicle(const std::string& vehicle_id, const PublicKey& key,
                               Validity validity);
  Ticket issue_ticket(const TicketRequest& request);
  ResolveTicketResponse resolve_ticket(const TicketId& ticket_id, const RaAuth& auth);
  RevokeLtcResponse revoke_ltc(const CertSerial& ltc_serial, const RaAuth& auth);

  std::optional<VehicleRecord> vehicle(const std::string& vehicle_id) const;

  // Liveness check: issues a dummy ticket to this instance's probe vehicle
  // through the normal request path.
  Ticket probe();

  Envelope handle(const Envelope& request);
  Handler handler() {
    return [this](const Envelope& e) { return handle(e); };
  }

  const Certificate& certificate() const { return self_.cert; }
  const LtcaConfig& config() const { return config_; }

 private:
  void ensure_probe_vehicle();

  LtcaConfig config_;
  AuthorityCredential self_;
  RaPolicy ra_policy_;
  std::shared_ptr<Store> store_;
  std::string probe_vehicle_id_;
  KeyPair probe_key_;
  std::optional<Certificate> probe_ltc_;
  std::mutex probe_mu_;
};

}  // namespace vpki
