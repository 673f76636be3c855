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

struct PcaConfig {
  std::string id = "pca";
  // Strict: the ticket is consumed and issuance records written before the
  // response. Async: both are queued behind a write-behind delay, which
  // reopens the multi-replica double-issuance race.
  WriteMode mode = WriteMode::strict();
  std::vector<std::string> ra_ids{"ra"};
  Clock clock = system_clock();
};

// Pseudonym certification authority. Never sees vehicle identity: its inputs
// are tickets and CSRs, its records map pseudonym serials to ticket ids.
class Pca {
 public:
  Pca(PcaConfig config, AuthorityCredential self, Certificate ltca_cert,
      std::vector<Certificate> anchors, std::shared_ptr<Store> store);
  ~Pca();

  // Pseudonym i is bound to csrs[i] and valid for the i-th lifetime slot of
  // the ticket window. All-or-nothing: any rejected CSR fails the request
  // without consuming the ticket.
  std::vector<Certificate> issue_pseudonyms(const PseudonymBatchRequest& request);
  SerialList revoke_by_ticket(const TicketId& ticket_id, const RaAuth& auth);
  TicketId lookup_ticket(const CertSerial& pseudonym_serial, const RaAuth& auth);
  Crl get_crl();

  // Reserved ticket for health probes: accepted repeatedly, never consumed,
  // never recorded. Probe requests only arrive through probe(), not the wire.
  void set_probe_ticket(Ticket ticket);
  void probe();

  // Writes queued but not yet applied (always 0 in strict mode).
  std::size_t pending_writes() const;
  void flush_writes();

  Envelope handle(const Envelope& request);
  Handler handler() {
    return [this](const Envelope& e) { return handle(e); };
  }

  const Certificate& certificate() const { return self_.cert; }
  const PcaConfig& config() const { return config_; }

 private:
  void check_ticket(const Ticket& ticket, UnixSeconds now, bool probe) const;
  std::vector<Certificate> sign_batch(const Ticket& ticket, const std::vector<Csr>& csrs);

  PcaConfig config_;
  AuthorityCredential self_;
  Certificate ltca_cert_;
  RaPolicy ra_policy_;
  std::shared_ptr<Store> store_;
  std::unique_ptr<AsyncWriter> writer_;
  mutable std::mutex probe_mu_;
  std::optional<Ticket> probe_ticket_;
};

}  // namespace vpki
