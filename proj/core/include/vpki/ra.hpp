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
#include <map>
#include <memory>
#include <string>

#include "vpki/clock.hpp"
#include "vpki/credentials.hpp"
#include "vpki/gateway.hpp"
#include "vpki/messages.hpp"

namespace vpki {

struct RaConfig {
  std::chrono::milliseconds upstream_deadline{5000};
  Clock clock = system_clock();
};

// Resolution authority. Holds no state of its own: it learns the
// pseudonym -> ticket link from a PCA and the ticket -> LTC link from the
// LTCA, and drives revocation on both.
class Ra {
 public:
  Ra(RaConfig config, AuthorityCredential self, std::shared_ptr<Endpoint> ltca,
     std::map<std::string, std::shared_ptr<Endpoint>> pcas);

  // No state changes anywhere. UnknownSerial when no PCA knows the serial,
  // UpstreamUnavailable when an authority could not be reached.
  ResolutionResult resolve(const CertSerial& pseudonym_serial);

  // Revokes every pseudonym under every ticket of the resolved LTC, then the
  // LTC itself. Idempotent. If some leg fails, throws PartialRevocation
  // naming the failed legs; retrying completes the job.
  ResolutionResult revoke_vehicle(const CertSerial& pseudonym_serial);

  Envelope handle(const Envelope& request);
  Handler handler() {
    return [this](const Envelope& e) { return handle(e); };
  }

 private:
  struct Resolved {
    ResolutionResult result;
    ResolveTicketResponse ltca_view;
  };
  Resolved resolve_full(const CertSerial& pseudonym_serial);
  RaAuth auth(std::string_view op, ByteView payload) const;

  RaConfig config_;
  AuthorityCredential self_;
  std::shared_ptr<Endpoint> ltca_;
  std::map<std::string, std::shared_ptr<Endpoint>> pcas_;
};

}  // namespace vpki
