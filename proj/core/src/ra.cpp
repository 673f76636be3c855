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
#include "vpki/ra.hpp"

#include <algorithm>

#include "vpki/error.hpp"

namespace vpki {
namespace {

bool is_remote(const VpkiError& e) { return dynamic_cast<const RemoteFailure*>(&e) != nullptr; }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ",";
    out += p;
  }
  return out;
}

}  // namespace

Ra::Ra(RaConfig config, AuthorityCredential self, std::shared_ptr<Endpoint> ltca,
       std::map<std::string, std::shared_ptr<Endpoint>> pcas)
    : config_(std::move(config)),
      self_(std::move(self)),
      ltca_(std::move(ltca)),
      pcas_(std::move(pcas)) {
  if (!ltca_ || pcas_.empty()) fail(Errc::InvalidConfig, "RA needs an LTCA and at least one PCA");
}

RaAuth Ra::auth(std::string_view op, ByteView payload) const {
  return make_ra_auth(self_.key, self_.cert, op, payload, config_.clock());
}

Ra::Resolved Ra::resolve_full(const CertSerial& pseudonym_serial) {
  std::optional<TicketId> ticket;
  std::vector<std::string> unreachable;
  for (const auto& [id, ep] : pcas_) {
    SerialRequest q{pseudonym_serial, auth("lookup_ticket", pseudonym_serial.view())};
    try {
      auto body = rpc(*ep, MessageType::LookupTicketRequest, q.encode(),
                      MessageType::LookupTicketResponse, config_.upstream_deadline);
      ticket = LookupTicketResponse::decode(body).ticket_id;
      break;
    } catch (const VpkiError& e) {
      if (e.code() == Errc::UnknownSerial && is_remote(e)) continue;
      if (is_remote(e)) throw;
      unreachable.push_back(id);
    }
  }
  if (!ticket) {
    if (!unreachable.empty()) {
      throw VpkiError(Errc::UpstreamUnavailable, "PCA unreachable: " + join(unreachable),
                      std::nullopt, "pca:" + unreachable.front());
    }
    fail(Errc::UnknownSerial, "no PCA issued pseudonym " + pseudonym_serial.hex());
  }

  Resolved out;
  TicketIdRequest q{*ticket, auth("resolve_ticket", ticket->view())};
  try {
    auto body = rpc(*ltca_, MessageType::ResolveTicketRequest, q.encode(),
                    MessageType::ResolveTicketResponse, config_.upstream_deadline);
    out.ltca_view = ResolveTicketResponse::decode(body);
  } catch (const VpkiError& e) {
    if (is_remote(e)) throw;
    throw VpkiError(Errc::UpstreamUnavailable, std::string("LTCA unreachable: ") + e.what(),
                    std::nullopt, "ltca");
  }
  out.result.pseudonym_serial = pseudonym_serial;
  out.result.ticket_id = *ticket;
  out.result.ltc_serial = out.ltca_view.ltc_serial;
  return out;
}

ResolutionResult Ra::resolve(const CertSerial& pseudonym_serial) {
  return resolve_full(pseudonym_serial).result;
}

ResolutionResult Ra::revoke_vehicle(const CertSerial& pseudonym_serial) {
  auto resolved = resolve_full(pseudonym_serial);
  auto& result = resolved.result;
  std::vector<std::string> failed;
  std::string first_error;
  auto note = [&](std::string leg, const std::exception& e) {
    if (first_error.empty()) first_error = e.what();
    failed.push_back(std::move(leg));
  };

  for (const auto& ref : resolved.ltca_view.tickets) {
    auto it = pcas_.find(ref.target_pca_id);
    if (it == pcas_.end()) {
      // Tickets aimed at a PCA this RA does not know were never redeemable here.
      continue;
    }
    TicketIdRequest q{ref.ticket_id, auth("revoke_by_ticket", ref.ticket_id.view())};
    try {
      auto body = rpc(*it->second, MessageType::RevokeByTicketRequest, q.encode(),
                      MessageType::RevokeByTicketResponse, config_.upstream_deadline);
      auto list = SerialList::decode(body);
      result.revoked_pseudonym_serials.insert(result.revoked_pseudonym_serials.end(),
                                              list.serials.begin(), list.serials.end());
    } catch (const VpkiError& e) {
      if (e.code() == Errc::UnknownTicket && is_remote(e)) continue;
      note("pca:" + ref.target_pca_id, e);
    }
  }

  SerialRequest q{result.ltc_serial, auth("revoke_ltc", result.ltc_serial.view())};
  try {
    rpc(*ltca_, MessageType::RevokeLtcRequest, q.encode(), MessageType::RevokeLtcResponse,
        config_.upstream_deadline);
  } catch (const VpkiError& e) {
    note("ltca", e);
  }

  auto& v = result.revoked_pseudonym_serials;
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (!failed.empty()) {
    throw VpkiError(Errc::PartialRevocation,
                    "revocation incomplete, failed legs " + join(failed) + ": " + first_error,
                    static_cast<std::int64_t>(v.size()), join(failed));
  }
  return result;
}

Envelope Ra::handle(const Envelope& request) {
  Envelope resp;
  switch (request.type) {
    case MessageType::Ping:
      resp.type = MessageType::Pong;
      resp.body = PingMessage::decode(request.body).encode();
      break;
    case MessageType::ResolveRequest: {
      auto q = ResolveRequest::decode(request.body);
      resp.type = MessageType::ResolveResponse;
      resp.body = (q.revoke ? revoke_vehicle(q.pseudonym_serial) : resolve(q.pseudonym_serial))
                      .encode();
      break;
    }
    default:
      fail(Errc::UnknownType, "RA does not serve " +
                                  std::string(message_type_name(request.type)));
  }
  resp.correlation_id = request.correlation_id;
  return resp;
}

}  // namespace vpki
