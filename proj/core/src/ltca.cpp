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
#include "vpki/ltca.hpp"

#include <cstdlib>
#include <limits>

#include "vpki/error.hpp"

namespace vpki {
namespace {

std::string vehicle_key(const std::string& id) { return "v/" + id; }
std::string serial_key(const CertSerial& s) { return "s/" + s.hex(); }
std::string ticket_key(const TicketId& t) { return "t/" + t.hex(); }
std::string by_ltc_prefix(const CertSerial& s) { return "l/" + s.hex() + "/"; }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  auto q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

Validity align_ticket_window(UnixSeconds start, std::int64_t duration,
                             std::int64_t lifetime) {
  if (lifetime <= 0) fail(Errc::InvalidConfig, "pseudonym lifetime must be positive");
  if (duration <= 0) fail(Errc::InvalidArgument, "requested duration must be positive");
  return {floor_div(start, lifetime) * lifetime,
          ceil_div(start + duration, lifetime) * lifetime};
}

Ltca::Ltca(LtcaConfig config, AuthorityCredential self, std::vector<Certificate> anchors,
           std::shared_ptr<Store> store)
    : config_(std::move(config)),
      self_(std::move(self)),
      store_(std::move(store)),
      probe_key_(KeyPair::generate(self_.key.curve())) {
  if (config_.pseudonym_lifetime_s <= 0 || config_.window_cap_s <= 0) {
    fail(Errc::InvalidConfig, "pseudonym lifetime and window cap must be positive");
  }
  if (self_.id() != config_.id) {
    fail(Errc::InvalidConfig, "LTCA certificate subject '" + self_.id() +
                                  "' does not match configured id '" + config_.id + "'");
  }
  ra_policy_.anchors = std::move(anchors);
  ra_policy_.ra_ids = config_.ra_ids;
  probe_vehicle_id_ = "__probe__/" + config_.id + "/" + CertSerial::random().hex();
}

std::optional<VehicleRecord> Ltca::vehicle(const std::string& vehicle_id) const {
  auto raw = store_->get(Namespace::Vehicles, vehicle_key(vehicle_id));
  if (!raw) return std::nullopt;
  return VehicleRecord::decode(*raw);
}

Certificate Ltca::register_vehicle(const std::string& vehicle_id, const PublicKey& key,
                                   Validity validity) {
  if (vehicle_id.empty()) fail(Errc::InvalidArgument, "vehicle id must be non-empty");
  auto vkey = vehicle_key(vehicle_id);
  auto existing = store_->get(Namespace::Vehicles, vkey);
  if (existing && VehicleRecord::decode(*existing).status == VehicleStatus::Active) {
    fail(Errc::DuplicateRegistration, "vehicle '" + vehicle_id + "' already has an active LTC");
  }
  auto ltc = sign_certificate(self_.key, {CertSerial::random(), CertKind::Ltc, vehicle_id,
                                          key, validity, config_.id});
  VehicleRecord record{vehicle_id, ltc.serial(), VehicleStatus::Active, ltc};
  // Index first: a serial that resolves to a vehicle whose record still names
  // an older LTC is treated as superseded, so a lost race leaves no hole.
  store_->put(Namespace::Vehicles, serial_key(ltc.serial()), as_bytes(vehicle_id));
  if (!store_->compare_and_put(Namespace::Vehicles, vkey, existing, record.encode())) {
    fail(Errc::DuplicateRegistration, "concurrent registration of '" + vehicle_id + "'");
  }
  return ltc;
}

Ticket Ltca::issue_ticket(const TicketRequest& request) {
  const auto now = config_.clock();
  const auto& ltc = request.ltc;
  if (ltc.kind() != CertKind::Ltc || ltc.body.issuer_id != config_.id ||
      !verify_certificate(ltc, self_.key.public_key())) {
    fail(Errc::BadAuth, "LTC was not issued by this LTCA");
  }
  if (!verify_ticket_request(request)) {
    fail(Errc::BadAuth, "request signature does not verify under the LTC");
  }
  if (std::llabs(now - request.request_time) > config_.max_request_skew_s) {
    fail(Errc::BadAuth, "request timestamp outside the accepted skew");
  }
  if (now >= ltc.validity().end) fail(Errc::ExpiredLtc, "LTC expired");
  if (now < ltc.validity().start) fail(Errc::BadAuth, "LTC not yet valid");

  auto owner = store_->get(Namespace::Vehicles, serial_key(ltc.serial()));
  if (!owner) fail(Errc::BadAuth, "LTC is not registered");
  auto record = vehicle(std::string(owner->begin(), owner->end()));
  if (!record || record->ltc_serial != ltc.serial() ||
      record->status != VehicleStatus::Active) {
    fail(Errc::RevokedLtc, "LTC " + ltc.serial().hex() + " is revoked");
  }

  if (request.target_pca_id.empty()) fail(Errc::InvalidArgument, "no target PCA");
  if (request.duration <= 0) fail(Errc::InvalidArgument, "duration must be positive");
  if (request.duration > config_.window_cap_s + config_.pseudonym_lifetime_s) {
    fail(Errc::WindowTooLarge, "requested duration exceeds the window cap");
  }
  auto window = align_ticket_window(request.start, request.duration,
                                    config_.pseudonym_lifetime_s);
  if (window.length() > config_.window_cap_s) {
    fail(Errc::WindowTooLarge, "ticket window of " + std::to_string(window.length()) +
                                   " s exceeds cap of " +
                                   std::to_string(config_.window_cap_s) + " s");
  }
  auto count = window.length() / config_.pseudonym_lifetime_s;
  if (count > std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::WindowTooLarge, "too many pseudonyms");
  }

  Ticket ticket;
  ticket.ticket_id = TicketId::random();
  ticket.issuer_id = config_.id;
  ticket.target_pca_id = request.target_pca_id;
  ticket.window = window;
  ticket.max_pseudonyms = static_cast<std::uint32_t>(count);
  ticket = sign_ticket(self_.key, std::move(ticket));

  TicketLedgerEntry entry{ticket.ticket_id, ltc.serial(), ticket.target_pca_id};
  store_->put(Namespace::TicketsLedger, ticket_key(ticket.ticket_id), entry.encode());
  store_->put(Namespace::TicketsLedger, by_ltc_prefix(ltc.serial()) + ticket.ticket_id.hex(),
              as_bytes(ticket.target_pca_id));
  return ticket;
}

ResolveTicketResponse Ltca::resolve_ticket(const TicketId& ticket_id, const RaAuth& auth) {
  check_ra_auth(auth, ra_policy_, "resolve_ticket", ticket_id.view(), config_.clock());
  auto raw = store_->get(Namespace::TicketsLedger, ticket_key(ticket_id));
  if (!raw) fail(Errc::UnknownTicket, "ticket " + ticket_id.hex() + " not in ledger");
  auto entry = TicketLedgerEntry::decode(*raw);
  ResolveTicketResponse out;
  out.ltc_serial = entry.ltc_serial;
  auto prefix = by_ltc_prefix(entry.ltc_serial);
  for (const auto& [key, value] : store_->scan_prefix(Namespace::TicketsLedger, prefix)) {
    out.tickets.push_back({TicketId::from_hex(std::string_view(key).substr(prefix.size())),
                           std::string(value.begin(), value.end())});
  }
  return out;
}

RevokeLtcResponse Ltca::revoke_ltc(const CertSerial& ltc_serial, const RaAuth& auth) {
  check_ra_auth(auth, ra_policy_, "revoke_ltc", ltc_serial.view(), config_.clock());
  auto owner = store_->get(Namespace::Vehicles, serial_key(ltc_serial));
  if (!owner) fail(Errc::UnknownSerial, "LTC " + ltc_serial.hex() + " unknown");
  auto vkey = vehicle_key(std::string(owner->begin(), owner->end()));
  for (;;) {
    auto raw = store_->get(Namespace::Vehicles, vkey);
    if (!raw) fail(Errc::UnknownSerial, "LTC " + ltc_serial.hex() + " unknown");
    auto record = VehicleRecord::decode(*raw);
    if (record.ltc_serial != ltc_serial || record.status == VehicleStatus::Revoked) {
      return {false};
    }
    record.status = VehicleStatus::Revoked;
    if (store_->compare_and_put(Namespace::Vehicles, vkey, raw, record.encode())) {
      return {true};
    }
  }
}

void Ltca::ensure_probe_vehicle() {
  if (probe_ltc_) return;
  auto now = config_.clock();
  probe_ltc_ = register_vehicle(probe_vehicle_id_, probe_key_.public_key(),
                                {now - 60, now + 10 * 365 * 86400});
}

Ticket Ltca::probe() {
  Certificate ltc;
  {
    std::lock_guard lock(probe_mu_);
    ensure_probe_vehicle();
    ltc = *probe_ltc_;
  }
  auto now = config_.clock();
  auto req = make_ticket_request(probe_key_, ltc, now, config_.pseudonym_lifetime_s,
                                 "__probe__", now);
  return issue_ticket(req);
}

Envelope Ltca::handle(const Envelope& request) {
  Envelope resp;
  switch (request.type) {
    case MessageType::Ping:
      resp.type = MessageType::Pong;
      resp.body = PingMessage::decode(request.body).encode();
      break;
    case MessageType::RegisterRequest: {
      auto q = RegisterRequest::decode(request.body);
      resp.type = MessageType::RegisterResponse;
      resp.body = CertificateMessage{register_vehicle(q.vehicle_id, q.public_key, q.validity)}
                      .encode();
      break;
    }
    case MessageType::TicketRequest:
      resp.type = MessageType::TicketResponse;
      resp.body = TicketMessage{issue_ticket(TicketRequest::decode(request.body))}.encode();
      break;
    case MessageType::ResolveTicketRequest: {
      auto q = TicketIdRequest::decode(request.body);
      resp.type = MessageType::ResolveTicketResponse;
      resp.body = resolve_ticket(q.ticket_id, q.auth).encode();
      break;
    }
    case MessageType::RevokeLtcRequest: {
      auto q = SerialRequest::decode(request.body);
      resp.type = MessageType::RevokeLtcResponse;
      resp.body = revoke_ltc(q.serial, q.auth).encode();
      break;
    }
    default:
      fail(Errc::UnknownType, "LTCA does not serve " +
                                  std::string(message_type_name(request.type)));
  }
  resp.correlation_id = request.correlation_id;
  return resp;
}

}  // namespace vpki
