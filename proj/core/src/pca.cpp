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
#include "vpki/pca.hpp"

#include <algorithm>
#include <set>

#include "vpki/error.hpp"

namespace vpki {
namespace {

std::string consumed_key(const TicketId& t) { return "c/" + t.hex(); }
std::string record_key(const CertSerial& s) { return "p/" + s.hex(); }
std::string by_ticket_prefix(const TicketId& t) { return "t/" + t.hex() + "/"; }
std::string crl_key(const CertSerial& s) { return "r/" + s.hex(); }

}  // namespace

Pca::Pca(PcaConfig config, AuthorityCredential self, Certificate ltca_cert,
         std::vector<Certificate> anchors, std::shared_ptr<Store> store)
    : config_(std::move(config)),
      self_(std::move(self)),
      ltca_cert_(std::move(ltca_cert)),
      store_(std::move(store)) {
  if (self_.id() != config_.id) {
    fail(Errc::InvalidConfig, "PCA certificate subject '" + self_.id() +
                                  "' does not match configured id '" + config_.id + "'");
  }
  ra_policy_.anchors = std::move(anchors);
  ra_policy_.ra_ids = config_.ra_ids;
  if (config_.mode.is_async()) {
    writer_ = std::make_unique<AsyncWriter>(store_, config_.mode.delay);
  }
}

Pca::~Pca() = default;

void Pca::check_ticket(const Ticket& ticket, UnixSeconds now, bool probe) const {
  if (ticket.issuer_id != ltca_cert_.body.subject_id ||
      !verify_ticket(ticket, ltca_cert_.body.subject_public_key)) {
    fail(Errc::BadTicketSignature, "ticket does not verify under the LTCA key");
  }
  if (!probe && ticket.target_pca_id != config_.id) {
    fail(Errc::WrongPca, "ticket is for '" + ticket.target_pca_id + "', this is '" +
                             config_.id + "'");
  }
  if (!probe && now >= ticket.window.end) {
    fail(Errc::TicketExpired, "ticket window ended at " + std::to_string(ticket.window.end));
  }
}

std::vector<Certificate> Pca::sign_batch(const Ticket& ticket, const std::vector<Csr>& csrs) {
  std::vector<Certificate> out;
  out.reserve(csrs.size());
  for (std::size_t i = 0; i < csrs.size(); ++i) {
    out.push_back(sign_certificate(
        self_.key, {CertSerial::random(), CertKind::Pseudonym, {}, csrs[i].subject_public_key,
                    ticket.slot(static_cast<std::uint32_t>(i)), config_.id}));
  }
  return out;
}

std::vector<Certificate> Pca::issue_pseudonyms(const PseudonymBatchRequest& request) {
  const auto now = config_.clock();
  const auto& ticket = request.ticket;
  check_ticket(ticket, now, false);
  if (request.csrs.empty()) fail(Errc::InvalidArgument, "batch has no CSRs");
  if (request.csrs.size() > ticket.max_pseudonyms) {
    fail(Errc::TooManyCsrs, std::to_string(request.csrs.size()) + " CSRs for a ticket of " +
                                std::to_string(ticket.max_pseudonyms));
  }
  std::set<Bytes> keys;
  for (std::size_t i = 0; i < request.csrs.size(); ++i) {
    if (!keys.insert(request.csrs[i].subject_public_key.encode()).second) {
      throw VpkiError(Errc::DuplicateCsrKey, "CSR public key repeated in batch",
                      static_cast<std::int64_t>(i));
    }
  }
  for (std::size_t i = 0; i < request.csrs.size(); ++i) {
    try {
      verify_csr(request.csrs[i]);
    } catch (const VpkiError& e) {
      throw VpkiError(Errc::BadProofOfPossession,
                      "CSR " + std::to_string(i) + ": " + e.message(),
                      static_cast<std::int64_t>(i));
    }
  }

  const auto ckey = consumed_key(ticket.ticket_id);
  if (!writer_) {
    if (store_->consume_once(Namespace::ConsumedTickets, ckey) ==
        ConsumeOutcome::AlreadyConsumed) {
      fail(Errc::TicketAlreadyUsed, "ticket " + ticket.ticket_id.hex() + " already used");
    }
    auto batch = sign_batch(ticket, request.csrs);
    for (const auto& p : batch) {
      IssuanceRecord rec{p.serial(), ticket.ticket_id, now};
      store_->put(Namespace::IssuanceRecords, record_key(p.serial()), rec.encode());
      store_->put(Namespace::IssuanceRecords, by_ticket_prefix(ticket.ticket_id) + p.serial().hex(),
                  {});
    }
    return batch;
  }

  // Write-behind: the consumed marker is only read here and written later,
  // so a duplicate arriving inside the delay passes this check.
  if (store_->get(Namespace::ConsumedTickets, ckey)) {
    fail(Errc::TicketAlreadyUsed, "ticket " + ticket.ticket_id.hex() + " already used");
  }
  auto batch = sign_batch(ticket, request.csrs);
  writer_->enqueue(Namespace::ConsumedTickets, ckey, {});
  for (const auto& p : batch) {
    IssuanceRecord rec{p.serial(), ticket.ticket_id, now};
    writer_->enqueue(Namespace::IssuanceRecords, record_key(p.serial()), rec.encode());
    writer_->enqueue(Namespace::IssuanceRecords,
                     by_ticket_prefix(ticket.ticket_id) + p.serial().hex(), {});
  }
  return batch;
}

SerialList Pca::revoke_by_ticket(const TicketId& ticket_id, const RaAuth& auth) {
  check_ra_auth(auth, ra_policy_, "revoke_by_ticket", ticket_id.view(), config_.clock());
  auto prefix = by_ticket_prefix(ticket_id);
  auto rows = store_->scan_prefix(Namespace::IssuanceRecords, prefix);
  if (rows.empty()) {
    fail(Errc::UnknownTicket, "no pseudonyms issued under ticket " + ticket_id.hex());
  }
  SerialList out;
  for (const auto& [key, value] : rows) {
    auto serial = CertSerial::from_hex(std::string_view(key).substr(prefix.size()));
    store_->compare_and_put(Namespace::Crl, crl_key(serial), std::nullopt, {});
    out.serials.push_back(serial);
  }
  return out;
}

TicketId Pca::lookup_ticket(const CertSerial& pseudonym_serial, const RaAuth& auth) {
  check_ra_auth(auth, ra_policy_, "lookup_ticket", pseudonym_serial.view(), config_.clock());
  auto raw = store_->get(Namespace::IssuanceRecords, record_key(pseudonym_serial));
  if (!raw) fail(Errc::UnknownSerial, "pseudonym " + pseudonym_serial.hex() + " unknown here");
  return IssuanceRecord::decode(*raw).ticket_id;
}

Crl Pca::get_crl() {
  Crl crl;
  crl.issuer_id = config_.id;
  crl.issued_at = config_.clock();
  for (const auto& [key, value] : store_->scan_prefix(Namespace::Crl, "r/")) {
    crl.revoked_serials.push_back(CertSerial::from_hex(std::string_view(key).substr(2)));
  }
  return sign_crl(self_.key, std::move(crl));
}

void Pca::set_probe_ticket(Ticket ticket) {
  check_ticket(ticket, config_.clock(), true);
  std::lock_guard lock(probe_mu_);
  probe_ticket_ = std::move(ticket);
}

void Pca::probe() {
  std::optional<Ticket> ticket;
  {
    std::lock_guard lock(probe_mu_);
    ticket = probe_ticket_;
  }
  if (!ticket) fail(Errc::InvalidConfig, "no probe ticket installed");
  check_ticket(*ticket, config_.clock(), true);
  auto kp = KeyPair::generate(self_.key.curve());
  auto csr = make_csr(kp);
  verify_csr(csr);
  store_->get(Namespace::ConsumedTickets, consumed_key(ticket->ticket_id));
  auto batch = sign_batch(*ticket, {csr});
  if (!verify_certificate(batch.front(), self_.key.public_key())) {
    fail(Errc::CryptoFailure, "probe pseudonym does not verify");
  }
}

std::size_t Pca::pending_writes() const { return writer_ ? writer_->backlog() : 0; }

void Pca::flush_writes() {
  if (writer_) writer_->flush();
}

Envelope Pca::handle(const Envelope& request) {
  Envelope resp;
  switch (request.type) {
    case MessageType::Ping:
      resp.type = MessageType::Pong;
      resp.body = PingMessage::decode(request.body).encode();
      break;
    case MessageType::PseudonymBatchRequest:
      resp.type = MessageType::PseudonymBatchResponse;
      resp.body = PseudonymBatchResponse{
          issue_pseudonyms(PseudonymBatchRequest::decode(request.body))}
                      .encode();
      break;
    case MessageType::LookupTicketRequest: {
      auto q = SerialRequest::decode(request.body);
      resp.type = MessageType::LookupTicketResponse;
      resp.body = LookupTicketResponse{lookup_ticket(q.serial, q.auth)}.encode();
      break;
    }
    case MessageType::RevokeByTicketRequest: {
      auto q = TicketIdRequest::decode(request.body);
      resp.type = MessageType::RevokeByTicketResponse;
      resp.body = revoke_by_ticket(q.ticket_id, q.auth).encode();
      break;
    }
    case MessageType::CrlRequest:
      resp.type = MessageType::CrlResponse;
      resp.body = get_crl().encode();
      break;
    default:
      fail(Errc::UnknownType, "PCA does not serve " +
                                  std::string(message_type_name(request.type)));
  }
  resp.correlation_id = request.correlation_id;
  return resp;
}

}  // namespace vpki
