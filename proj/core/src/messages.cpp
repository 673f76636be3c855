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
#include "vpki/messages.hpp"

#include <algorithm>
#include <cstdlib>

#include "vpki/error.hpp"

namespace vpki {
namespace {

constexpr std::string_view kTicketContext = "vpki/ticket/v1";
constexpr std::string_view kTicketRequestContext = "vpki/ticket-request/v1";
constexpr std::string_view kRaAuthContext = "vpki/ra-auth/v1";
constexpr std::string_view kCrlContext = "vpki/crl/v1";

template <class T>
std::vector<Bytes> encode_all(const std::vector<T>& items) {
  std::vector<Bytes> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(i.encode());
  return out;
}

std::vector<Bytes> encode_serials(const std::vector<CertSerial>& serials) {
  std::vector<Bytes> out;
  out.reserve(serials.size());
  for (const auto& s : serials) out.emplace_back(s.bytes.begin(), s.bytes.end());
  return out;
}

std::vector<CertSerial> decode_serials(const std::vector<Bytes>& items) {
  std::vector<CertSerial> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(CertSerial::from_bytes(i));
  return out;
}

Bytes copy(ByteView v) { return Bytes(v.begin(), v.end()); }

}  // namespace

// Ticket: 1 ticket_id | 2 issuer_id | 3 target_pca_id | 4 window_start |
//         5 window_end | 6 max_pseudonyms ; signed envelope 1 tbs | 2 sig
Bytes Ticket::tbs() const {
  TlvWriter w;
  w.bytes(1, ticket_id.view())
      .str(2, issuer_id)
      .str(3, target_pca_id)
      .i64(4, window.start)
      .i64(5, window.end)
      .u32(6, max_pseudonyms);
  return std::move(w).take();
}

Bytes Ticket::encode() const {
  TlvWriter w;
  w.bytes(1, tbs()).bytes(2, signature);
  return std::move(w).take();
}

Ticket Ticket::decode(ByteView in) {
  TlvReader outer(in);
  TlvReader r(outer.bytes(1));
  Ticket t;
  t.ticket_id = TicketId::from_bytes(r.bytes(1));
  t.issuer_id = r.str(2);
  t.target_pca_id = r.str(3);
  t.window = {r.i64(4), r.i64(5)};
  t.max_pseudonyms = r.u32(6);
  t.signature = copy(outer.bytes(2));
  if (t.window.start >= t.window.end || t.max_pseudonyms == 0 ||
      t.window.length() % t.max_pseudonyms != 0) {
    fail(Errc::MalformedMessage, "ticket window inconsistent");
  }
  return t;
}

Ticket sign_ticket(const KeyPair& ltca_key, Ticket ticket) {
  ticket.signature = sign_with_context(ltca_key, kTicketContext, ticket.tbs());
  return ticket;
}

bool verify_ticket(const Ticket& ticket, const PublicKey& ltca_key) {
  return verify_with_context(ltca_key, kTicketContext, ticket.tbs(),
                             ticket.signature);
}

// TicketRequest: 1 ltc | 2 start | 3 duration | 4 target | 5 request_time
Bytes TicketRequest::tbs() const {
  TlvWriter w;
  w.bytes(1, ltc.encode())
      .i64(2, start)
      .i64(3, duration)
      .str(4, target_pca_id)
      .i64(5, request_time);
  return std::move(w).take();
}

Bytes TicketRequest::encode() const {
  TlvWriter w;
  w.bytes(1, tbs()).bytes(2, signature);
  return std::move(w).take();
}

TicketRequest TicketRequest::decode(ByteView in) {
  TlvReader outer(in);
  TlvReader r(outer.bytes(1));
  TicketRequest q;
  q.ltc = Certificate::decode(r.bytes(1));
  q.start = r.i64(2);
  q.duration = r.i64(3);
  q.target_pca_id = r.str(4);
  q.request_time = r.i64(5);
  q.signature = copy(outer.bytes(2));
  return q;
}

TicketRequest make_ticket_request(const KeyPair& ltc_key, const Certificate& ltc,
                                  UnixSeconds start, std::int64_t duration,
                                  std::string target_pca_id, UnixSeconds now) {
  TicketRequest q;
  q.ltc = ltc;
  q.start = start;
  q.duration = duration;
  q.target_pca_id = std::move(target_pca_id);
  q.request_time = now;
  q.signature = sign_with_context(ltc_key, kTicketRequestContext, q.tbs());
  return q;
}

bool verify_ticket_request(const TicketRequest& req) {
  return verify_with_context(req.ltc.body.subject_public_key, kTicketRequestContext,
                             req.tbs(), req.signature);
}

// RaAuth: 1 ra_cert | 2 timestamp | 3 signature
Bytes RaAuth::encode() const {
  TlvWriter w;
  w.bytes(1, ra_cert.encode()).i64(2, timestamp).bytes(3, signature);
  return std::move(w).take();
}

RaAuth RaAuth::decode(ByteView in) {
  TlvReader r(in);
  RaAuth a;
  a.ra_cert = Certificate::decode(r.bytes(1));
  a.timestamp = r.i64(2);
  a.signature = copy(r.bytes(3));
  return a;
}

namespace {
Bytes ra_auth_tbs(std::string_view operation, ByteView payload, UnixSeconds ts) {
  TlvWriter w;
  w.str(1, operation).bytes(2, payload).i64(3, ts);
  return std::move(w).take();
}
}  // namespace

RaAuth make_ra_auth(const KeyPair& ra_key, const Certificate& ra_cert,
                    std::string_view operation, ByteView payload,
                    UnixSeconds now) {
  RaAuth a;
  a.ra_cert = ra_cert;
  a.timestamp = now;
  a.signature = sign_with_context(ra_key, kRaAuthContext,
                                  ra_auth_tbs(operation, payload, now));
  return a;
}

void check_ra_auth(const RaAuth& auth, const RaPolicy& policy,
                   std::string_view operation, ByteView payload,
                   UnixSeconds now) {
  const auto& cert = auth.ra_cert;
  if (cert.kind() != CertKind::Authority ||
      std::find(policy.ra_ids.begin(), policy.ra_ids.end(), cert.body.subject_id) ==
          policy.ra_ids.end()) {
    fail(Errc::Unauthorized, "caller '" + cert.body.subject_id +
                                 "' is not a resolution authority");
  }
  try {
    verify_chain(cert, policy.anchors, now);
  } catch (const VpkiError& e) {
    fail(Errc::Unauthorized, std::string("RA certificate rejected: ") + e.what());
  }
  if (std::llabs(now - auth.timestamp) > policy.max_clock_skew_s) {
    fail(Errc::Unauthorized, "stale RA authorization");
  }
  if (!verify_with_context(cert.body.subject_public_key, kRaAuthContext,
                           ra_auth_tbs(operation, payload, auth.timestamp),
                           auth.signature)) {
    fail(Errc::Unauthorized, "RA authorization signature invalid");
  }
}

Bytes RegisterRequest::encode() const {
  TlvWriter w;
  w.str(1, vehicle_id)
      .bytes(2, public_key.encode())
      .i64(3, validity.start)
      .i64(4, validity.end);
  return std::move(w).take();
}

RegisterRequest RegisterRequest::decode(ByteView in) {
  TlvReader r(in);
  RegisterRequest q;
  q.vehicle_id = r.str(1);
  q.public_key = PublicKey::decode(r.bytes(2));
  q.validity = {r.i64(3), r.i64(4)};
  return q;
}

Bytes CertificateMessage::encode() const {
  TlvWriter w;
  w.bytes(1, cert.encode());
  return std::move(w).take();
}

CertificateMessage CertificateMessage::decode(ByteView in) {
  TlvReader r(in);
  return {Certificate::decode(r.bytes(1))};
}

Bytes TicketMessage::encode() const {
  TlvWriter w;
  w.bytes(1, ticket.encode());
  return std::move(w).take();
}

TicketMessage TicketMessage::decode(ByteView in) {
  TlvReader r(in);
  return {Ticket::decode(r.bytes(1))};
}

Bytes PseudonymBatchRequest::encode() const {
  TlvWriter w;
  w.bytes(1, ticket.encode()).list(2, encode_all(csrs));
  return std::move(w).take();
}

PseudonymBatchRequest PseudonymBatchRequest::decode(ByteView in) {
  TlvReader r(in);
  PseudonymBatchRequest q;
  q.ticket = Ticket::decode(r.bytes(1));
  for (const auto& item : r.list(2)) q.csrs.push_back(Csr::decode(item));
  return q;
}

Bytes PseudonymBatchResponse::encode() const {
  TlvWriter w;
  w.list(1, encode_all(pseudonyms));
  return std::move(w).take();
}

PseudonymBatchResponse PseudonymBatchResponse::decode(ByteView in) {
  TlvReader r(in);
  PseudonymBatchResponse q;
  for (const auto& item : r.list(1)) q.pseudonyms.push_back(Certificate::decode(item));
  return q;
}

Bytes SerialRequest::encode() const {
  TlvWriter w;
  w.bytes(1, serial.view()).bytes(2, auth.encode());
  return std::move(w).take();
}

SerialRequest SerialRequest::decode(ByteView in) {
  TlvReader r(in);
  return {CertSerial::from_bytes(r.bytes(1)), RaAuth::decode(r.bytes(2))};
}

Bytes TicketIdRequest::encode() const {
  TlvWriter w;
  w.bytes(1, ticket_id.view()).bytes(2, auth.encode());
  return std::move(w).take();
}

TicketIdRequest TicketIdRequest::decode(ByteView in) {
  TlvReader r(in);
  return {TicketId::from_bytes(r.bytes(1)), RaAuth::decode(r.bytes(2))};
}

Bytes ResolveTicketResponse::encode() const {
  std::vector<Bytes> refs;
  for (const auto& t : tickets) {
    TlvWriter w;
    w.bytes(1, t.ticket_id.view()).str(2, t.target_pca_id);
    refs.push_back(std::move(w).take());
  }
  TlvWriter w;
  w.bytes(1, ltc_serial.view()).list(2, refs);
  return std::move(w).take();
}

ResolveTicketResponse ResolveTicketResponse::decode(ByteView in) {
  TlvReader r(in);
  ResolveTicketResponse q;
  q.ltc_serial = CertSerial::from_bytes(r.bytes(1));
  for (const auto& item : r.list(2)) {
    TlvReader ir(item);
    q.tickets.push_back({TicketId::from_bytes(ir.bytes(1)), ir.str(2)});
  }
  return q;
}

Bytes RevokeLtcResponse::encode() const {
  TlvWriter w;
  w.u8(1, was_active ? 1 : 0);
  return std::move(w).take();
}

RevokeLtcResponse RevokeLtcResponse::decode(ByteView in) {
  TlvReader r(in);
  return {r.u8(1) != 0};
}

Bytes LookupTicketResponse::encode() const {
  TlvWriter w;
  w.bytes(1, ticket_id.view());
  return std::move(w).take();
}

LookupTicketResponse LookupTicketResponse::decode(ByteView in) {
  TlvReader r(in);
  return {TicketId::from_bytes(r.bytes(1))};
}

Bytes SerialList::encode() const {
  TlvWriter w;
  w.list(1, encode_serials(serials));
  return std::move(w).take();
}

SerialList SerialList::decode(ByteView in) {
  TlvReader r(in);
  return {decode_serials(r.list(1))};
}

// Crl: 1 issuer_id | 2 revoked_serials | 3 issued_at
Bytes Crl::list_body() const {
  TlvWriter w;
  w.str(1, issuer_id).list(2, encode_serials(revoked_serials));
  return std::move(w).take();
}

Bytes Crl::tbs() const {
  TlvWriter w;
  w.str(1, issuer_id).list(2, encode_serials(revoked_serials)).i64(3, issued_at);
  return std::move(w).take();
}

Bytes Crl::encode() const {
  TlvWriter w;
  w.bytes(1, tbs()).bytes(2, signature);
  return std::move(w).take();
}

Crl Crl::decode(ByteView in) {
  TlvReader outer(in);
  TlvReader r(outer.bytes(1));
  Crl c;
  c.issuer_id = r.str(1);
  c.revoked_serials = decode_serials(r.list(2));
  c.issued_at = r.i64(3);
  c.signature = copy(outer.bytes(2));
  if (!std::is_sorted(c.revoked_serials.begin(), c.revoked_serials.end()) ||
      std::adjacent_find(c.revoked_serials.begin(), c.revoked_serials.end()) !=
          c.revoked_serials.end()) {
    fail(Errc::MalformedMessage, "CRL serials must be sorted and unique");
  }
  return c;
}

bool Crl::contains(const CertSerial& s) const {
  return std::binary_search(revoked_serials.begin(), revoked_serials.end(), s);
}

Crl sign_crl(const KeyPair& pca_key, Crl crl) {
  std::sort(crl.revoked_serials.begin(), crl.revoked_serials.end());
  crl.revoked_serials.erase(
      std::unique(crl.revoked_serials.begin(), crl.revoked_serials.end()),
      crl.revoked_serials.end());
  crl.signature = sign_with_context(pca_key, kCrlContext, crl.tbs());
  return crl;
}

bool verify_crl(const Crl& crl, const PublicKey& pca_key) {
  return verify_with_context(pca_key, kCrlContext, crl.tbs(), crl.signature);
}

Bytes ResolveRequest::encode() const {
  TlvWriter w;
  w.bytes(1, pseudonym_serial.view()).u8(2, revoke ? 1 : 0);
  return std::move(w).take();
}

ResolveRequest ResolveRequest::decode(ByteView in) {
  TlvReader r(in);
  return {CertSerial::from_bytes(r.bytes(1)), r.u8(2) != 0};
}

Bytes ResolutionResult::encode() const {
  TlvWriter w;
  w.bytes(1, pseudonym_serial.view())
      .bytes(2, ticket_id.view())
      .bytes(3, ltc_serial.view())
      .list(4, encode_serials(revoked_pseudonym_serials));
  return std::move(w).take();
}

ResolutionResult ResolutionResult::decode(ByteView in) {
  TlvReader r(in);
  ResolutionResult q;
  q.pseudonym_serial = CertSerial::from_bytes(r.bytes(1));
  q.ticket_id = TicketId::from_bytes(r.bytes(2));
  q.ltc_serial = CertSerial::from_bytes(r.bytes(3));
  q.revoked_pseudonym_serials = decode_serials(r.list(4));
  return q;
}

Bytes PingMessage::encode() const {
  TlvWriter w;
  w.bytes(1, payload);
  return std::move(w).take();
}

PingMessage PingMessage::decode(ByteView in) {
  TlvReader r(in);
  return {copy(r.bytes(1))};
}

Bytes ErrorMessage::encode() const {
  TlvWriter w;
  w.u32(1, code).str(2, message);
  if (detail) w.i64(3, *detail);
  if (!step.empty()) w.str(4, step);
  return std::move(w).take();
}

ErrorMessage ErrorMessage::decode(ByteView in) {
  TlvReader r(in);
  ErrorMessage e;
  e.code = static_cast<std::uint16_t>(r.u32(1));
  e.message = r.str(2);
  if (r.has(3)) e.detail = r.i64(3);
  if (r.has(4)) e.step = r.str(4);
  return e;
}

Bytes VehicleRecord::encode() const {
  TlvWriter w;
  w.str(1, vehicle_id)
      .bytes(2, ltc_serial.view())
      .u8(3, static_cast<std::uint8_t>(status))
      .bytes(4, ltc.encode());
  return std::move(w).take();
}

VehicleRecord VehicleRecord::decode(ByteView in) {
  TlvReader r(in);
  VehicleRecord v;
  v.vehicle_id = r.str(1);
  v.ltc_serial = CertSerial::from_bytes(r.bytes(2));
  auto st = r.u8(3);
  if (st != 1 && st != 2) fail(Errc::MalformedMessage, "bad vehicle status");
  v.status = static_cast<VehicleStatus>(st);
  v.ltc = Certificate::decode(r.bytes(4));
  return v;
}

Bytes TicketLedgerEntry::encode() const {
  TlvWriter w;
  w.bytes(1, ticket_id.view()).bytes(2, ltc_serial.view()).str(3, target_pca_id);
  return std::move(w).take();
}

TicketLedgerEntry TicketLedgerEntry::decode(ByteView in) {
  TlvReader r(in);
  return {TicketId::from_bytes(r.bytes(1)), CertSerial::from_bytes(r.bytes(2)),
          r.str(3)};
}

Bytes IssuanceRecord::encode() const {
  TlvWriter w;
  w.bytes(1, pseudonym_serial.view()).bytes(2, ticket_id.view()).i64(3, issued_at);
  return std::move(w).take();
}

IssuanceRecord IssuanceRecord::decode(ByteView in) {
  TlvReader r(in);
  return {CertSerial::from_bytes(r.bytes(1)), TicketId::from_bytes(r.bytes(2)),
          r.i64(3)};
}

}  // namespace vpki
