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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpki/clock.hpp"
#include "vpki/codec.hpp"
#include "vpki/credentials.hpp"

// Payload types exchanged between vehicles and authorities, and the records
// the authorities persist. Every type has a canonical TLV encoding (see
// docs/wire-format.md for tag tables).
namespace vpki {

// Single-use authorization token. Carries nothing that identifies the
// requesting vehicle: two vehicles asking for the same window at the same PCA
// receive tickets that differ only in ticket_id and signature.
struct Ticket {
  TicketId ticket_id;
  std::string issuer_id;
  std::string target_pca_id;
  Validity window;
  std::uint32_t max_pseudonyms = 0;
  Bytes signature;

  std::int64_t slot_seconds() const {
    return max_pseudonyms == 0 ? 0 : window.length() / max_pseudonyms;
  }
  Validity slot(std::uint32_t i) const {
    auto len = slot_seconds();
    return {window.start + len * i, window.start + len * (i + 1)};
  }

  Bytes tbs() const;
  Bytes encode() const;
  static Ticket decode(ByteView in);
};

Ticket sign_ticket(const KeyPair& ltca_key, Ticket ticket);
bool verify_ticket(const Ticket& ticket, const PublicKey& ltca_key);

// A vehicle's request for a ticket, signed with its LTC key.
struct TicketRequest {
  Certificate ltc;
  UnixSeconds start = 0;
  std::int64_t duration = 0;
  std::string target_pca_id;
  UnixSeconds request_time = 0;
  Bytes signature;

  Bytes tbs() const;
  Bytes encode() const;
  static TicketRequest decode(ByteView in);
};

TicketRequest make_ticket_request(const KeyPair& ltc_key, const Certificate& ltc,
                                  UnixSeconds start, std::int64_t duration,
                                  std::string target_pca_id, UnixSeconds now);
bool verify_ticket_request(const TicketRequest& req);

// Proof that a request comes from the resolution authority: the RA's
// authority certificate plus a signature binding operation, payload and time.
struct RaAuth {
  Certificate ra_cert;
  UnixSeconds timestamp = 0;
  Bytes signature;

  Bytes encode() const;
  static RaAuth decode(ByteView in);
};

RaAuth make_ra_auth(const KeyPair& ra_key, const Certificate& ra_cert,
                    std::string_view operation, ByteView payload, UnixSeconds now);

struct RaPolicy {
  std::vector<Certificate> anchors;
  std::vector<std::string> ra_ids{"ra"};
  std::int64_t max_clock_skew_s = 300;
};

// Throws Unauthorized unless auth is a fresh signature over (operation,
// payload) by a certificate whose subject is one of policy.ra_ids and which
// chains to policy.anchors.
void check_ra_auth(const RaAuth& auth, const RaPolicy& policy,
                   std::string_view operation, ByteView payload, UnixSeconds now);

struct RegisterRequest {
  std::string vehicle_id;
  PublicKey public_key;
  Validity validity;

  Bytes encode() const;
  static RegisterRequest decode(ByteView in);
};

struct CertificateMessage {
  Certificate cert;
  Bytes encode() const;
  static CertificateMessage decode(ByteView in);
};

struct TicketMessage {
  Ticket ticket;
  Bytes encode() const;
  static TicketMessage decode(ByteView in);
};

struct PseudonymBatchRequest {
  Ticket ticket;
  std::vector<Csr> csrs;

  Bytes encode() const;
  static PseudonymBatchRequest decode(ByteView in);
};

struct PseudonymBatchResponse {
  std::vector<Certificate> pseudonyms;

  Bytes encode() const;
  static PseudonymBatchResponse decode(ByteView in);
};

// Serial-keyed request carrying RA authorization: lookup_ticket and
// revoke_ltc use it.
struct SerialRequest {
  CertSerial serial;
  RaAuth auth;

  Bytes encode() const;
  static SerialRequest decode(ByteView in);
};

struct TicketIdRequest {
  TicketId ticket_id;
  RaAuth auth;

  Bytes encode() const;
  static TicketIdRequest decode(ByteView in);
};

struct TicketRef {
  TicketId ticket_id;
  std::string target_pca_id;
  bool operator==(const TicketRef&) const = default;
};

// LTCA answer to resolve_ticket: the LTC behind the ticket plus every ticket
// ledgered under that LTC (revocation scope).
struct ResolveTicketResponse {
  CertSerial ltc_serial;
  std::vector<TicketRef> tickets;

  Bytes encode() const;
  static ResolveTicketResponse decode(ByteView in);
};

struct RevokeLtcResponse {
  bool was_active = false;
  Bytes encode() const;
  static RevokeLtcResponse decode(ByteView in);
};

struct LookupTicketResponse {
  TicketId ticket_id;
  Bytes encode() const;
  static LookupTicketResponse decode(ByteView in);
};

struct SerialList {
  std::vector<CertSerial> serials;
  Bytes encode() const;
  static SerialList decode(ByteView in);
};

struct Crl {
  std::string issuer_id;
  UnixSeconds issued_at = 0;
  std::vector<CertSerial> revoked_serials;  // sorted, duplicate-free
  Bytes signature;

  // Encoding of everything except issued_at and the signature.
  Bytes list_body() const;
  Bytes tbs() const;
  Bytes encode() const;
  static Crl decode(ByteView in);
  bool contains(const CertSerial& s) const;
};

Crl sign_crl(const KeyPair& pca_key, Crl crl);
bool verify_crl(const Crl& crl, const PublicKey& pca_key);

struct ResolveRequest {
  CertSerial pseudonym_serial;
  bool revoke = false;
  Bytes encode() const;
  static ResolveRequest decode(ByteView in);
};

struct ResolutionResult {
  CertSerial pseudonym_serial;
  TicketId ticket_id;
  CertSerial ltc_serial;
  std::vector<CertSerial> revoked_pseudonym_serials;

  Bytes encode() const;
  static ResolutionResult decode(ByteView in);
};

struct PingMessage {
  Bytes payload;
  Bytes encode() const;
  static PingMessage decode(ByteView in);
};

struct ErrorMessage {
  std::uint16_t code = 0;
  std::string message;
  std::optional<std::int64_t> detail;
  std::string step;

  Bytes encode() const;
  static ErrorMessage decode(ByteView in);
};

// Persistent records.
enum class VehicleStatus : std::uint8_t { Active = 1, Revoked = 2 };

struct VehicleRecord {
  std::string vehicle_id;
  CertSerial ltc_serial;
  VehicleStatus status = VehicleStatus::Active;
  Certificate ltc;

  Bytes encode() const;
  static VehicleRecord decode(ByteView in);
};

struct TicketLedgerEntry {
  TicketId ticket_id;
  CertSerial ltc_serial;
  std::string target_pca_id;

  Bytes encode() const;
  static TicketLedgerEntry decode(ByteView in);
};

struct IssuanceRecord {
  CertSerial pseudonym_serial;
  TicketId ticket_id;
  UnixSeconds issued_at = 0;

  Bytes encode() const;
  static IssuanceRecord decode(ByteView in);
};

}  // namespace vpki
