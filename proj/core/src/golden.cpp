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
#include "vpki/golden.hpp"

#include "vpki/error.hpp"
#include "vpki/messages.hpp"

namespace vpki {
namespace {

KeyPair fixed_key(std::uint8_t seed) {
  Bytes scalar(32);
  for (std::size_t i = 0; i < scalar.size(); ++i) {
    scalar[i] = static_cast<std::uint8_t>(seed + i);
  }
  return KeyPair::from_private_scalar(Curve::P256, scalar);
}

Bytes filler(std::size_t n, std::uint8_t start) {
  Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(start + i);
  return b;
}

template <class Id>
Id fixed_id(std::uint8_t start) {
  return Id::from_bytes(filler(16, start));
}

constexpr UnixSeconds kT0 = 1'700'000'400;

Certificate sample_cert(CertKind kind, std::string subject, std::string issuer,
                        std::uint8_t seed) {
  Certificate c;
  c.body.serial = fixed_id<CertSerial>(seed);
  c.body.kind = kind;
  c.body.subject_id = std::move(subject);
  c.body.subject_public_key = fixed_key(seed).public_key();
  c.body.validity = {kT0, kT0 + 300};
  c.body.issuer_id = std::move(issuer);
  c.signature = filler(64, 0xa0);
  return c;
}

Ticket sample_ticket() {
  Ticket t;
  t.ticket_id = fixed_id<TicketId>(0x40);
  t.issuer_id = "ltca";
  t.target_pca_id = "pca";
  t.window = {kT0, kT0 + 3600};
  t.max_pseudonyms = 12;
  t.signature = filler(64, 0xb0);
  return t;
}

Csr sample_csr(std::uint8_t seed) {
  return Csr{fixed_key(seed).public_key(), filler(64, 0xc0)};
}

RaAuth sample_auth() {
  return RaAuth{sample_cert(CertKind::Authority, "ra", "root", 0x30), kT0, filler(64, 0xd0)};
}

GoldenVector env(std::string name, MessageType type, Bytes body) {
  Envelope e{kProtocolVersion, type, 0x0102030405060708ULL, std::move(body)};
  return {std::move(name), encode_envelope(e), true, type};
}

}  // namespace

std::vector<GoldenVector> golden_vectors() {
  using T = MessageType;
  const auto ltc = sample_cert(CertKind::Ltc, "vehicle-1", "ltca", 0x10);
  const auto pseudonym = sample_cert(CertKind::Pseudonym, "", "pca", 0x20);
  std::vector<GoldenVector> out;

  out.push_back({"certificate", ltc.encode(), false, T::Ping});
  out.push_back({"csr", sample_csr(0x50).encode(), false, T::Ping});

  out.push_back(env("error", T::Error,
                    ErrorMessage{static_cast<std::uint16_t>(Errc::TicketAlreadyUsed),
                                 "ticket already used", 3, "pseudonym"}
                        .encode()));
  out.push_back(env("ping", T::Ping, PingMessage{filler(4, 0x01)}.encode()));
  out.push_back(env("pong", T::Pong, PingMessage{filler(4, 0x01)}.encode()));

  out.push_back(env("register_request", T::RegisterRequest,
                    RegisterRequest{"vehicle-1", fixed_key(0x10).public_key(),
                                    {kT0, kT0 + 86400}}
                        .encode()));
  out.push_back(env("register_response", T::RegisterResponse, CertificateMessage{ltc}.encode()));

  TicketRequest tr;
  tr.ltc = ltc;
  tr.start = kT0;
  tr.duration = 3600;
  tr.target_pca_id = "pca";
  tr.request_time = kT0 - 5;
  tr.signature = filler(64, 0xe0);
  out.push_back(env("ticket_request", T::TicketRequest, tr.encode()));
  out.push_back(env("ticket_response", T::TicketResponse, TicketMessage{sample_ticket()}.encode()));

  out.push_back(env("resolve_ticket_request", T::ResolveTicketRequest,
                    TicketIdRequest{fixed_id<TicketId>(0x40), sample_auth()}.encode()));
  out.push_back(env("resolve_ticket_response", T::ResolveTicketResponse,
                    ResolveTicketResponse{fixed_id<CertSerial>(0x10),
                                          {{fixed_id<TicketId>(0x40), "pca"},
                                           {fixed_id<TicketId>(0x41), "pcb"}}}
                        .encode()));
  out.push_back(env("revoke_ltc_request", T::RevokeLtcRequest,
                    SerialRequest{fixed_id<CertSerial>(0x10), sample_auth()}.encode()));
  out.push_back(env("revoke_ltc_response", T::RevokeLtcResponse, RevokeLtcResponse{true}.encode()));

  out.push_back(env("pseudonym_batch_request", T::PseudonymBatchRequest,
                    PseudonymBatchRequest{sample_ticket(), {sample_csr(0x50), sample_csr(0x51)}}
                        .encode()));
  out.push_back(env("pseudonym_batch_response", T::PseudonymBatchResponse,
                    PseudonymBatchResponse{{pseudonym}}.encode()));
  out.push_back(env("lookup_ticket_request", T::LookupTicketRequest,
                    SerialRequest{fixed_id<CertSerial>(0x20), sample_auth()}.encode()));
  out.push_back(env("lookup_ticket_response", T::LookupTicketResponse,
                    LookupTicketResponse{fixed_id<TicketId>(0x40)}.encode()));
  out.push_back(env("revoke_by_ticket_request", T::RevokeByTicketRequest,
                    TicketIdRequest{fixed_id<TicketId>(0x40), sample_auth()}.encode()));
  out.push_back(env("revoke_by_ticket_response", T::RevokeByTicketResponse,
                    SerialList{{fixed_id<CertSerial>(0x20), fixed_id<CertSerial>(0x21)}}.encode()));
  out.push_back(env("crl_request", T::CrlRequest, {}));
  out.push_back(env("crl_response", T::CrlResponse,
                    Crl{"pca", kT0, {fixed_id<CertSerial>(0x20), fixed_id<CertSerial>(0x21)},
                        filler(64, 0xf0)}
                        .encode()));

  out.push_back(env("resolve_request", T::ResolveRequest,
                    ResolveRequest{fixed_id<CertSerial>(0x20), true}.encode()));
  out.push_back(env("resolve_response", T::ResolveResponse,
                    ResolutionResult{fixed_id<CertSerial>(0x20), fixed_id<TicketId>(0x40),
                                     fixed_id<CertSerial>(0x10),
                                     {fixed_id<CertSerial>(0x20), fixed_id<CertSerial>(0x21)}}
                        .encode()));
  return out;
}

Bytes reencode_golden(const GoldenVector& v) {
  using T = MessageType;
  if (!v.is_envelope) {
    return v.name == "csr" ? Csr::decode(v.bytes).encode() : Certificate::decode(v.bytes).encode();
  }
  auto e = decode_envelope(v.bytes);
  const ByteView b = e.body;
  switch (e.type) {
    case T::Error: e.body = ErrorMessage::decode(b).encode(); break;
    case T::Ping:
    case T::Pong: e.body = PingMessage::decode(b).encode(); break;
    case T::RegisterRequest: e.body = RegisterRequest::decode(b).encode(); break;
    case T::RegisterResponse: e.body = CertificateMessage::decode(b).encode(); break;
    case T::TicketRequest: e.body = TicketRequest::decode(b).encode(); break;
    case T::TicketResponse: e.body = TicketMessage::decode(b).encode(); break;
    case T::ResolveTicketRequest:
    case T::RevokeByTicketRequest: e.body = TicketIdRequest::decode(b).encode(); break;
    case T::ResolveTicketResponse: e.body = ResolveTicketResponse::decode(b).encode(); break;
    case T::RevokeLtcRequest:
    case T::LookupTicketRequest: e.body = SerialRequest::decode(b).encode(); break;
    case T::RevokeLtcResponse: e.body = RevokeLtcResponse::decode(b).encode(); break;
    case T::PseudonymBatchRequest: e.body = PseudonymBatchRequest::decode(b).encode(); break;
    case T::PseudonymBatchResponse: e.body = PseudonymBatchResponse::decode(b).encode(); break;
    case T::LookupTicketResponse: e.body = LookupTicketResponse::decode(b).encode(); break;
    case T::RevokeByTicketResponse: e.body = SerialList::decode(b).encode(); break;
    case T::CrlRequest: break;
    case T::CrlResponse: e.body = Crl::decode(b).encode(); break;
    case T::ResolveRequest: e.body = ResolveRequest::decode(b).encode(); break;
    case T::ResolveResponse: e.body = ResolutionResult::decode(b).encode(); break;
  }
  return encode_envelope(e);
}

}  // namespace vpki
