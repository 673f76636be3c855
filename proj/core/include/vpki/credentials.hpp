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

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "vpki/clock.hpp"
#include "vpki/codec.hpp"

struct evp_pkey_st;

namespace vpki {

enum class Curve : std::uint8_t {
  P256 = 1,  // secp256r1, the IEEE 1609.2 / ETSI default
  P384 = 2,
};

std::string_view curve_name(Curve c);
Curve curve_from_name(std::string_view name);

// 128-bit identifiers drawn from the OpenSSL CSPRNG. The tag type keeps
// certificate serials and ticket ids from being mixed up.
template <class Tag>
struct Id128 {
  std::array<std::uint8_t, 16> bytes{};

  static Id128 random();
  static Id128 from_bytes(ByteView b);
  static Id128 from_hex(std::string_view hex) {
    return from_bytes(vpki::from_hex(hex));
  }
  std::string hex() const { return to_hex(bytes); }
  ByteView view() const { return bytes; }

  auto operator<=>(const Id128&) const = default;
};

void random_bytes(std::span<std::uint8_t> out);

struct SerialTag;
struct TicketIdTag;
using CertSerial = Id128<SerialTag>;
using TicketId = Id128<TicketIdTag>;

template <class Tag>
Id128<Tag> Id128<Tag>::random() {
  Id128 id;
  random_bytes(id.bytes);
  return id;
}

[[noreturn]] void throw_bad_id_length(std::size_t got);

template <class Tag>
Id128<Tag> Id128<Tag>::from_bytes(ByteView b) {
  if (b.size() != 16) throw_bad_id_length(b.size());
  Id128 id;
  std::copy(b.begin(), b.end(), id.bytes.begin());
  return id;
}

class PublicKey {
 public:
  PublicKey() = default;

  // curve byte followed by the SEC1 uncompressed point.
  static PublicKey decode(ByteView encoded);
  const Bytes& encode() const { return encoded_; }
  Curve curve() const { return curve_; }

  // Signatures are fixed-width r||s. Returns false on any mismatch or
  // malformed signature, never throws for bad input.
  bool verify(ByteView message, ByteView signature) const;

  bool operator==(const PublicKey& o) const { return encoded_ == o.encoded_; }

 private:
  friend class KeyPair;
  PublicKey(std::shared_ptr<evp_pkey_st> key, Curve curve, Bytes encoded);

  std::shared_ptr<evp_pkey_st> key_;
  Curve curve_ = Curve::P256;
  Bytes encoded_;
};

class KeyPair {
 public:
  static KeyPair generate(Curve curve = Curve::P256);
  static KeyPair from_private_scalar(Curve curve, ByteView scalar);
  static KeyPair from_pem(std::string_view pem);

  Bytes private_scalar() const;
  std::string to_pem() const;
  const PublicKey& public_key() const { return public_; }
  Curve curve() const { return public_.curve(); }

  Bytes sign(ByteView message) const;

  // OpenSSL EVP_PKEY, for code that needs to hand the key to libssl.
  evp_pkey_st* native_handle() const { return key_.get(); }

 private:
  KeyPair(std::shared_ptr<evp_pkey_st> key, PublicKey pub)
      : key_(std::move(key)), public_(std::move(pub)) {}

  std::shared_ptr<evp_pkey_st> key_;
  PublicKey public_;
};

std::size_t signature_size(Curve c);

enum class CertKind : std::uint8_t {
  Ltc = 1,
  Pseudonym = 2,
  Authority = 3,
};

std::string_view cert_kind_name(CertKind k);

// Half-open [start, end).
struct Validity {
  UnixSeconds start = 0;
  UnixSeconds end = 0;

  bool contains(UnixSeconds t) const { return start <= t && t < end; }
  std::int64_t length() const { return end - start; }
  bool operator==(const Validity&) const = default;
};

// subject_id names the vehicle for an LTC and the authority for an
// authority certificate. Pseudonyms must leave it empty.
struct CertificateBody {
  CertSerial serial;
  CertKind kind = CertKind::Pseudonym;
  std::string subject_id;
  PublicKey subject_public_key;
  Validity validity;
  std::string issuer_id;
};

struct Certificate {
  CertificateBody body;
  Bytes signature;

  Bytes tbs() const;
  Bytes encode() const;
  static Certificate decode(ByteView encoded);

  const CertSerial& serial() const { return body.serial; }
  CertKind kind() const { return body.kind; }
  const Validity& validity() const { return body.validity; }
};

Bytes encode_tbs(const CertificateBody& body);

Certificate sign_certificate(const KeyPair& issuer, CertificateBody tbs);
bool verify_certificate(const Certificate& cert, const PublicKey& issuer);

// Succeeds when cert chains to one of the anchors, either directly or through
// one of the intermediates (each of which must chain to an anchor), and every
// certificate on the path is valid at the given time. Throws VpkiError with
// UnknownIssuer, Expired, NotYetValid or BadSignature otherwise.
void verify_chain(const Certificate& cert, std::span<const Certificate> anchors,
                  UnixSeconds at,
                  std::span<const Certificate> intermediates = {});

struct Csr {
  PublicKey subject_public_key;
  Bytes pop_signature;

  Bytes encode() const;
  static Csr decode(ByteView encoded);
};

Csr make_csr(const KeyPair& kp);
// Throws BadProofOfPossession.
void verify_csr(const Csr& csr);

// An authority's signing key together with its authority certificate.
struct AuthorityCredential {
  KeyPair key;
  Certificate cert;

  const std::string& id() const { return cert.body.subject_id; }
};

AuthorityCredential make_root_authority(std::string id, Validity validity,
                                        Curve curve = Curve::P256);
AuthorityCredential issue_authority(const AuthorityCredential& issuer,
                                    std::string subject_id, Validity validity,
                                    Curve curve = Curve::P256);

// Domain-separated signing helpers for arbitrary canonical payloads.
Bytes sign_with_context(const KeyPair& key, std::string_view context,
                        ByteView payload);
bool verify_with_context(const PublicKey& key, std::string_view context,
                         ByteView payload, ByteView signature);

}  // namespace vpki
