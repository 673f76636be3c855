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
#include "vpki/credentials.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/obj_mac.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rand.h>

#include <functional>
#include <limits>

#include "vpki/error.hpp"

namespace vpki {
namespace {

template <auto Fn>
struct Deleter {
  template <class T>
  void operator()(T* p) const {
    Fn(p);
  }
};

using BnPtr = std::unique_ptr<BIGNUM, Deleter<BN_free>>;
using BioPtr = std::unique_ptr<BIO, Deleter<BIO_free>>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, Deleter<EVP_MD_CTX_free>>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, Deleter<EVP_PKEY_CTX_free>>;
using EcdsaSigPtr = std::unique_ptr<ECDSA_SIG, Deleter<ECDSA_SIG_free>>;
using EcGroupPtr = std::unique_ptr<EC_GROUP, Deleter<EC_GROUP_free>>;
using EcPointPtr = std::unique_ptr<EC_POINT, Deleter<EC_POINT_free>>;
using ParamBldPtr = std::unique_ptr<OSSL_PARAM_BLD, Deleter<OSSL_PARAM_BLD_free>>;
using ParamPtr = std::unique_ptr<OSSL_PARAM, Deleter<OSSL_PARAM_free>>;

std::shared_ptr<EVP_PKEY> wrap(EVP_PKEY* p) {
  return std::shared_ptr<EVP_PKEY>(p, EVP_PKEY_free);
}

[[noreturn]] void crypto_fail(const std::string& what) {
  unsigned long e = ERR_get_error();
  std::string msg = what;
  if (e != 0) {
    char buf[256];
    ERR_error_string_n(e, buf, sizeof(buf));
    msg += " (";
    msg += buf;
    msg += ")";
  }
  ERR_clear_error();
  fail(Errc::CryptoFailure, msg);
}

const char* group_name(Curve c) {
  switch (c) {
    case Curve::P256: return "prime256v1";
    case Curve::P384: return "secp384r1";
  }
  fail(Errc::InvalidArgument, "unknown curve");
}

int group_nid(Curve c) {
  return c == Curve::P256 ? NID_X9_62_prime256v1 : NID_secp384r1;
}

std::size_t scalar_size(Curve c) { return c == Curve::P256 ? 32 : 48; }

const EVP_MD* digest_for(Curve c) {
  return c == Curve::P256 ? EVP_sha256() : EVP_sha384();
}

Curve curve_from_byte(std::uint8_t b) {
  if (b == static_cast<std::uint8_t>(Curve::P256)) return Curve::P256;
  if (b == static_cast<std::uint8_t>(Curve::P384)) return Curve::P384;
  fail(Errc::MalformedMessage, "unknown curve id " + std::to_string(b));
}

Curve curve_of(EVP_PKEY* pkey) {
  char name[64];
  size_t len = 0;
  if (EVP_PKEY_get_utf8_string_param(pkey, OSSL_PKEY_PARAM_GROUP_NAME, name,
                                     sizeof(name), &len) != 1) {
    crypto_fail("key has no EC group");
  }
  std::string_view n(name, len);
  if (n == "prime256v1" || n == "P-256") return Curve::P256;
  if (n == "secp384r1" || n == "P-384") return Curve::P384;
  fail(Errc::InvalidArgument, "unsupported curve " + std::string(n));
}

Bytes encoded_point(EVP_PKEY* pkey) {
  unsigned char* buf = nullptr;
  size_t len = EVP_PKEY_get1_encoded_public_key(pkey, &buf);
  if (len == 0) crypto_fail("cannot encode public key");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

std::shared_ptr<EVP_PKEY> pkey_from_point(Curve curve, ByteView point) {
  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  if (!bld ||
      !OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME,
                                       group_name(curve), 0) ||
      !OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY,
                                        point.data(), point.size())) {
    crypto_fail("param build");
  }
  ParamPtr params(OSSL_PARAM_BLD_to_param(bld.get()));
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_fromdata_init(ctx.get()) <= 0 ||
      EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params.get()) <= 0) {
    ERR_clear_error();
    fail(Errc::MalformedMessage, "invalid public key point");
  }
  auto key = wrap(raw);
  PkeyCtxPtr check(EVP_PKEY_CTX_new_from_pkey(nullptr, raw, nullptr));
  if (!check || EVP_PKEY_public_check(check.get()) != 1) {
    ERR_clear_error();
    fail(Errc::MalformedMessage, "public key not on curve");
  }
  return key;
}

Bytes der_to_fixed(const Bytes& der, Curve curve) {
  const unsigned char* p = der.data();
  EcdsaSigPtr sig(d2i_ECDSA_SIG(nullptr, &p, static_cast<long>(der.size())));
  if (!sig) crypto_fail("bad DER signature from signer");
  const BIGNUM* r = nullptr;
  const BIGNUM* s = nullptr;
  ECDSA_SIG_get0(sig.get(), &r, &s);
  auto n = scalar_size(curve);
  Bytes out(2 * n);
  if (BN_bn2binpad(r, out.data(), static_cast<int>(n)) < 0 ||
      BN_bn2binpad(s, out.data() + n, static_cast<int>(n)) < 0) {
    crypto_fail("signature encoding");
  }
  return out;
}

std::optional<Bytes> fixed_to_der(ByteView sig, Curve curve) {
  auto n = scalar_size(curve);
  if (sig.size() != 2 * n) return std::nullopt;
  BIGNUM* r = BN_bin2bn(sig.data(), static_cast<int>(n), nullptr);
  BIGNUM* s = BN_bin2bn(sig.data() + n, static_cast<int>(n), nullptr);
  EcdsaSigPtr es(ECDSA_SIG_new());
  if (!r || !s || !es || ECDSA_SIG_set0(es.get(), r, s) != 1) {
    BN_free(r);
    BN_free(s);
    return std::nullopt;
  }
  unsigned char* der = nullptr;
  int len = i2d_ECDSA_SIG(es.get(), &der);
  if (len <= 0) return std::nullopt;
  Bytes out(der, der + len);
  OPENSSL_free(der);
  return out;
}

Bytes with_context(std::string_view context, ByteView payload) {
  Bytes msg(context.begin(), context.end());
  msg.push_back(0);
  msg.insert(msg.end(), payload.begin(), payload.end());
  return msg;
}

constexpr std::string_view kCertContext = "vpki/certificate/v1";
constexpr std::string_view kCsrContext = "vpki/csr-pop/v1";

}  // namespace

void throw_bad_id_length(std::size_t got) {
  fail(Errc::MalformedMessage,
       "128-bit identifier must be 16 bytes, got " + std::to_string(got));
}

void random_bytes(std::span<std::uint8_t> out) {
  if (out.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()) ||
      RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    ERR_clear_error();
    fail(Errc::EntropyFailure, "RAND_bytes failed");
  }
}

std::string_view curve_name(Curve c) {
  return c == Curve::P256 ? "P-256" : "P-384";
}

Curve curve_from_name(std::string_view name) {
  if (name == "P-256" || name == "p256" || name == "prime256v1") return Curve::P256;
  if (name == "P-384" || name == "p384" || name == "secp384r1") return Curve::P384;
  fail(Errc::InvalidArgument, "unsupported curve " + std::string(name));
}

std::size_t signature_size(Curve c) { return 2 * scalar_size(c); }

PublicKey::PublicKey(std::shared_ptr<evp_pkey_st> key, Curve curve, Bytes encoded)
    : key_(std::move(key)), curve_(curve), encoded_(std::move(encoded)) {}

PublicKey PublicKey::decode(ByteView encoded) {
  if (encoded.size() < 2) fail(Errc::MalformedMessage, "public key too short");
  Curve curve = curve_from_byte(encoded[0]);
  auto key = pkey_from_point(curve, encoded.subspan(1));
  return PublicKey(std::move(key), curve, Bytes(encoded.begin(), encoded.end()));
}

bool PublicKey::verify(ByteView message, ByteView signature) const {
  if (!key_) return false;
  auto der = fixed_to_der(signature, curve_);
  if (!der) return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx ||
      EVP_DigestVerifyInit(ctx.get(), nullptr, digest_for(curve_), nullptr,
                           key_.get()) != 1) {
    ERR_clear_error();
    return false;
  }
  int rc = EVP_DigestVerify(ctx.get(), der->data(), der->size(), message.data(),
                            message.size());
  if (rc != 1) ERR_clear_error();
  return rc == 1;
}

KeyPair KeyPair::generate(Curve curve) {
  if (RAND_status() != 1) fail(Errc::EntropyFailure, "PRNG not seeded");
  EVP_PKEY* raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", group_name(curve));
  if (raw == nullptr) crypto_fail("EC key generation failed");
  auto key = wrap(raw);
  Bytes enc{static_cast<std::uint8_t>(curve)};
  auto point = encoded_point(raw);
  enc.insert(enc.end(), point.begin(), point.end());
  return KeyPair(key, PublicKey(key, curve, std::move(enc)));
}

KeyPair KeyPair::from_private_scalar(Curve curve, ByteView scalar) {
  if (scalar.size() != scalar_size(curve)) {
    fail(Errc::InvalidArgument, "private scalar has wrong length");
  }
  EcGroupPtr group(EC_GROUP_new_by_curve_name(group_nid(curve)));
  BnPtr priv(BN_bin2bn(scalar.data(), static_cast<int>(scalar.size()), nullptr));
  if (!group || !priv) crypto_fail("scalar import");
  if (BN_is_zero(priv.get()) || BN_cmp(priv.get(), EC_GROUP_get0_order(group.get())) >= 0) {
    fail(Errc::InvalidArgument, "private scalar out of range");
  }
  EcPointPtr pub(EC_POINT_new(group.get()));
  if (!pub || EC_POINT_mul(group.get(), pub.get(), priv.get(), nullptr, nullptr,
                           nullptr) != 1) {
    crypto_fail("public point derivation");
  }
  Bytes point(1 + 2 * scalar_size(curve));
  if (EC_POINT_point2oct(group.get(), pub.get(), POINT_CONVERSION_UNCOMPRESSED,
                         point.data(), point.size(), nullptr) != point.size()) {
    crypto_fail("point encoding");
  }

  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  if (!bld ||
      !OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME,
                                       group_name(curve), 0) ||
      !OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_PRIV_KEY, priv.get()) ||
      !OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY,
                                        point.data(), point.size())) {
    crypto_fail("param build");
  }
  ParamPtr params(OSSL_PARAM_BLD_to_param(bld.get()));
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_fromdata_init(ctx.get()) <= 0 ||
      EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_KEYPAIR, params.get()) <= 0) {
    crypto_fail("keypair import");
  }
  auto key = wrap(raw);
  Bytes enc{static_cast<std::uint8_t>(curve)};
  enc.insert(enc.end(), point.begin(), point.end());
  return KeyPair(key, PublicKey(key, curve, std::move(enc)));
}

KeyPair KeyPair::from_pem(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  EVP_PKEY* raw = bio ? PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr)
                      : nullptr;
  if (raw == nullptr) crypto_fail("cannot parse PEM private key");
  auto key = wrap(raw);
  Curve curve = curve_of(raw);
  Bytes enc{static_cast<std::uint8_t>(curve)};
  auto point = encoded_point(raw);
  enc.insert(enc.end(), point.begin(), point.end());
  return KeyPair(key, PublicKey(key, curve, std::move(enc)));
}

Bytes KeyPair::private_scalar() const {
  BIGNUM* raw = nullptr;
  if (EVP_PKEY_get_bn_param(key_.get(), OSSL_PKEY_PARAM_PRIV_KEY, &raw) != 1) {
    crypto_fail("cannot export private scalar");
  }
  BnPtr bn(raw);
  Bytes out(scalar_size(curve()));
  if (BN_bn2binpad(bn.get(), out.data(), static_cast<int>(out.size())) < 0) {
    crypto_fail("scalar encoding");
  }
  return out;
}

std::string KeyPair::to_pem() const {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio || PEM_write_bio_PrivateKey(bio.get(), key_.get(), nullptr, nullptr, 0,
                                       nullptr, nullptr) != 1) {
    crypto_fail("PEM export");
  }
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(len));
}

Bytes KeyPair::sign(ByteView message) const {
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, digest_for(curve()), nullptr,
                                 key_.get()) != 1) {
    crypto_fail("sign init");
  }
  size_t len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()) != 1) {
    crypto_fail("sign size");
  }
  Bytes der(len);
  if (EVP_DigestSign(ctx.get(), der.data(), &len, message.data(), message.size()) != 1) {
    crypto_fail("sign");
  }
  der.resize(len);
  return der_to_fixed(der, curve());
}

Bytes sign_with_context(const KeyPair& key, std::string_view context,
                        ByteView payload) {
  return key.sign(with_context(context, payload));
}

bool verify_with_context(const PublicKey& key, std::string_view context,
                         ByteView payload, ByteView signature) {
  return key.verify(with_context(context, payload), signature);
}

std::string_view cert_kind_name(CertKind k) {
  switch (k) {
    case CertKind::Ltc: return "LTC";
    case CertKind::Pseudonym: return "Pseudonym";
    case CertKind::Authority: return "Authority";
  }
  return "?";
}

namespace tag {
enum : std::uint16_t {
  kSerial = 1,
  kKind = 2,
  kSubjectId = 3,
  kSubjectKey = 4,
  kValidStart = 5,
  kValidEnd = 6,
  kIssuerId = 7,
};
enum : std::uint16_t { kTbs = 1, kSignature = 2 };
enum : std::uint16_t { kCsrKey = 1, kCsrPop = 2 };
}  // namespace tag

Bytes encode_tbs(const CertificateBody& body) {
  TlvWriter w;
  w.bytes(tag::kSerial, body.serial.view());
  w.u8(tag::kKind, static_cast<std::uint8_t>(body.kind));
  if (body.kind != CertKind::Pseudonym) w.str(tag::kSubjectId, body.subject_id);
  w.bytes(tag::kSubjectKey, body.subject_public_key.encode());
  w.i64(tag::kValidStart, body.validity.start);
  w.i64(tag::kValidEnd, body.validity.end);
  w.str(tag::kIssuerId, body.issuer_id);
  return std::move(w).take();
}

namespace {
CertKind kind_from_byte(std::uint8_t b) {
  switch (b) {
    case 1: return CertKind::Ltc;
    case 2: return CertKind::Pseudonym;
    case 3: return CertKind::Authority;
  }
  fail(Errc::MalformedMessage, "unknown certificate kind");
}

CertificateBody decode_tbs(ByteView in) {
  TlvReader r(in);
  CertificateBody body;
  body.serial = CertSerial::from_bytes(r.bytes(tag::kSerial));
  body.kind = kind_from_byte(r.u8(tag::kKind));
  if (body.kind == CertKind::Pseudonym) {
    if (r.has(tag::kSubjectId)) {
      fail(Errc::MalformedMessage, "pseudonym carries a subject identity");
    }
  } else {
    body.subject_id = r.str(tag::kSubjectId);
  }
  body.subject_public_key = PublicKey::decode(r.bytes(tag::kSubjectKey));
  body.validity = {r.i64(tag::kValidStart), r.i64(tag::kValidEnd)};
  body.issuer_id = r.str(tag::kIssuerId);
  return body;
}
}  // namespace

Bytes Certificate::tbs() const { return encode_tbs(body); }

Bytes Certificate::encode() const {
  TlvWriter w;
  w.bytes(tag::kTbs, tbs());
  w.bytes(tag::kSignature, signature);
  return std::move(w).take();
}

Certificate Certificate::decode(ByteView encoded) {
  TlvReader r(encoded);
  Certificate c;
  c.body = decode_tbs(r.bytes(tag::kTbs));
  auto sig = r.bytes(tag::kSignature);
  c.signature.assign(sig.begin(), sig.end());
  return c;
}

Certificate sign_certificate(const KeyPair& issuer, CertificateBody tbs) {
  if (tbs.validity.start >= tbs.validity.end) {
    fail(Errc::MalformedValidity, "validity start must precede end");
  }
  if (tbs.kind == CertKind::Pseudonym && !tbs.subject_id.empty()) {
    fail(Errc::InvalidArgument, "pseudonyms cannot carry a subject identity");
  }
  if (tbs.subject_public_key.encode().empty()) {
    fail(Errc::InvalidArgument, "certificate needs a subject key");
  }
  Certificate c;
  c.body = std::move(tbs);
  c.signature = sign_with_context(issuer, kCertContext, c.tbs());
  return c;
}

bool verify_certificate(const Certificate& cert, const PublicKey& issuer) {
  return verify_with_context(issuer, kCertContext, cert.tbs(), cert.signature);
}

namespace {

void check_time(const Certificate& c, UnixSeconds at) {
  if (at < c.validity().start) {
    fail(Errc::NotYetValid, std::string(cert_kind_name(c.kind())) + " " +
                                c.serial().hex() + " not yet valid");
  }
  if (at >= c.validity().end) {
    fail(Errc::Expired, std::string(cert_kind_name(c.kind())) + " " +
                            c.serial().hex() + " expired");
  }
}

void chain_step(const Certificate& cert, std::span<const Certificate> anchors,
                UnixSeconds at, std::span<const Certificate> intermediates,
                int depth) {
  check_time(cert, at);
  bool issuer_seen = false;
  for (const auto& anchor : anchors) {
    if (anchor.kind() != CertKind::Authority ||
        anchor.body.subject_id != cert.body.issuer_id) {
      continue;
    }
    issuer_seen = true;
    if (verify_certificate(cert, anchor.body.subject_public_key)) {
      check_time(anchor, at);
      return;
    }
  }
  if (depth < 4) {
    for (const auto& mid : intermediates) {
      if (mid.kind() != CertKind::Authority ||
          mid.body.subject_id != cert.body.issuer_id || mid.serial() == cert.serial()) {
        continue;
      }
      issuer_seen = true;
      if (verify_certificate(cert, mid.body.subject_public_key)) {
        chain_step(mid, anchors, at, intermediates, depth + 1);
        return;
      }
    }
  }
  if (issuer_seen) {
    fail(Errc::BadSignature, "signature does not verify under issuer " +
                                 cert.body.issuer_id);
  }
  fail(Errc::UnknownIssuer, "no trusted certificate for issuer '" +
                                cert.body.issuer_id + "'");
}

}  // namespace

void verify_chain(const Certificate& cert, std::span<const Certificate> anchors,
                  UnixSeconds at, std::span<const Certificate> intermediates) {
  if (anchors.empty()) fail(Errc::InvalidArgument, "empty trust anchor set");
  chain_step(cert, anchors, at, intermediates, 0);
}

Bytes Csr::encode() const {
  TlvWriter w;
  w.bytes(tag::kCsrKey, subject_public_key.encode());
  w.bytes(tag::kCsrPop, pop_signature);
  return std::move(w).take();
}

Csr Csr::decode(ByteView encoded) {
  TlvReader r(encoded);
  Csr csr;
  csr.subject_public_key = PublicKey::decode(r.bytes(tag::kCsrKey));
  auto pop = r.bytes(tag::kCsrPop);
  csr.pop_signature.assign(pop.begin(), pop.end());
  return csr;
}

Csr make_csr(const KeyPair& kp) {
  return Csr{kp.public_key(),
             sign_with_context(kp, kCsrContext, kp.public_key().encode())};
}

void verify_csr(const Csr& csr) {
  if (!verify_with_context(csr.subject_public_key, kCsrContext,
                           csr.subject_public_key.encode(), csr.pop_signature)) {
    fail(Errc::BadProofOfPossession, "CSR proof of possession does not verify");
  }
}

AuthorityCredential make_root_authority(std::string id, Validity validity,
                                        Curve curve) {
  auto key = KeyPair::generate(curve);
  CertificateBody body{CertSerial::random(), CertKind::Authority, id,
                       key.public_key(), validity, id};
  auto cert = sign_certificate(key, std::move(body));
  return {std::move(key), std::move(cert)};
}

AuthorityCredential issue_authority(const AuthorityCredential& issuer,
                                    std::string subject_id, Validity validity,
                                    Curve curve) {
  auto key = KeyPair::generate(curve);
  CertificateBody body{CertSerial::random(), CertKind::Authority,
                       std::move(subject_id), key.public_key(), validity,
                       issuer.id()};
  auto cert = sign_certificate(issuer.key, std::move(body));
  return {std::move(key), std::move(cert)};
}

}  // namespace vpki
