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

#include <gtest/gtest.h>

#include <set>

#include "errc_matchers.hpp"

namespace vpki {
namespace {

constexpr UnixSeconds kT0 = 1'700'000'100;

struct Chain {
  AuthorityCredential root = make_root_authority("root", {kT0 - 1000, kT0 + 100000});
  AuthorityCredential pca = issue_authority(root, "pca", {kT0 - 1000, kT0 + 100000});

  Certificate pseudonym(Validity v = {kT0, kT0 + 300}) {
    auto kp = KeyPair::generate();
    return sign_certificate(pca.key, {CertSerial::random(), CertKind::Pseudonym, {},
                                      kp.public_key(), v, "pca"});
  }
};

TEST(KeyPair, SignVerifyRoundTrip) {
  auto kp = KeyPair::generate();
  Bytes m{1, 2, 3};
  auto sig = kp.sign(m);
  EXPECT_EQ(sig.size(), signature_size(Curve::P256));
  EXPECT_TRUE(kp.public_key().verify(m, sig));
  EXPECT_FALSE(kp.public_key().verify(Bytes{1, 2, 4}, sig));
  EXPECT_FALSE(KeyPair::generate().public_key().verify(m, sig));
  EXPECT_FALSE(kp.public_key().verify(m, Bytes(sig.begin(), sig.end() - 1)));
}

TEST(KeyPair, ThousandDistinctKeys) {
  std::set<Bytes> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(KeyPair::generate().public_key().encode());
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(KeyPair, PublicKeyEncodingRoundTrip) {
  for (auto curve : {Curve::P256, Curve::P384}) {
    auto kp = KeyPair::generate(curve);
    const auto& enc = kp.public_key().encode();
    // curve byte + SEC1 uncompressed point
    EXPECT_EQ(enc.size(), curve == Curve::P256 ? 1u + 65u : 1u + 97u);
    EXPECT_EQ(enc[1], 0x04);
    EXPECT_EQ(PublicKey::decode(PublicKey::decode(enc).encode()).encode(), enc);
  }
  EXPECT_ERRC(PublicKey::decode(Bytes{1, 4, 0}), Errc::MalformedMessage);
}

TEST(KeyPair, PrivateScalarAndPemRoundTrip) {
  auto kp = KeyPair::generate();
  auto again = KeyPair::from_private_scalar(Curve::P256, kp.private_scalar());
  EXPECT_EQ(again.public_key().encode(), kp.public_key().encode());
  auto from_pem = KeyPair::from_pem(kp.to_pem());
  EXPECT_EQ(from_pem.public_key().encode(), kp.public_key().encode());
  Bytes m{9};
  EXPECT_TRUE(kp.public_key().verify(m, from_pem.sign(m)));
}

TEST(Certificate, IssuedCertificateVerifies) {
  Chain c;
  auto p = c.pseudonym();
  EXPECT_TRUE(verify_certificate(p, c.pca.key.public_key()));
  EXPECT_FALSE(verify_certificate(p, c.root.key.public_key()));
  auto back = Certificate::decode(p.encode());
  EXPECT_EQ(back.encode(), p.encode());
  EXPECT_EQ(back.body.validity, p.body.validity);
  EXPECT_EQ(back.serial(), p.serial());
}

TEST(Certificate, AnyFlippedTbsByteBreaksVerification) {
  Chain c;
  auto p = c.pseudonym();
  auto tbs = p.tbs();
  for (std::size_t i = 0; i < tbs.size(); ++i) {
    auto t = tbs;
    t[i] ^= 0x01;
    EXPECT_FALSE(verify_with_context(c.pca.key.public_key(), "vpki/certificate/v1", t,
                                     p.signature))
        << "byte " << i;
  }
  EXPECT_TRUE(verify_with_context(c.pca.key.public_key(), "vpki/certificate/v1", tbs,
                                  p.signature));
}

TEST(Certificate, EmptyWindowIsMalformed) {
  Chain c;
  auto kp = KeyPair::generate();
  EXPECT_ERRC(sign_certificate(c.pca.key, {CertSerial::random(), CertKind::Pseudonym, {},
                                           kp.public_key(), {kT0, kT0}, "pca"}),
              Errc::MalformedValidity);
  EXPECT_ERRC(sign_certificate(c.pca.key, {CertSerial::random(), CertKind::Pseudonym, {},
                                           kp.public_key(), {kT0, kT0 - 1}, "pca"}),
              Errc::MalformedValidity);
}

TEST(Certificate, PseudonymCarriesNoIdentity) {
  Chain c;
  auto kp = KeyPair::generate();
  EXPECT_ERRC(sign_certificate(c.pca.key, {CertSerial::random(), CertKind::Pseudonym, "car-1",
                                           kp.public_key(), {kT0, kT0 + 1}, "pca"}),
              Errc::InvalidArgument);
  auto p = c.pseudonym();
  EXPECT_EQ(Certificate::decode(p.encode()).body.subject_id, "");
}

TEST(Certificate, EncodingIsInjectiveOnFields) {
  auto kp = KeyPair::generate();
  auto other = KeyPair::generate();
  CertificateBody base{CertSerial::random(), CertKind::Ltc, "car-1", kp.public_key(),
                       {kT0, kT0 + 10}, "ltca"};
  std::vector<CertificateBody> variants(7, base);
  variants[0].serial = CertSerial::random();
  variants[1].kind = CertKind::Authority;
  variants[2].subject_id = "car-2";
  variants[3].subject_public_key = other.public_key();
  variants[4].validity.start -= 1;
  variants[5].validity.end += 1;
  variants[6].issuer_id = "ltcb";
  std::set<Bytes> encodings{encode_tbs(base)};
  for (const auto& v : variants) encodings.insert(encode_tbs(v));
  EXPECT_EQ(encodings.size(), variants.size() + 1);
  // Moving bytes between adjacent string fields must not collide either.
  auto a = base, b = base;
  a.subject_id = "ab";
  a.issuer_id = "c";
  b.subject_id = "a";
  b.issuer_id = "bc";
  EXPECT_NE(encode_tbs(a), encode_tbs(b));
}

TEST(Chain, TwoLevelChainVerifies) {
  Chain c;
  auto p = c.pseudonym();
  std::vector<Certificate> anchors{c.root.cert}, mids{c.pca.cert};
  EXPECT_ERRC(verify_chain(p, anchors, kT0, mids), Errc::Ok);
  EXPECT_ERRC(verify_chain(p, anchors, kT0 + 299, mids), Errc::Ok);
}

TEST(Chain, ValidityIsHalfOpen) {
  Chain c;
  auto p = c.pseudonym();
  std::vector<Certificate> anchors{c.root.cert}, mids{c.pca.cert};
  EXPECT_ERRC(verify_chain(p, anchors, kT0 + 300, mids), Errc::Expired);
  EXPECT_ERRC(verify_chain(p, anchors, kT0 - 1, mids), Errc::NotYetValid);
}

TEST(Chain, TimeMonotoneInsideWindow) {
  Chain c;
  auto p = c.pseudonym({kT0, kT0 + 50});
  std::vector<Certificate> anchors{c.root.cert}, mids{c.pca.cert};
  for (UnixSeconds t = kT0; t < kT0 + 50; ++t) {
    EXPECT_ERRC(verify_chain(p, anchors, t, mids), Errc::Ok) << t;
  }
}

TEST(Chain, ForeignSignerIsUnknownIssuer) {
  Chain c;
  auto rogue_root = make_root_authority("rogue", {kT0 - 10, kT0 + 1000});
  auto rogue = issue_authority(rogue_root, "rogue-pca", {kT0 - 10, kT0 + 1000});
  auto kp = KeyPair::generate();
  auto p = sign_certificate(rogue.key, {CertSerial::random(), CertKind::Pseudonym, {},
                                        kp.public_key(), {kT0, kT0 + 300}, "rogue-pca"});
  std::vector<Certificate> anchors{c.root.cert}, mids{c.pca.cert};
  EXPECT_ERRC(verify_chain(p, anchors, kT0, mids), Errc::UnknownIssuer);
}

TEST(Chain, ImpersonatedIssuerIsBadSignature) {
  Chain c;
  auto fake = issue_authority(make_root_authority("root", {kT0 - 10, kT0 + 1000}), "pca",
                              {kT0 - 10, kT0 + 1000});
  auto kp = KeyPair::generate();
  auto p = sign_certificate(fake.key, {CertSerial::random(), CertKind::Pseudonym, {},
                                       kp.public_key(), {kT0, kT0 + 300}, "pca"});
  std::vector<Certificate> anchors{c.root.cert}, mids{c.pca.cert};
  EXPECT_ERRC(verify_chain(p, anchors, kT0, mids), Errc::BadSignature);
}

TEST(Chain, EmptyAnchorSetRejected) {
  Chain c;
  EXPECT_ERRC(verify_chain(c.pseudonym(), {}, kT0), Errc::InvalidArgument);
}

TEST(Csr, MadeCsrVerifies) {
  auto kp = KeyPair::generate();
  auto csr = make_csr(kp);
  EXPECT_ERRC(verify_csr(csr), Errc::Ok);
  EXPECT_ERRC(verify_csr(Csr::decode(csr.encode())), Errc::Ok);
}

TEST(Csr, SwappedKeyFailsProofOfPossession) {
  auto csr = make_csr(KeyPair::generate());
  csr.subject_public_key = KeyPair::generate().public_key();
  EXPECT_ERRC(verify_csr(csr), Errc::BadProofOfPossession);
}

TEST(Csr, HundredCsrBatchAllVerifyWithDistinctKeys) {
  std::set<Bytes> keys;
  for (int i = 0; i < 100; ++i) {
    auto csr = make_csr(KeyPair::generate());
    EXPECT_ERRC(verify_csr(csr), Errc::Ok);
    keys.insert(csr.subject_public_key.encode());
  }
  EXPECT_EQ(keys.size(), 100u);
}

TEST(Signing, ContextsAreSeparated) {
  auto kp = KeyPair::generate();
  Bytes payload{1, 2, 3};
  auto sig = sign_with_context(kp, "vpki/ticket/v1", payload);
  EXPECT_TRUE(verify_with_context(kp.public_key(), "vpki/ticket/v1", payload, sig));
  EXPECT_FALSE(verify_with_context(kp.public_key(), "vpki/crl/v1", payload, sig));
}

TEST(Ids, SerialsAreRandomAndHexRoundTrip) {
  std::set<CertSerial> s;
  for (int i = 0; i < 1000; ++i) s.insert(CertSerial::random());
  EXPECT_EQ(s.size(), 1000u);
  auto id = CertSerial::random();
  EXPECT_EQ(CertSerial::from_hex(id.hex()), id);
  EXPECT_ERRC(CertSerial::from_bytes(Bytes(15)), Errc::MalformedMessage);
}

}  // namespace
}  // namespace vpki
