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
#include "vpki/tls.hpp"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <array>

#include "vpki/error.hpp"

namespace vpki {
namespace {

struct X509Free {
  void operator()(X509* p) const { X509_free(p); }
};
struct BioFree {
  void operator()(BIO* p) const { BIO_free(p); }
};
using X509Ptr = std::unique_ptr<X509, X509Free>;
using BioPtr = std::unique_ptr<BIO, BioFree>;

[[noreturn]] void tls_fail(const std::string& what) {
  char buf[256] = {0};
  unsigned long e = ERR_get_error();
  if (e != 0) ERR_error_string_n(e, buf, sizeof(buf));
  ERR_clear_error();
  fail(Errc::TlsFailure, what + (e ? std::string(" (") + buf + ")" : ""));
}

void set_name(X509_NAME* name, std::string_view cn) {
  X509_NAME_add_entry_by_txt(name, "O", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("VPKIaaS"), -1,
                             -1, 0);
  std::string s(cn);
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>(s.c_str()), -1,
                             -1, 0);
}

void add_ext(X509* cert, X509* issuer, int nid, const std::string& value) {
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
  X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value.c_str());
  if (ext == nullptr) tls_fail("bad X.509 extension " + value);
  X509_add_ext(cert, ext, -1);
  X509_EXTENSION_free(ext);
}

X509Ptr new_cert(EVP_PKEY* subject_key, Validity validity) {
  X509Ptr cert(X509_new());
  if (!cert) tls_fail("X509_new");
  X509_set_version(cert.get(), 2);
  std::array<std::uint8_t, 16> serial{};
  random_bytes(serial);
  serial[0] &= 0x7f;
  BIGNUM* bn = BN_bin2bn(serial.data(), static_cast<int>(serial.size()), nullptr);
  BN_to_ASN1_INTEGER(bn, X509_get_serialNumber(cert.get()));
  BN_free(bn);
  ASN1_TIME_set(X509_getm_notBefore(cert.get()), static_cast<time_t>(validity.start));
  ASN1_TIME_set(X509_getm_notAfter(cert.get()), static_cast<time_t>(validity.end));
  X509_set_pubkey(cert.get(), subject_key);
  return cert;
}

std::string to_pem(X509* cert) {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio || PEM_write_bio_X509(bio.get(), cert) != 1) tls_fail("PEM write");
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(len));
}

X509Ptr from_pem(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  X509Ptr cert(bio ? PEM_read_bio_X509(bio.get(), nullptr, nullptr, nullptr) : nullptr);
  if (!cert) tls_fail("cannot parse X.509 PEM");
  return cert;
}

bool looks_like_ip(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789.") == std::string::npos;
}

}  // namespace

std::string make_tls_root(const KeyPair& root_key, std::string_view common_name,
                          Validity validity) {
  auto cert = new_cert(root_key.native_handle(), validity);
  set_name(X509_get_subject_name(cert.get()), common_name);
  set_name(X509_get_issuer_name(cert.get()), common_name);
  add_ext(cert.get(), cert.get(), NID_basic_constraints, "critical,CA:TRUE");
  add_ext(cert.get(), cert.get(), NID_key_usage, "critical,keyCertSign,cRLSign");
  add_ext(cert.get(), cert.get(), NID_subject_key_identifier, "hash");
  if (X509_sign(cert.get(), root_key.native_handle(), EVP_sha256()) == 0) {
    tls_fail("root self-signature");
  }
  return to_pem(cert.get());
}

TlsMaterial make_tls_server_cert(const KeyPair& root_key, std::string_view root_pem,
                                 std::string_view common_name, Validity validity,
                                 const std::vector<std::string>& extra_names) {
  auto root = from_pem(root_pem);
  auto server_key = KeyPair::generate(Curve::P256);
  auto cert = new_cert(server_key.native_handle(), validity);
  set_name(X509_get_subject_name(cert.get()), common_name);
  X509_set_issuer_name(cert.get(), X509_get_subject_name(root.get()));
  add_ext(cert.get(), root.get(), NID_basic_constraints, "critical,CA:FALSE");
  add_ext(cert.get(), root.get(), NID_ext_key_usage, "serverAuth,clientAuth");
  std::string san = "DNS:localhost,IP:127.0.0.1";
  for (const auto& n : extra_names) {
    san += looks_like_ip(n) ? ",IP:" : ",DNS:";
    san += n;
  }
  add_ext(cert.get(), root.get(), NID_subject_alt_name, san);
  if (X509_sign(cert.get(), root_key.native_handle(), EVP_sha256()) == 0) {
    tls_fail("server certificate signature");
  }
  return {to_pem(cert.get()), server_key.to_pem()};
}

std::shared_ptr<const TlsServerContext> TlsServerContext::create(
    const TlsMaterial& material) {
  SSL_CTX* ctx = SSL_CTX_new(TLS_server_method());
  if (ctx == nullptr) tls_fail("SSL_CTX_new");
  std::shared_ptr<const TlsServerContext> out(new TlsServerContext(ctx));
  SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION);
  auto cert = from_pem(material.cert_pem);
  auto key = KeyPair::from_pem(material.key_pem);
  if (SSL_CTX_use_certificate(ctx, cert.get()) != 1 ||
      SSL_CTX_use_PrivateKey(ctx, key.native_handle()) != 1 ||
      SSL_CTX_check_private_key(ctx) != 1) {
    tls_fail("server certificate/key mismatch");
  }
  SSL_CTX_set_mode(ctx, SSL_MODE_ENABLE_PARTIAL_WRITE |
                            SSL_MODE_ACCEPT_MOVING_WRITE_BUFFER);
  return out;
}

TlsServerContext::~TlsServerContext() { SSL_CTX_free(ctx_); }

std::shared_ptr<const TlsClientContext> TlsClientContext::create(
    std::string_view root_pem) {
  SSL_CTX* ctx = SSL_CTX_new(TLS_client_method());
  if (ctx == nullptr) tls_fail("SSL_CTX_new");
  std::shared_ptr<const TlsClientContext> out(new TlsClientContext(ctx));
  SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION);
  auto root = from_pem(root_pem);
  if (X509_STORE_add_cert(SSL_CTX_get_cert_store(ctx), root.get()) != 1) {
    tls_fail("cannot trust deployment root");
  }
  SSL_CTX_set_verify(ctx, SSL_VERIFY_PEER, nullptr);
  SSL_CTX_set_mode(ctx, SSL_MODE_ENABLE_PARTIAL_WRITE |
                            SSL_MODE_ACCEPT_MOVING_WRITE_BUFFER);
  return out;
}

TlsClientContext::~TlsClientContext() { SSL_CTX_free(ctx_); }

}  // namespace vpki
