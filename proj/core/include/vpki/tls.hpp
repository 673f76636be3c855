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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vpki/clock.hpp"
#include "vpki/credentials.hpp"

struct ssl_ctx_st;

namespace vpki {

// Transport security for service connections. Authority certificates use
// the compact vehicular format, which TLS stacks do not understand, so each
// deployment also carries an X.509 root self-signed with the same root key;
// service TLS certificates chain to it.

struct TlsMaterial {
  std::string cert_pem;
  std::string key_pem;
};

std::string make_tls_root(const KeyPair& root_key, std::string_view common_name,
                          Validity validity);

// Fresh P-256 key and a server certificate signed by the root. The SAN list
// always includes localhost and 127.0.0.1 in addition to extra_names.
TlsMaterial make_tls_server_cert(const KeyPair& root_key, std::string_view root_pem,
                                 std::string_view common_name, Validity validity,
                                 const std::vector<std::string>& extra_names = {});

class TlsServerContext {
 public:
  static std::shared_ptr<const TlsServerContext> create(const TlsMaterial& material);
  ~TlsServerContext();
  ssl_ctx_st* native() const { return ctx_; }

 private:
  explicit TlsServerContext(ssl_ctx_st* ctx) : ctx_(ctx) {}
  ssl_ctx_st* ctx_;
};

class TlsClientContext {
 public:
  static std::shared_ptr<const TlsClientContext> create(std::string_view root_pem);
  ~TlsClientContext();
  ssl_ctx_st* native() const { return ctx_; }

 private:
  explicit TlsClientContext(ssl_ctx_st* ctx) : ctx_(ctx) {}
  ssl_ctx_st* ctx_;
};

}  // namespace vpki
