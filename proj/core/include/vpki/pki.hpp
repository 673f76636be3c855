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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vpki/credentials.hpp"
#include "vpki/tls.hpp"

namespace vpki {

struct PkiOptions {
  std::string root_id = "root";
  std::string ltca_id = "ltca";
  std::string ra_id = "ra";
  std::vector<std::string> pca_ids{"pca"};
  Curve curve = Curve::P256;
  // Zero means "now - 1 h" and "now + 5 years".
  Validity validity{};
  // Extra DNS names or IPs for the shared service TLS certificate.
  std::vector<std::string> tls_names;
};

// Everything a single-domain deployment needs: the root, one credential per
// authority, and the TLS root plus the service certificate every endpoint
// presents.
struct PkiMaterial {
  AuthorityCredential root;
  AuthorityCredential ltca;
  AuthorityCredential ra;
  std::map<std::string, AuthorityCredential> pcas;
  std::string tls_root_pem;
  TlsMaterial tls_server;

  std::vector<Certificate> anchors() const { return {root.cert}; }
  const AuthorityCredential& pca(const std::string& id) const;
};

PkiMaterial bootstrap_pki(const PkiOptions& options = {});

// Directory layout: <name>.key.pem and <name>.cert per authority (pca-<id>
// for PCAs), tls-root.pem, tls-server.pem, tls-server.key.pem and a
// pki.json manifest.
void save_pki(const PkiMaterial& pki, const std::filesystem::path& dir);
PkiMaterial load_pki(const std::filesystem::path& dir);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

}  // namespace vpki
