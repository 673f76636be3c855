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
#include "vpki/pki.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"
#include "vpki/error.hpp"

namespace vpki {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string as_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

void save_credential(const fs::path& dir, const std::string& name,
                     const AuthorityCredential& c) {
  write_file(dir / (name + ".key.pem"), as_bytes(c.key.to_pem()));
  write_file(dir / (name + ".cert"), c.cert.encode());
  fs::permissions(dir / (name + ".key.pem"), fs::perms::owner_read | fs::perms::owner_write);
}

AuthorityCredential load_credential(const fs::path& dir, const std::string& name) {
  return {KeyPair::from_pem(as_string(read_file(dir / (name + ".key.pem")))),
          Certificate::decode(read_file(dir / (name + ".cert")))};
}

}  // namespace

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::NotFound, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::InvalidArgument, "cannot write " + path.string());
}

const AuthorityCredential& PkiMaterial::pca(const std::string& id) const {
  auto it = pcas.find(id);
  if (it == pcas.end()) fail(Errc::InvalidConfig, "no PCA credential for '" + id + "'");
  return it->second;
}

PkiMaterial bootstrap_pki(const PkiOptions& options) {
  if (options.pca_ids.empty()) fail(Errc::InvalidConfig, "at least one PCA id is required");
  auto validity = options.validity;
  if (validity.start == 0 && validity.end == 0) {
    auto now = system_now();
    validity = {now - 3600, now + 5 * 365 * 86400};
  }
  auto root = make_root_authority(options.root_id, validity, options.curve);
  auto ltca = issue_authority(root, options.ltca_id, validity, options.curve);
  auto ra = issue_authority(root, options.ra_id, validity, options.curve);
  PkiMaterial pki{std::move(root), std::move(ltca), std::move(ra), {}, {}, {}};
  for (const auto& id : options.pca_ids) {
    if (!pki.pcas.emplace(id, issue_authority(pki.root, id, validity, options.curve)).second) {
      fail(Errc::InvalidConfig, "duplicate PCA id '" + id + "'");
    }
  }
  pki.tls_root_pem = make_tls_root(pki.root.key, options.root_id + " TLS root", validity);
  pki.tls_server = make_tls_server_cert(pki.root.key, pki.tls_root_pem, "vpki-services",
                                        validity, options.tls_names);
  return pki;
}

void save_pki(const PkiMaterial& pki, const fs::path& dir) {
  fs::create_directories(dir);
  save_credential(dir, "root", pki.root);
  save_credential(dir, "ltca", pki.ltca);
  save_credential(dir, "ra", pki.ra);
  json manifest{{"root", pki.root.id()}, {"ltca", pki.ltca.id()}, {"ra", pki.ra.id()},
                {"pcas", json::array()}};
  for (const auto& [id, cred] : pki.pcas) {
    save_credential(dir, "pca-" + id, cred);
    manifest["pcas"].push_back(id);
  }
  write_file(dir / "tls-root.pem", as_bytes(pki.tls_root_pem));
  write_file(dir / "tls-server.pem", as_bytes(pki.tls_server.cert_pem));
  write_file(dir / "tls-server.key.pem", as_bytes(pki.tls_server.key_pem));
  fs::permissions(dir / "tls-server.key.pem", fs::perms::owner_read | fs::perms::owner_write);
  write_file(dir / "pki.json", as_bytes(manifest.dump(2) + "\n"));
}

PkiMaterial load_pki(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(as_string(read_file(dir / "pki.json")));
  } catch (const json::exception& e) {
    fail(Errc::ParseError, "pki.json: " + std::string(e.what()));
  }
  PkiMaterial pki{load_credential(dir, "root"), load_credential(dir, "ltca"),
                  load_credential(dir, "ra"), {}, {}, {}};
  for (const auto& id : manifest.at("pcas")) {
    auto name = id.get<std::string>();
    pki.pcas.emplace(name, load_credential(dir, "pca-" + name));
  }
  pki.tls_root_pem = as_string(read_file(dir / "tls-root.pem"));
  pki.tls_server.cert_pem = as_string(read_file(dir / "tls-server.pem"));
  pki.tls_server.key_pem = as_string(read_file(dir / "tls-server.key.pem"));
  return pki;
}

}  // namespace vpki
