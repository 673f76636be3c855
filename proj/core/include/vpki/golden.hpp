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

#include <string>
#include <vector>

#include "vpki/codec.hpp"
#include "vpki/gateway.hpp"

namespace vpki {

// Fixed-content sample of one wire message, used as a regression vector for
// the byte format. Keys come from fixed private scalars; signature fields
// hold filler bytes of the right width, since ECDSA signatures are not
// reproducible.
struct GoldenVector {
  std::string name;  // file stem under docs/golden
  Bytes bytes;       // full envelope, or the bare encoding for certificate and csr
  bool is_envelope = true;
  MessageType type = MessageType::Ping;
};

std::vector<GoldenVector> golden_vectors();

// Decodes with the matching message type and encodes again.
Bytes reencode_golden(const GoldenVector& v);

}  // namespace vpki
