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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vpki {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Canonical tag-length-value encoding shared by certificates, CSRs and every
// wire message. Each field is
//
//   u16 tag | u32 length | length bytes of value       (big endian)
//
// and fields appear in strictly increasing tag order. Readers skip tags they
// do not know, which is what lets a newer writer add optional fields.
class TlvWriter {
 public:
  TlvWriter& u8(std::uint16_t tag, std::uint8_t v);
  TlvWriter& u32(std::uint16_t tag, std::uint32_t v);
  TlvWriter& u64(std::uint16_t tag, std::uint64_t v);
  TlvWriter& i64(std::uint16_t tag, std::int64_t v);
  TlvWriter& bytes(std::uint16_t tag, ByteView v);
  TlvWriter& str(std::uint16_t tag, std::string_view v);
  // Nested canonical encodings and repeated fields go through here; a
  // repeated field is one tag holding a sequence of u32-length-prefixed items.
  TlvWriter& list(std::uint16_t tag, const std::vector<Bytes>& items);

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  void header(std::uint16_t tag, std::uint32_t len);

  Bytes out_;
  int last_tag_ = -1;
};

class TlvReader {
 public:
  explicit TlvReader(ByteView in);

  // Lookups fail with MalformedMessage when a required tag is absent or the
  // value has the wrong width.
  bool has(std::uint16_t tag) const;
  std::uint8_t u8(std::uint16_t tag) const;
  std::uint32_t u32(std::uint16_t tag) const;
  std::uint64_t u64(std::uint16_t tag) const;
  std::int64_t i64(std::uint16_t tag) const;
  ByteView bytes(std::uint16_t tag) const;
  std::string str(std::uint16_t tag) const;
  std::vector<Bytes> list(std::uint16_t tag) const;

 private:
  struct Field {
    std::uint16_t tag;
    ByteView value;
  };
  const Field* find(std::uint16_t tag) const;

  std::vector<Field> fields_;
};

namespace be {
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
std::uint16_t get_u16(const std::uint8_t* p);
std::uint32_t get_u32(const std::uint8_t* p);
std::uint64_t get_u64(const std::uint8_t* p);
}  // namespace be

}  // namespace vpki
