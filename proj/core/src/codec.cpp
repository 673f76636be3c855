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
#include "vpki/codec.hpp"

#include <limits>

#include "vpki/error.hpp"

namespace vpki {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) fail(Errc::InvalidArgument, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) fail(Errc::InvalidArgument, "non-hex character");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

namespace be {
void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
void put_u64(Bytes& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] << 8 | p[1]);
}
std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 |
         std::uint32_t{p[2]} << 8 | std::uint32_t{p[3]};
}
std::uint64_t get_u64(const std::uint8_t* p) {
  return std::uint64_t{get_u32(p)} << 32 | get_u32(p + 4);
}
}  // namespace be

void TlvWriter::header(std::uint16_t tag, std::uint32_t len) {
  if (static_cast<int>(tag) <= last_tag_) {
    fail(Errc::InvalidArgument, "TLV tags must be written in increasing order");
  }
  last_tag_ = tag;
  be::put_u16(out_, tag);
  be::put_u32(out_, len);
}

TlvWriter& TlvWriter::u8(std::uint16_t tag, std::uint8_t v) {
  header(tag, 1);
  out_.push_back(v);
  return *this;
}

TlvWriter& TlvWriter::u32(std::uint16_t tag, std::uint32_t v) {
  header(tag, 4);
  be::put_u32(out_, v);
  return *this;
}

TlvWriter& TlvWriter::u64(std::uint16_t tag, std::uint64_t v) {
  header(tag, 8);
  be::put_u64(out_, v);
  return *this;
}

TlvWriter& TlvWriter::i64(std::uint16_t tag, std::int64_t v) {
  return u64(tag, static_cast<std::uint64_t>(v));
}

TlvWriter& TlvWriter::bytes(std::uint16_t tag, ByteView v) {
  if (v.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::InvalidArgument, "field too large");
  }
  header(tag, static_cast<std::uint32_t>(v.size()));
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

TlvWriter& TlvWriter::str(std::uint16_t tag, std::string_view v) {
  return bytes(tag, as_bytes(v));
}

TlvWriter& TlvWriter::list(std::uint16_t tag, const std::vector<Bytes>& items) {
  Bytes body;
  for (const auto& item : items) {
    be::put_u32(body, static_cast<std::uint32_t>(item.size()));
    body.insert(body.end(), item.begin(), item.end());
  }
  return bytes(tag, body);
}

TlvReader::TlvReader(ByteView in) {
  std::size_t pos = 0;
  int last = -1;
  while (pos < in.size()) {
    if (in.size() - pos < 6) fail(Errc::MalformedMessage, "truncated TLV header");
    auto tag = be::get_u16(in.data() + pos);
    auto len = be::get_u32(in.data() + pos + 2);
    pos += 6;
    if (in.size() - pos < len) fail(Errc::MalformedMessage, "truncated TLV value");
    if (static_cast<int>(tag) <= last) {
      fail(Errc::MalformedMessage, "TLV tags out of order");
    }
    last = tag;
    fields_.push_back({tag, in.subspan(pos, len)});
    pos += len;
  }
}

const TlvReader::Field* TlvReader::find(std::uint16_t tag) const {
  for (const auto& f : fields_) {
    if (f.tag == tag) return &f;
  }
  return nullptr;
}

bool TlvReader::has(std::uint16_t tag) const { return find(tag) != nullptr; }

namespace {
ByteView require(const void* field, ByteView value, std::uint16_t tag,
                 std::size_t width) {
  if (field == nullptr) {
    fail(Errc::MalformedMessage, "missing field tag " + std::to_string(tag));
  }
  if (width != 0 && value.size() != width) {
    fail(Errc::MalformedMessage, "bad width for tag " + std::to_string(tag));
  }
  return value;
}
}  // namespace

std::uint8_t TlvReader::u8(std::uint16_t tag) const {
  auto* f = find(tag);
  return require(f, f ? f->value : ByteView{}, tag, 1)[0];
}

std::uint32_t TlvReader::u32(std::uint16_t tag) const {
  auto* f = find(tag);
  return be::get_u32(require(f, f ? f->value : ByteView{}, tag, 4).data());
}

std::uint64_t TlvReader::u64(std::uint16_t tag) const {
  auto* f = find(tag);
  return be::get_u64(require(f, f ? f->value : ByteView{}, tag, 8).data());
}

std::int64_t TlvReader::i64(std::uint16_t tag) const {
  return static_cast<std::int64_t>(u64(tag));
}

ByteView TlvReader::bytes(std::uint16_t tag) const {
  auto* f = find(tag);
  return require(f, f ? f->value : ByteView{}, tag, 0);
}

std::string TlvReader::str(std::uint16_t tag) const {
  auto v = bytes(tag);
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

std::vector<Bytes> TlvReader::list(std::uint16_t tag) const {
  auto v = bytes(tag);
  std::vector<Bytes> items;
  std::size_t pos = 0;
  while (pos < v.size()) {
    if (v.size() - pos < 4) fail(Errc::MalformedMessage, "truncated list item");
    auto len = be::get_u32(v.data() + pos);
    pos += 4;
    if (v.size() - pos < len) fail(Errc::MalformedMessage, "truncated list item");
    items.emplace_back(v.begin() + pos, v.begin() + pos + len);
    pos += len;
  }
  return items;
}

}  // namespace vpki
