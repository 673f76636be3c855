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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "vpki/codec.hpp"
#include "vpki/error.hpp"

namespace vpki {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kDefaultMaxFrame = 1u << 20;

enum class MessageType : std::uint16_t {
  Error = 1,
  Ping = 2,
  Pong = 3,

  RegisterRequest = 10,
  RegisterResponse = 11,
  TicketRequest = 12,
  TicketResponse = 13,
  ResolveTicketRequest = 14,
  ResolveTicketResponse = 15,
  RevokeLtcRequest = 16,
  RevokeLtcResponse = 17,

  PseudonymBatchRequest = 20,
  PseudonymBatchResponse = 21,
  LookupTicketRequest = 22,
  LookupTicketResponse = 23,
  RevokeByTicketRequest = 24,
  RevokeByTicketResponse = 25,
  CrlRequest = 26,
  CrlResponse = 27,

  ResolveRequest = 30,
  ResolveResponse = 31,
};

bool is_known_message_type(std::uint16_t raw);
std::string_view message_type_name(MessageType t);

struct Envelope {
  std::uint8_t version = kProtocolVersion;
  MessageType type = MessageType::Ping;
  std::uint64_t correlation_id = 0;
  Bytes body;

  bool operator==(const Envelope&) const = default;
};

// Envelope layout (big endian):
//   u8 version | u16 type | u64 correlation_id | u32 body_len | body
// On a byte stream each envelope is preceded by a u32 frame length.
Bytes encode_envelope(const Envelope& e);
// Version and type are checked before the body is touched.
Envelope decode_envelope(ByteView in);

Bytes encode_frame(const Envelope& e, std::size_t max_frame = kDefaultMaxFrame);
// Decodes exactly one complete frame; TruncatedFrame if in is short.
Envelope decode_frame(ByteView in, std::size_t max_frame = kDefaultMaxFrame);

// Incremental splitter for a byte stream. next() yields raw envelope bytes
// once a whole frame has arrived and never surfaces partial data.
class FrameSplitter {
 public:
  explicit FrameSplitter(std::size_t max_frame = kDefaultMaxFrame)
      : max_frame_(max_frame) {}
  void feed(ByteView data);
  std::optional<Bytes> next();  // throws OversizeFrame
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::size_t max_frame_;
  Bytes buf_;
  std::size_t pos_ = 0;
};

// Raised by rpc helpers when the peer answered with an Error envelope. code()
// is the remote error code, step() the protocol step that failed.
class RemoteFailure : public VpkiError {
 public:
  using VpkiError::VpkiError;
};

Envelope make_error_response(const Envelope& request, Errc code,
                             const std::string& message,
                             std::optional<std::int64_t> detail = std::nullopt,
                             std::string step = {});
// Throws RemoteFailure for Error envelopes, MalformedMessage for any other
// type mismatch, otherwise returns the body.
const Bytes& expect_body(const Envelope& response, MessageType expected);

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  // One request/response exchange. Error envelopes are returned, not thrown;
  // transport failures throw (Timeout, ConnectionFailed).
  virtual Envelope call(Envelope request, std::chrono::milliseconds deadline) = 0;
};

using Handler = std::function<Envelope(const Envelope&)>;

// Turns any exception thrown by inner into an Error envelope and echoes the
// correlation id. Servers and in-process endpoints wrap handlers with this.
Envelope dispatch_safely(const Handler& inner, const Envelope& request);

class LocalEndpoint final : public Endpoint {
 public:
  explicit LocalEndpoint(Handler handler) : handler_(std::move(handler)) {}
  Envelope call(Envelope request, std::chrono::milliseconds deadline) override;

 private:
  Handler handler_;
};

Bytes rpc(Endpoint& ep, MessageType type, Bytes body, MessageType expect,
          std::chrono::milliseconds deadline);

struct HostPort {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static HostPort parse(std::string_view s);
  std::string str() const;
};

class TlsClientContext;
class TlsServerContext;

struct ChannelOptions {
  std::size_t max_frame = kDefaultMaxFrame;
  std::chrono::milliseconds connect_timeout{2000};
  // Null means plaintext, which is only acceptable for tests and explicit
  // --insecure runs.
  std::shared_ptr<const TlsClientContext> tls;
};

class Connection;

// One client connection carrying pipelined requests; responses are matched
// to callers by correlation id and may complete out of order.
class Channel final : public Endpoint {
 public:
  static std::shared_ptr<Channel> connect(const HostPort& target,
                                          ChannelOptions options = {});
  ~Channel() override;

  Envelope call(Envelope request, std::chrono::milliseconds deadline) override;
  bool open() const;
  void close();

 private:
  struct State;
  explicit Channel(std::shared_ptr<State> state);
  std::shared_ptr<State> state_;
};

// Reconnects lazily, so a restarted service is picked up again.
class RemoteEndpoint final : public Endpoint {
 public:
  RemoteEndpoint(HostPort target, ChannelOptions options = {})
      : target_(std::move(target)), options_(std::move(options)) {}
  Envelope call(Envelope request, std::chrono::milliseconds deadline) override;
  const HostPort& target() const { return target_; }

 private:
  HostPort target_;
  ChannelOptions options_;
  std::mutex mu_;
  std::shared_ptr<Channel> channel_;
};

// One-shot convenience: connect, exchange, close.
Envelope call(const HostPort& target, Envelope request,
              std::chrono::milliseconds deadline, ChannelOptions options = {});

struct ServerOptions {
  HostPort listen{"127.0.0.1", 0};
  std::size_t workers = 8;
  std::size_t max_frame = kDefaultMaxFrame;
  std::shared_ptr<const TlsServerContext> tls;
};

class Server {
 public:
  Server(ServerOptions options, Handler handler);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting; port() is valid afterwards.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  HostPort address() const { return {options_.listen.host, port_}; }

 private:
  struct Impl;
  ServerOptions options_;
  Handler handler_;
  std::uint16_t port_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vpki
