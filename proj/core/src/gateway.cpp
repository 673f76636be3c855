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
#include "vpki/gateway.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <deque>
#include <future>
#include <unordered_map>

#include "vpki/messages.hpp"
#include "vpki/thread_pool.hpp"
#include "vpki/tls.hpp"

namespace vpki {

bool is_known_message_type(std::uint16_t raw) {
  switch (static_cast<MessageType>(raw)) {
    case MessageType::Error:
    case MessageType::Ping:
    case MessageType::Pong:
    case MessageType::RegisterRequest:
    case MessageType::RegisterResponse:
    case MessageType::TicketRequest:
    case MessageType::TicketResponse:
    case MessageType::ResolveTicketRequest:
    case MessageType::ResolveTicketResponse:
    case MessageType::RevokeLtcRequest:
    case MessageType::RevokeLtcResponse:
    case MessageType::PseudonymBatchRequest:
    case MessageType::PseudonymBatchResponse:
    case MessageType::LookupTicketRequest:
    case MessageType::LookupTicketResponse:
    case MessageType::RevokeByTicketRequest:
    case MessageType::RevokeByTicketResponse:
    case MessageType::CrlRequest:
    case MessageType::CrlResponse:
    case MessageType::ResolveRequest:
    case MessageType::ResolveResponse:
      return true;
  }
  return false;
}

std::string_view message_type_name(MessageType t) {
  switch (t) {
    case MessageType::Error: return "Error";
    case MessageType::Ping: return "Ping";
    case MessageType::Pong: return "Pong";
    case MessageType::RegisterRequest: return "RegisterRequest";
    case MessageType::RegisterResponse: return "RegisterResponse";
    case MessageType::TicketRequest: return "TicketRequest";
    case MessageType::TicketResponse: return "TicketResponse";
    case MessageType::ResolveTicketRequest: return "ResolveTicketRequest";
    case MessageType::ResolveTicketResponse: return "ResolveTicketResponse";
    case MessageType::RevokeLtcRequest: return "RevokeLtcRequest";
    case MessageType::RevokeLtcResponse: return "RevokeLtcResponse";
    case MessageType::PseudonymBatchRequest: return "PseudonymBatchRequest";
    case MessageType::PseudonymBatchResponse: return "PseudonymBatchResponse";
    case MessageType::LookupTicketRequest: return "LookupTicketRequest";
    case MessageType::LookupTicketResponse: return "LookupTicketResponse";
    case MessageType::RevokeByTicketRequest: return "RevokeByTicketRequest";
    case MessageType::RevokeByTicketResponse: return "RevokeByTicketResponse";
    case MessageType::CrlRequest: return "CrlRequest";
    case MessageType::CrlResponse: return "CrlResponse";
    case MessageType::ResolveRequest: return "ResolveRequest";
    case MessageType::ResolveResponse: return "ResolveResponse";
  }
  return "?";
}

namespace {
constexpr std::size_t kHeaderSize = 1 + 2 + 8 + 4;
}

Bytes encode_envelope(const Envelope& e) {
  Bytes out;
  out.reserve(kHeaderSize + e.body.size());
  out.push_back(e.version);
  be::put_u16(out, static_cast<std::uint16_t>(e.type));
  be::put_u64(out, e.correlation_id);
  be::put_u32(out, static_cast<std::uint32_t>(e.body.size()));
  out.insert(out.end(), e.body.begin(), e.body.end());
  return out;
}

Envelope decode_envelope(ByteView in) {
  if (in.empty()) fail(Errc::TruncatedFrame, "empty envelope");
  if (in[0] != kProtocolVersion) {
    fail(Errc::UnknownVersion, "protocol version " + std::to_string(in[0]));
  }
  if (in.size() < 3) fail(Errc::TruncatedFrame, "short envelope header");
  auto raw_type = be::get_u16(in.data() + 1);
  if (!is_known_message_type(raw_type)) {
    fail(Errc::UnknownType, "message type " + std::to_string(raw_type));
  }
  if (in.size() < kHeaderSize) fail(Errc::TruncatedFrame, "short envelope header");
  Envelope e;
  e.version = in[0];
  e.type = static_cast<MessageType>(raw_type);
  e.correlation_id = be::get_u64(in.data() + 3);
  auto len = be::get_u32(in.data() + 11);
  if (in.size() - kHeaderSize < len) fail(Errc::TruncatedFrame, "body truncated");
  if (in.size() - kHeaderSize > len) fail(Errc::MalformedMessage, "trailing bytes");
  e.body.assign(in.begin() + kHeaderSize, in.end());
  return e;
}

Bytes encode_frame(const Envelope& e, std::size_t max_frame) {
  auto env = encode_envelope(e);
  if (env.size() > max_frame) {
    fail(Errc::OversizeFrame, std::to_string(env.size()) + " bytes exceeds limit " +
                                  std::to_string(max_frame));
  }
  Bytes out;
  out.reserve(4 + env.size());
  be::put_u32(out, static_cast<std::uint32_t>(env.size()));
  out.insert(out.end(), env.begin(), env.end());
  return out;
}

Envelope decode_frame(ByteView in, std::size_t max_frame) {
  if (in.size() < 4) fail(Errc::TruncatedFrame, "missing frame length");
  auto len = be::get_u32(in.data());
  if (len > max_frame) fail(Errc::OversizeFrame, "frame length " + std::to_string(len));
  if (in.size() - 4 < len) fail(Errc::TruncatedFrame, "frame truncated");
  return decode_envelope(in.subspan(4, len));
}

void FrameSplitter::feed(ByteView data) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Bytes> FrameSplitter::next() {
  if (buffered() < 4) return std::nullopt;
  auto len = be::get_u32(buf_.data() + pos_);
  if (len > max_frame_) fail(Errc::OversizeFrame, "frame length " + std::to_string(len));
  if (buffered() - 4 < len) return std::nullopt;
  Bytes frame(buf_.begin() + pos_ + 4, buf_.begin() + pos_ + 4 + len);
  pos_ += 4 + len;
  if (pos_ > (1u << 16) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + pos_);
    pos_ = 0;
  }
  return frame;
}

Envelope make_error_response(const Envelope& request, Errc code,
                             const std::string& message,
                             std::optional<std::int64_t> detail, std::string step) {
  ErrorMessage err{static_cast<std::uint16_t>(code), message, detail, std::move(step)};
  return Envelope{kProtocolVersion, MessageType::Error, request.correlation_id,
                  err.encode()};
}

const Bytes& expect_body(const Envelope& response, MessageType expected) {
  if (response.type == MessageType::Error) {
    auto err = ErrorMessage::decode(response.body);
    throw RemoteFailure(static_cast<Errc>(err.code), err.message, err.detail, err.step);
  }
  if (response.type != expected) {
    fail(Errc::MalformedMessage, "expected " + std::string(message_type_name(expected)) +
                                     ", got " +
                                     std::string(message_type_name(response.type)));
  }
  return response.body;
}

Envelope dispatch_safely(const Handler& inner, const Envelope& request) {
  try {
    Envelope resp = inner(request);
    resp.version = kProtocolVersion;
    resp.correlation_id = request.correlation_id;
    return resp;
  } catch (const VpkiError& e) {
    return make_error_response(request, e.code(), e.message(), e.detail(), e.step());
  } catch (const std::exception& e) {
    return make_error_response(request, Errc::InvalidArgument,
                               std::string("internal error: ") + e.what());
  }
}

Envelope LocalEndpoint::call(Envelope request, std::chrono::milliseconds) {
  return dispatch_safely(handler_, request);
}

Bytes rpc(Endpoint& ep, MessageType type, Bytes body, MessageType expect,
          std::chrono::milliseconds deadline) {
  Envelope req{kProtocolVersion, type, 0, std::move(body)};
  auto resp = ep.call(std::move(req), deadline);
  return expect_body(resp, expect);
}

HostPort HostPort::parse(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) {
    fail(Errc::InvalidArgument, "address must be host:port, got '" + std::string(s) + "'");
  }
  HostPort hp;
  hp.host = std::string(s.substr(0, colon));
  if (hp.host.empty()) hp.host = "127.0.0.1";
  auto port_str = std::string(s.substr(colon + 1));
  char* end = nullptr;
  long port = std::strtol(port_str.c_str(), &end, 10);
  if (port_str.empty() || *end != '\0' || port < 0 || port > 65535) {
    fail(Errc::InvalidArgument, "bad port in '" + std::string(s) + "'");
  }
  hp.port = static_cast<std::uint16_t>(port);
  return hp;
}

std::string HostPort::str() const { return host + ":" + std::to_string(port); }

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

enum class Io { Ok, WantRead, WantWrite, Closed, Error };

// Non-blocking byte stream over a socket, optionally wrapped in TLS.
class Stream {
 public:
  Stream(int fd, SSL* ssl) : fd_(fd), ssl_(ssl) {}
  ~Stream() {
    if (ssl_ != nullptr) {
      SSL_shutdown(ssl_);
      SSL_free(ssl_);
    }
    ::close(fd_);
  }
  Stream(const Stream&) = delete;
  Stream& operator=(const Stream&) = delete;

  int fd() const { return fd_; }
  bool tls() const { return ssl_ != nullptr; }

  Io handshake() {
    if (ssl_ == nullptr) return Io::Ok;
    int rc = SSL_do_handshake(ssl_);
    if (rc == 1) return Io::Ok;
    return classify(rc);
  }

  Io read(std::uint8_t* buf, std::size_t cap, std::size_t& n) {
    n = 0;
    if (ssl_ != nullptr) {
      int rc = SSL_read(ssl_, buf, static_cast<int>(cap));
      if (rc > 0) {
        n = static_cast<std::size_t>(rc);
        return Io::Ok;
      }
      return classify(rc);
    }
    auto rc = ::recv(fd_, buf, cap, 0);
    if (rc > 0) {
      n = static_cast<std::size_t>(rc);
      return Io::Ok;
    }
    if (rc == 0) return Io::Closed;
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return Io::WantRead;
    return Io::Error;
  }

  Io write(const std::uint8_t* buf, std::size_t len, std::size_t& n) {
    n = 0;
    if (ssl_ != nullptr) {
      int rc = SSL_write(ssl_, buf, static_cast<int>(len));
      if (rc > 0) {
        n = static_cast<std::size_t>(rc);
        return Io::Ok;
      }
      return classify(rc);
    }
    auto rc = ::send(fd_, buf, len, MSG_NOSIGNAL);
    if (rc >= 0) {
      n = static_cast<std::size_t>(rc);
      return Io::Ok;
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return Io::WantWrite;
    return Io::Error;
  }

  std::string last_error() const { return last_error_; }

 private:
  Io classify(int rc) {
    int err = SSL_get_error(ssl_, rc);
    switch (err) {
      case SSL_ERROR_WANT_READ: return Io::WantRead;
      case SSL_ERROR_WANT_WRITE: return Io::WantWrite;
      case SSL_ERROR_ZERO_RETURN: return Io::Closed;
      default: {
        char buf[256] = {0};
        unsigned long e = ERR_get_error();
        if (e != 0) ERR_error_string_n(e, buf, sizeof(buf));
        last_error_ = buf;
        long verify = SSL_get_verify_result(ssl_);
        if (verify != X509_V_OK) {
          last_error_ += std::string(" verify: ") + X509_verify_cert_error_string(verify);
        }
        ERR_clear_error();
        return Io::Error;
      }
    }
  }

  int fd_;
  SSL* ssl_;
  std::string last_error_;
};

bool wait_io(int fd, Io want, int timeout_ms) {
  pollfd p{fd, static_cast<short>(want == Io::WantWrite ? POLLOUT : POLLIN), 0};
  return ::poll(&p, 1, timeout_ms) > 0;
}

void run_handshake(Stream& s, int timeout_ms) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    Io r = s.handshake();
    if (r == Io::Ok) return;
    if (r != Io::WantRead && r != Io::WantWrite) {
      fail(Errc::TlsFailure, "TLS handshake failed: " + s.last_error());
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    deadline - std::chrono::steady_clock::now())
                    .count();
    if (left <= 0 || !wait_io(s.fd(), r, static_cast<int>(left))) {
      fail(Errc::TlsFailure, "TLS handshake timed out");
    }
  }
}

}  // namespace

// A socket plus one I/O thread. All reads and writes (and therefore every
// SSL call) happen on that thread; other threads only enqueue frames.
class Connection {
 public:
  using FrameFn = std::function<void(Bytes)>;
  using CloseFn = std::function<void(const std::string&)>;

  Connection(std::unique_ptr<Stream> stream, std::size_t max_frame, bool handshake_done)
      : stream_(std::move(stream)), splitter_(max_frame), handshake_done_(handshake_done) {
    if (::pipe2(wake_, O_NONBLOCK | O_CLOEXEC) != 0) {
      fail(Errc::ConnectionFailed, "pipe2 failed");
    }
  }

  ~Connection() {
    close();
    ::close(wake_[0]);
    ::close(wake_[1]);
  }

  void start(FrameFn on_frame, CloseFn on_close) {
    on_frame_ = std::move(on_frame);
    on_close_ = std::move(on_close);
    io_ = std::thread([this] { run(); });
  }

  bool send(Bytes frame) {
    {
      std::lock_guard lock(mu_);
      if (closed_) return false;
      out_.push_back(std::move(frame));
    }
    wake();
    return true;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    wake();
    if (io_.joinable()) {
      if (io_.get_id() == std::this_thread::get_id()) {
        io_.detach();
      } else {
        io_.join();
      }
    }
  }

  bool is_open() const {
    std::lock_guard lock(mu_);
    return !closed_;
  }

 private:
  void wake() {
    std::uint8_t b = 1;
    [[maybe_unused]] auto rc = ::write(wake_[1], &b, 1);
  }

  void run() {
    std::string reason = "closed";
    try {
      if (!handshake_done_) run_handshake(*stream_, 5000);
      reason = loop();
    } catch (const std::exception& e) {
      reason = e.what();
    }
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      out_.clear();
    }
    ::shutdown(stream_->fd(), SHUT_RDWR);
    if (on_close_) on_close_(reason);
  }

  std::string loop() {
    std::uint8_t buf[16384];
    for (;;) {
      bool want_out;
      {
        std::lock_guard lock(mu_);
        if (closing_) return "closed locally";
        want_out = !out_.empty();
      }
      pollfd fds[2] = {
          {stream_->fd(), static_cast<short>(POLLIN | (want_out || read_wants_write_ ? POLLOUT : 0)), 0},
          {wake_[0], POLLIN, 0}};
      int rc = ::poll(fds, 2, 500);
      if (rc < 0 && errno != EINTR) return "poll failed";
      if (fds[1].revents & POLLIN) {
        std::uint8_t drain[64];
        while (::read(wake_[0], drain, sizeof(drain)) > 0) {
        }
      }
      if (fds[0].revents & (POLLERR | POLLNVAL)) return "socket error";

      // Reads: until the stream would block.
      read_wants_write_ = false;
      for (;;) {
        std::size_t n = 0;
        Io r = stream_->read(buf, sizeof(buf), n);
        if (r == Io::Ok) {
          splitter_.feed(ByteView(buf, n));
          while (auto frame = splitter_.next()) on_frame_(std::move(*frame));
          continue;
        }
        if (r == Io::WantWrite) read_wants_write_ = true;
        if (r == Io::Closed) return "peer closed";
        if (r == Io::Error) return "read error " + stream_->last_error();
        break;
      }

      // Writes: drain the queue until the stream would block.
      for (;;) {
        std::unique_lock lock(mu_);
        if (out_.empty()) break;
        Bytes& front = out_.front();
        lock.unlock();
        std::size_t n = 0;
        Io r = stream_->write(front.data() + out_off_, front.size() - out_off_, n);
        if (r == Io::Ok) {
          out_off_ += n;
          if (out_off_ == front.size()) {
            lock.lock();
            out_.pop_front();
            out_off_ = 0;
          }
          continue;
        }
        if (r == Io::Closed) return "peer closed";
        if (r == Io::Error) return "write error " + stream_->last_error();
        break;
      }
    }
  }

  std::unique_ptr<Stream> stream_;
  FrameSplitter splitter_;
  bool handshake_done_;
  int wake_[2] = {-1, -1};
  mutable std::mutex mu_;
  std::deque<Bytes> out_;
  std::size_t out_off_ = 0;
  bool closed_ = false;
  bool closing_ = false;
  bool read_wants_write_ = false;
  FrameFn on_frame_;
  CloseFn on_close_;
  std::thread io_;
};

namespace {

int connect_socket(const HostPort& target, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto port = std::to_string(target.port);
  if (::getaddrinfo(target.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    fail(Errc::ConnectionFailed, "cannot resolve " + target.str());
  }
  std::string last = "no address";
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    set_nonblocking(fd);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      if (::poll(&p, 1, static_cast<int>(timeout.count())) == 1) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        errno = ETIMEDOUT;
      }
    }
    if (rc == 0) break;
    last = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) fail(Errc::ConnectionFailed, target.str() + ": " + last);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool is_ip_literal(const std::string& host) {
  in6_addr buf;
  return ::inet_pton(AF_INET, host.c_str(), &buf) == 1 ||
         ::inet_pton(AF_INET6, host.c_str(), &buf) == 1;
}

}  // namespace

struct Channel::State {
  std::unique_ptr<Connection> conn;
  std::size_t max_frame = kDefaultMaxFrame;
  std::mutex mu;
  std::unordered_map<std::uint64_t, std::promise<Envelope>> pending;
  std::uint64_t next_id = 1;
  std::atomic<bool> open{true};

  void on_frame(Bytes raw) {
    Envelope e;
    try {
      e = decode_envelope(raw);
    } catch (const VpkiError&) {
      return;  // undecodable response; its caller will time out
    }
    std::lock_guard lock(mu);
    auto it = pending.find(e.correlation_id);
    if (it == pending.end()) return;  // caller already gave up
    it->second.set_value(std::move(e));
    pending.erase(it);
  }

  void on_close(const std::string& why) {
    open = false;
    std::lock_guard lock(mu);
    for (auto& [id, p] : pending) {
      p.set_exception(std::make_exception_ptr(
          VpkiError(Errc::ConnectionFailed, "connection lost: " + why)));
    }
    pending.clear();
  }
};

Channel::Channel(std::shared_ptr<State> state) : state_(std::move(state)) {}

Channel::~Channel() { close(); }

std::shared_ptr<Channel> Channel::connect(const HostPort& target,
                                          ChannelOptions options) {
  ignore_sigpipe();
  int fd = connect_socket(target, options.connect_timeout);
  SSL* ssl = nullptr;
  if (options.tls) {
    ssl = SSL_new(options.tls->native());
    if (ssl == nullptr) {
      ::close(fd);
      fail(Errc::TlsFailure, "SSL_new failed");
    }
    SSL_set_fd(ssl, fd);
    SSL_set_connect_state(ssl);
    X509_VERIFY_PARAM* param = SSL_get0_param(ssl);
    if (is_ip_literal(target.host)) {
      X509_VERIFY_PARAM_set1_ip_asc(param, target.host.c_str());
    } else {
      X509_VERIFY_PARAM_set1_host(param, target.host.c_str(), 0);
      SSL_set_tlsext_host_name(ssl, target.host.c_str());
    }
  }
  auto stream = std::make_unique<Stream>(fd, ssl);
  if (options.tls) run_handshake(*stream, static_cast<int>(options.connect_timeout.count()));

  auto state = std::make_shared<State>();
  state->max_frame = options.max_frame;
  state->conn = std::make_unique<Connection>(std::move(stream), options.max_frame, true);
  State* raw = state.get();
  state->conn->start([raw](Bytes b) { raw->on_frame(std::move(b)); },
                     [raw](const std::string& why) { raw->on_close(why); });
  return std::shared_ptr<Channel>(new Channel(std::move(state)));
}

bool Channel::open() const { return state_ && state_->open.load(); }

void Channel::close() {
  if (state_ && state_->conn) state_->conn->close();
}

Envelope Channel::call(Envelope request, std::chrono::milliseconds deadline) {
  if (deadline.count() <= 0) fail(Errc::InvalidArgument, "deadline must be positive");
  if (!open()) fail(Errc::ConnectionFailed, "channel closed");
  std::future<Envelope> fut;
  std::uint64_t id;
  {
    std::lock_guard lock(state_->mu);
    id = state_->next_id++;
    request.correlation_id = id;
    fut = state_->pending[id].get_future();
  }
  Bytes frame;
  try {
    frame = encode_frame(request, state_->max_frame);
  } catch (...) {
    std::lock_guard lock(state_->mu);
    state_->pending.erase(id);
    throw;
  }
  if (!state_->conn->send(std::move(frame))) {
    std::lock_guard lock(state_->mu);
    state_->pending.erase(id);
    fail(Errc::ConnectionFailed, "channel closed");
  }
  if (fut.wait_for(deadline) != std::future_status::ready) {
    std::lock_guard lock(state_->mu);
    state_->pending.erase(id);
    fail(Errc::Timeout, "no response within " + std::to_string(deadline.count()) + " ms");
  }
  return fut.get();
}

Envelope RemoteEndpoint::call(Envelope request, std::chrono::milliseconds deadline) {
  std::shared_ptr<Channel> ch;
  {
    std::lock_guard lock(mu_);
    if (!channel_ || !channel_->open()) channel_ = Channel::connect(target_, options_);
    ch = channel_;
  }
  return ch->call(std::move(request), deadline);
}

Envelope call(const HostPort& target, Envelope request,
              std::chrono::milliseconds deadline, ChannelOptions options) {
  if (deadline.count() <= 0) fail(Errc::InvalidArgument, "deadline must be positive");
  auto ch = Channel::connect(target, std::move(options));
  return ch->call(std::move(request), deadline);
}

struct Server::Impl {
  int listen_fd = -1;
  int wake[2] = {-1, -1};
  std::thread acceptor;
  std::unique_ptr<ThreadPool> pool;
  std::mutex mu;
  std::vector<std::shared_ptr<Connection>> conns;
  std::atomic<bool> stopping{false};
};

Server::Server(ServerOptions options, Handler handler)
    : options_(std::move(options)), handler_(std::move(handler)) {}

Server::~Server() { stop(); }

void Server::start() {
  ignore_sigpipe();
  if (impl_) return;
  auto impl = std::make_unique<Impl>();

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto port = std::to_string(options_.listen.port);
  const char* host = options_.listen.host.empty() ? nullptr : options_.listen.host.c_str();
  if (::getaddrinfo(host, port.c_str(), &hints, &res) != 0 || !res) {
    fail(Errc::ConnectionFailed, "cannot resolve listen address " + options_.listen.str());
  }
  int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (fd < 0 || ::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 128) != 0) {
    std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd >= 0) ::close(fd);
    fail(Errc::ConnectionFailed, "cannot listen on " + options_.listen.str() + ": " + err);
  }
  ::freeaddrinfo(res);
  set_nonblocking(fd);

  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6
              ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
              : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);

  impl->listen_fd = fd;
  if (::pipe2(impl->wake, O_NONBLOCK | O_CLOEXEC) != 0) {
    ::close(fd);
    fail(Errc::ConnectionFailed, "pipe2 failed");
  }
  impl->pool = std::make_unique<ThreadPool>(options_.workers);

  Impl* raw = impl.get();
  impl->acceptor = std::thread([this, raw] {
    while (!raw->stopping) {
      pollfd fds[2] = {{raw->listen_fd, POLLIN, 0}, {raw->wake[0], POLLIN, 0}};
      if (::poll(fds, 2, 500) < 0 && errno != EINTR) break;
      if (raw->stopping) break;
      {
        std::lock_guard lock(raw->mu);
        std::erase_if(raw->conns, [](const auto& c) { return !c->is_open(); });
      }
      if (!(fds[0].revents & POLLIN)) continue;
      int cfd = ::accept4(raw->listen_fd, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
      if (cfd < 0) continue;
      int one = 1;
      ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      SSL* ssl = nullptr;
      if (options_.tls) {
        ssl = SSL_new(options_.tls->native());
        if (ssl == nullptr) {
          ::close(cfd);
          continue;
        }
        SSL_set_fd(ssl, cfd);
        SSL_set_accept_state(ssl);
      }
      auto conn = std::make_shared<Connection>(std::make_unique<Stream>(cfd, ssl),
                                               options_.max_frame, ssl == nullptr);
      std::weak_ptr<Connection> weak = conn;
      auto max_frame = options_.max_frame;
      auto* pool = raw->pool.get();
      auto handler = handler_;
      conn->start(
          [weak, pool, handler, max_frame](Bytes raw_env) {
            pool->submit([weak, handler, max_frame, raw_env = std::move(raw_env)] {
              Envelope resp;
              try {
                auto req = decode_envelope(raw_env);
                resp = dispatch_safely(handler, req);
              } catch (const VpkiError& e) {
                Envelope stub;
                if (raw_env.size() >= 11) stub.correlation_id = be::get_u64(raw_env.data() + 3);
                resp = make_error_response(stub, e.code(), e.message());
              }
              Bytes frame;
              try {
                frame = encode_frame(resp, max_frame);
              } catch (const VpkiError& e) {
                frame = encode_frame(make_error_response(resp, e.code(), e.message()), max_frame);
              }
              if (auto c = weak.lock()) c->send(std::move(frame));
            });
          },
          [](const std::string&) {});
      std::lock_guard lock(raw->mu);
      raw->conns.push_back(std::move(conn));
    }
  });
  impl_ = std::move(impl);
}

void Server::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  std::uint8_t b = 1;
  [[maybe_unused]] auto rc = ::write(impl_->wake[1], &b, 1);
  if (impl_->acceptor.joinable()) impl_->acceptor.join();
  ::close(impl_->listen_fd);
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(impl_->mu);
    conns.swap(impl_->conns);
  }
  for (auto& c : conns) c->close();
  impl_->pool->shutdown();
  conns.clear();
  ::close(impl_->wake[0]);
  ::close(impl_->wake[1]);
  impl_.reset();
}

}  // namespace vpki
