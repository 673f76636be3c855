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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vpki {

// Every failure surfaced by the library maps onto one of these codes. The
// numeric values are part of the wire format (error responses carry them),
// so never renumber an existing entry.
enum class Errc : std::uint16_t {
  Ok = 0,
  InvalidArgument = 1,
  MalformedMessage = 2,
  EntropyFailure = 3,
  CryptoFailure = 4,

  // credentials
  MalformedValidity = 10,
  UnknownIssuer = 11,
  Expired = 12,
  NotYetValid = 13,
  BadSignature = 14,
  BadProofOfPossession = 15,

  // ltca
  DuplicateRegistration = 20,
  BadAuth = 21,
  RevokedLtc = 22,
  ExpiredLtc = 23,
  WindowTooLarge = 24,
  UnknownTicket = 25,
  Unauthorized = 26,
  UnknownSerial = 27,

  // pca
  BadTicketSignature = 30,
  WrongPca = 31,
  TicketExpired = 32,
  TicketAlreadyUsed = 33,
  TooManyCsrs = 34,
  DuplicateCsrKey = 35,

  // ra
  UpstreamUnavailable = 40,
  PartialRevocation = 41,

  // store
  StoreUnavailable = 50,
  NotFound = 51,

  // orchestrator
  NoReadyPods = 60,
  SpawnFailed = 61,
  InvalidConfig = 62,
  PodUnavailable = 63,

  // gateway
  UnknownVersion = 70,
  UnknownType = 71,
  TruncatedFrame = 72,
  OversizeFrame = 73,
  Timeout = 74,
  ConnectionFailed = 75,
  RemoteError = 76,
  TlsFailure = 77,

  // client / bench
  TargetUnreachable = 80,
  ParseError = 81,
  EmptyTrace = 82,
  NoData = 83,
  SlotMismatch = 84,
};

std::string_view errc_name(Errc code);

// Single exception type for the whole library. detail carries an operation
// specific integer (offending CSR index, trace line number); step names the
// protocol step that failed when the error crossed a service boundary.
class VpkiError : public std::runtime_error {
 public:
  VpkiError(Errc code, const std::string& message,
            std::optional<std::int64_t> detail = std::nullopt,
            std::string step = {});

  Errc code() const noexcept { return code_; }
  const std::optional<std::int64_t>& detail() const noexcept { return detail_; }
  const std::string& step() const noexcept { return step_; }
  // The message without the code-name prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
  std::optional<std::int64_t> detail_;
  std::string step_;
};

[[noreturn]] void fail(Errc code, const std::string& message,
                       std::optional<std::int64_t> detail = std::nullopt);

}  // namespace vpki
