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
#include "vpki/error.hpp"

namespace vpki {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::Ok: return "Ok";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::EntropyFailure: return "EntropyFailure";
    case Errc::CryptoFailure: return "CryptoFailure";
    case Errc::MalformedValidity: return "MalformedValidity";
    case Errc::UnknownIssuer: return "UnknownIssuer";
    case Errc::Expired: return "Expired";
    case Errc::NotYetValid: return "NotYetValid";
    case Errc::BadSignature: return "BadSignature";
    case Errc::BadProofOfPossession: return "BadProofOfPossession";
    case Errc::DuplicateRegistration: return "DuplicateRegistration";
    case Errc::BadAuth: return "BadAuth";
    case Errc::RevokedLtc: return "RevokedLtc";
    case Errc::ExpiredLtc: return "ExpiredLtc";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::UnknownTicket: return "UnknownTicket";
    case Errc::Unauthorized: return "Unauthorized";
    case Errc::UnknownSerial: return "UnknownSerial";
    case Errc::BadTicketSignature: return "BadTicketSignature";
    case Errc::WrongPca: return "WrongPca";
    case Errc::TicketExpired: return "TicketExpired";
    case Errc::TicketAlreadyUsed: return "TicketAlreadyUsed";
    case Errc::TooManyCsrs: return "TooManyCsrs";
    case Errc::DuplicateCsrKey: return "DuplicateCsrKey";
    case Errc::UpstreamUnavailable: return "UpstreamUnavailable";
    case Errc::PartialRevocation: return "PartialRevocation";
    case Errc::StoreUnavailable: return "StoreUnavailable";
    case Errc::NotFound: return "NotFound";
    case Errc::NoReadyPods: return "NoReadyPods";
    case Errc::SpawnFailed: return "SpawnFailed";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::PodUnavailable: return "PodUnavailable";
    case Errc::UnknownVersion: return "UnknownVersion";
    case Errc::UnknownType: return "UnknownType";
    case Errc::TruncatedFrame: return "TruncatedFrame";
    case Errc::OversizeFrame: return "OversizeFrame";
    case Errc::Timeout: return "Timeout";
    case Errc::ConnectionFailed: return "ConnectionFailed";
    case Errc::RemoteError: return "RemoteError";
    case Errc::TlsFailure: return "TlsFailure";
    case Errc::TargetUnreachable: return "TargetUnreachable";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::NoData: return "NoData";
    case Errc::SlotMismatch: return "SlotMismatch";
  }
  return "Unknown";
}

namespace {
std::string compose(Errc code, const std::string& message) {
  std::string out(errc_name(code));
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}
}  // namespace

VpkiError::VpkiError(Errc code, const std::string& message,
                     std::optional<std::int64_t> detail, std::string step)
    : std::runtime_error(compose(code, message)),
      code_(code),
      message_(message),
      detail_(detail),
      step_(std::move(step)) {}

void fail(Errc code, const std::string& message,
          std::optional<std::int64_t> detail) {
  throw VpkiError(code, message, detail);
}

}  // namespace vpki
