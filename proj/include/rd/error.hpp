#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rd {

enum class ErrorCode {
  NonceReplay,
  ClockSkew,
  InvalidTransaction,
  InvalidChain,
  NonCanonical,
  InvalidCharacter,
  UnknownChain,
  BadName,
  NoPoints,
  AttributeCap,
  BattleOver,
  SessionOver,
  SessionActive,
  BadPolicy,
  NoSummon,
  NotTriggered,
  ConfigInvalid,
  UnknownSession,
  WindowClosed,
  Malformed,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonceReplay: return "NonceReplay";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::InvalidTransaction: return "InvalidTransaction";
    case ErrorCode::InvalidChain: return "InvalidChain";
    case ErrorCode::NonCanonical: return "NonCanonical";
    case ErrorCode::InvalidCharacter: return "InvalidCharacter";
    case ErrorCode::UnknownChain: return "UnknownChain";
    case ErrorCode::BadName: return "BadName";
    case ErrorCode::NoPoints: return "NoPoints";
    case ErrorCode::AttributeCap: return "AttributeCap";
    case ErrorCode::BattleOver: return "BattleOver";
    case ErrorCode::SessionOver: return "SessionOver";
    case ErrorCode::SessionActive: return "SessionActive";
    case ErrorCode::BadPolicy: return "BadPolicy";
    case ErrorCode::NoSummon: return "NoSummon";
    case ErrorCode::NotTriggered: return "NotTriggered";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::WindowClosed: return "WindowClosed";
    case ErrorCode::Malformed: return "Malformed";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and is what
/// the service maps onto HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(detail) {}
  explicit Error(ErrorCode code) : Error(code, "") {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace rd
