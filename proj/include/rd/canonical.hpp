#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "rd/error.hpp"

namespace rd {

using Json = nlohmann::json;

/// Sorted keys (nlohmann::json stores objects in std::map), no whitespace,
/// integers only. Floats anywhere in the tree are rejected.
inline void require_integral(const Json& j) {
  switch (j.type()) {
    case Json::value_t::number_float:
      throw Error(ErrorCode::NonCanonical, "floating point value in canonical payload");
    case Json::value_t::object:
    case Json::value_t::array:
      for (const auto& child : j) require_integral(child);
      break;
    default:
      break;
  }
}

inline std::string canonical_encode(const Json& j) {
  require_integral(j);
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }
  return out;
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

/// Strict lowercase hex; anything else is Malformed.
inline Digest digest_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw Error(ErrorCode::Malformed, "digest must be 64 hex chars");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(ErrorCode::Malformed, "digest must be lowercase hex");
  };
  Digest d{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return d;
}

inline std::string digest_hex_of(const Json& j) { return to_hex(sha256(canonical_encode(j))); }

}  // namespace rd
