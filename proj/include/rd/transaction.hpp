#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rd/canonical.hpp"
#include "rd/characters.hpp"

namespace rd {

using ChainId = std::uint64_t;
using CharacterId = std::uint64_t;

enum class Game : std::uint8_t { RhythmDungeon, LastTrip, AdamsAdventure };
inline constexpr std::array<Game, 3> kGames = {Game::RhythmDungeon, Game::LastTrip, Game::AdamsAdventure};

constexpr std::string_view to_string(Game g) {
  switch (g) {
    case Game::RhythmDungeon: return "RhythmDungeon";
    case Game::LastTrip: return "LastTrip";
    case Game::AdamsAdventure: return "AdamsAdventure";
  }
  return "?";
}

inline std::optional<Game> game_from_string(std::string_view s) {
  for (auto g : kGames)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

enum class TxKind : std::uint8_t { UploadCharacter, RecordDarkLordDefeat, AccumulateAdamGrowth, BloodMoonResult };

constexpr std::string_view to_string(TxKind k) {
  switch (k) {
    case TxKind::UploadCharacter: return "UploadCharacter";
    case TxKind::RecordDarkLordDefeat: return "RecordDarkLordDefeat";
    case TxKind::AccumulateAdamGrowth: return "AccumulateAdamGrowth";
    case TxKind::BloodMoonResult: return "BloodMoonResult";
  }
  return "?";
}

inline std::optional<TxKind> tx_kind_from_string(std::string_view s) {
  for (auto k : {TxKind::UploadCharacter, TxKind::RecordDarkLordDefeat, TxKind::AccumulateAdamGrowth,
                 TxKind::BloodMoonResult})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// A contract call before it is attributed to a submitter. Game flows
/// produce calls; whoever owns the chain writer stamps submitter and nonce.
struct Call {
  TxKind kind = TxKind::UploadCharacter;
  Json payload = Json::object();
  bool operator==(const Call&) const = default;
};

inline constexpr std::size_t kMaxSubmitterLength = 64;

struct Transaction {
  TxKind kind = TxKind::UploadCharacter;
  Json payload = Json::object();
  std::string submitter;
  std::uint64_t nonce = 0;
  bool operator==(const Transaction&) const = default;
};

inline Transaction sign(Call call, std::string submitter, std::uint64_t nonce) {
  return {call.kind, std::move(call.payload), std::move(submitter), nonce};
}

// --- typed payloads -------------------------------------------------------

struct UploadPayload {
  Character character;
  Game origin = Game::RhythmDungeon;
};

struct DefeatPayload {
  ChainId chain_id = 0;
  std::uint64_t defeat_index = 0;  // counter value after this defeat
};

struct GrowthPayload {
  ChainId chain_id = 0;
  Attribute attribute = Attribute::Strength;
};

enum class DuelWinner : std::uint8_t { Home, Opponent };

struct Duel {
  ChainId opponent_chain = 0;
  DuelWinner winner = DuelWinner::Home;
  std::uint64_t turns = 0;
  bool operator==(const Duel&) const = default;
};

struct BloodMoonPayload {
  ChainId home_chain = 0;
  std::uint64_t round = 0;  // 1 for the first trigger (30 defeats), 2 for 60, ...
  std::vector<Duel> duels;
  bool operator==(const BloodMoonPayload&) const = default;
};

inline Call upload_call(const Character& c, Game origin) {
  return {TxKind::UploadCharacter, Json{{"character", to_json(c)}, {"origin_game", std::string(to_string(origin))}}};
}

inline Call defeat_call(ChainId chain, std::uint64_t defeat_index) {
  return {TxKind::RecordDarkLordDefeat, Json{{"chain_id", chain}, {"defeat_index", defeat_index}}};
}

inline Call growth_call(ChainId chain, Attribute a) {
  return {TxKind::AccumulateAdamGrowth, Json{{"chain_id", chain}, {"attribute", std::string(to_string(a))}}};
}

inline Json to_json(const BloodMoonPayload& p) {
  Json duels = Json::array();
  for (const auto& d : p.duels)
    duels.push_back(Json{{"opponent_chain", d.opponent_chain},
                         {"winner", d.winner == DuelWinner::Home ? "home" : "opponent"},
                         {"turns", d.turns}});
  return Json{{"home_chain", p.home_chain}, {"round", p.round}, {"duels", std::move(duels)}};
}

inline Call blood_moon_call(const BloodMoonPayload& p) { return {TxKind::BloodMoonResult, to_json(p)}; }

inline UploadPayload parse_upload(const Json& j) {
  detail::exact_keys(j, 2);
  auto origin = game_from_string(detail::string_field(j, "origin_game"));
  if (!origin) throw Error(ErrorCode::Malformed, "unknown origin_game");
  return {character_from_json(detail::field(j, "character")), *origin};
}

inline DefeatPayload parse_defeat(const Json& j) {
  detail::exact_keys(j, 2);
  return {detail::uint_field(j, "chain_id"), detail::uint_field(j, "defeat_index")};
}

inline GrowthPayload parse_growth(const Json& j) {
  detail::exact_keys(j, 2);
  auto a = attribute_from_string(detail::string_field(j, "attribute"));
  if (!a) throw Error(ErrorCode::Malformed, "unknown attribute");
  return {detail::uint_field(j, "chain_id"), *a};
}

inline BloodMoonPayload parse_blood_moon(const Json& j) {
  detail::exact_keys(j, 3);
  BloodMoonPayload p{detail::uint_field(j, "home_chain"), detail::uint_field(j, "round"), {}};
  const Json& duels = detail::field(j, "duels");
  if (!duels.is_array()) throw Error(ErrorCode::Malformed, "duels must be an array");
  for (const auto& d : duels) {
    detail::exact_keys(d, 3);
    const auto& w = detail::string_field(d, "winner");
    if (w != "home" && w != "opponent") throw Error(ErrorCode::Malformed, "winner must be home|opponent");
    p.duels.push_back({detail::uint_field(d, "opponent_chain"), w == "home" ? DuelWinner::Home : DuelWinner::Opponent,
                       detail::uint_field(d, "turns")});
  }
  return p;
}

/// True when the payload decodes as the shape its kind requires.
inline bool payload_shape_ok(TxKind kind, const Json& payload) {
  try {
    switch (kind) {
      case TxKind::UploadCharacter: parse_upload(payload); break;
      case TxKind::RecordDarkLordDefeat: parse_defeat(payload); break;
      case TxKind::AccumulateAdamGrowth: parse_growth(payload); break;
      case TxKind::BloodMoonResult: parse_blood_moon(payload); break;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline Json to_json(const Transaction& tx) {
  return Json{{"kind", std::string(to_string(tx.kind))},
              {"payload", tx.payload},
              {"submitter", tx.submitter},
              {"nonce", tx.nonce}};
}

inline Transaction transaction_from_json(const Json& j) {
  detail::exact_keys(j, 4);
  auto kind = tx_kind_from_string(detail::string_field(j, "kind"));
  if (!kind) throw Error(ErrorCode::Malformed, "unknown transaction kind");
  Transaction tx{*kind, detail::field(j, "payload"), detail::string_field(j, "submitter"),
                 detail::uint_field(j, "nonce")};
  if (!tx.payload.is_object()) throw Error(ErrorCode::Malformed, "payload must be an object");
  return tx;
}

}  // namespace rd
