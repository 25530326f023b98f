#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rd/canonical.hpp"
#include "rd/characters.hpp"
#include "rd/transaction.hpp"

namespace rd {

inline constexpr std::uint64_t kBloodMoonPeriod = 30;
inline constexpr int kLevelMatchRadius = 1;

struct CharacterRecord {
  CharacterId id = 0;
  Character character;
  Game origin = Game::RhythmDungeon;
  std::uint64_t uploaded_at = 0;  // block height
  // Retirement on fetch is off: fetched characters stay fetchable.
  bool alive_in_store = true;
  bool operator==(const CharacterRecord&) const = default;
};

struct Rejection {
  std::uint64_t height = 0;
  std::string submitter;
  std::uint64_t nonce = 0;
  std::string reason;
  bool operator==(const Rejection&) const = default;
};

/// Contract state. Every field except `by_level` is part of the canonical
/// encoding; `by_level` is a lookup index rebuilt alongside `characters`.
struct GenesisState {
  std::vector<CharacterRecord> characters;  // index == character id
  std::map<ChainId, Character> adam;
  std::map<ChainId, std::uint64_t> dark_lord_defeats;
  std::vector<BloodMoonPayload> blood_moon_log;
  std::vector<Rejection> rejected;
  std::map<std::pair<int, Game>, std::vector<CharacterId>> by_level;

  static GenesisState for_chains(std::initializer_list<ChainId> chains) {
    GenesisState s;
    for (auto c : chains) s.add_chain(c);
    return s;
  }

  void add_chain(ChainId chain) {
    if (adam.contains(chain)) return;
    adam.emplace(chain, create_base("Adam"));
    dark_lord_defeats.emplace(chain, 0);
  }

  bool knows(ChainId chain) const { return adam.contains(chain); }

  const Character& adam_of(ChainId chain) const {
    auto it = adam.find(chain);
    if (it == adam.end()) throw Error(ErrorCode::UnknownChain, std::to_string(chain));
    return it->second;
  }

  std::uint64_t defeats(ChainId chain) const {
    auto it = dark_lord_defeats.find(chain);
    if (it == dark_lord_defeats.end()) throw Error(ErrorCode::UnknownChain, std::to_string(chain));
    return it->second;
  }

  std::uint64_t blood_moons_resolved(ChainId chain) const {
    return static_cast<std::uint64_t>(std::count_if(blood_moon_log.begin(), blood_moon_log.end(),
                                                    [&](const auto& b) { return b.home_chain == chain; }));
  }

  bool operator==(const GenesisState& o) const {
    return characters == o.characters && adam == o.adam && dark_lord_defeats == o.dark_lord_defeats &&
           blood_moon_log == o.blood_moon_log && rejected == o.rejected;
  }
};

struct UploadResult {
  GenesisState state;
  CharacterId id = 0;
};

/// Stores `character` under the next id if it passes validation; otherwise
/// throws InvalidCharacter naming the first violated rule.
inline UploadResult upload_character(GenesisState s, Character character, Game origin, std::uint64_t height = 0) {
  if (auto v = validate_character(character); !v)
    throw Error(ErrorCode::InvalidCharacter, std::string(to_string(*v.violated)));
  const CharacterId id = s.characters.size();
  s.by_level[{character.level, origin}].push_back(id);
  s.characters.push_back({id, std::move(character), origin, height, true});
  return {std::move(s), id};
}

namespace detail {

/// k-th smallest id (0-based) across disjoint sorted id lists.
inline CharacterId select_kth(const std::vector<const std::vector<CharacterId>*>& lists, std::uint64_t k,
                              CharacterId id_bound) {
  CharacterId lo = 0, hi = id_bound;  // answer in [lo, hi)
  while (hi - lo > 1) {
    const CharacterId mid = lo + (hi - lo) / 2;
    std::uint64_t below = 0;  // ids < mid
    for (const auto* l : lists) below += static_cast<std::uint64_t>(std::lower_bound(l->begin(), l->end(), mid) - l->begin());
    if (below <= k) lo = mid;
    else hi = mid;
  }
  return lo;
}

template <class Accept>
std::optional<CharacterRecord> read_matching(const GenesisState& s, int player_level, std::uint64_t seed,
                                             Accept&& accept) {
  std::vector<const std::vector<CharacterId>*> lists;
  std::uint64_t count = 0;
  for (int level = player_level - kLevelMatchRadius; level <= player_level + kLevelMatchRadius; ++level) {
    for (auto g : kGames) {
      if (!accept(g)) continue;
      auto it = s.by_level.find({level, g});
      if (it == s.by_level.end() || it->second.empty()) continue;
      lists.push_back(&it->second);
      count += it->second.size();
    }
  }
  if (count == 0) return std::nullopt;
  return s.characters[select_kth(lists, seed % count, s.characters.size())];
}

}  // namespace detail

/// ReadCharacter: among records within one level of `player_level` (and not
/// from `exclude_origin`), picks index seed mod count in id order.
inline std::optional<CharacterRecord> read_character(const GenesisState& s, int player_level, std::uint64_t seed,
                                                     std::optional<Game> exclude_origin = std::nullopt) {
  return detail::read_matching(s, player_level, seed, [&](Game g) { return g != exclude_origin; });
}

/// Same selection rule, restricted to records from one origin game.
inline std::optional<CharacterRecord> read_character_from(const GenesisState& s, int player_level,
                                                          std::uint64_t seed, Game only_origin) {
  return detail::read_matching(s, player_level, seed, [&](Game g) { return g == only_origin; });
}

/// Record from `origin` whose level is nearest to `level`; lowest id wins ties.
inline std::optional<CharacterRecord> nearest_level_record(const GenesisState& s, int level, Game origin) {
  std::optional<CharacterId> best;
  int best_gap = 0;
  for (const auto& [key, ids] : s.by_level) {
    if (key.second != origin || ids.empty()) continue;
    const int gap = key.first > level ? key.first - level : level - key.first;
    const CharacterId first = ids.front();
    if (!best || gap < best_gap || (gap == best_gap && first < *best)) {
      best = first;
      best_gap = gap;
    }
  }
  if (!best) return std::nullopt;
  return s.characters[*best];
}

struct DefeatResult {
  GenesisState state;
  bool blood_moon_triggered = false;
};

inline DefeatResult record_dark_lord_defeat(GenesisState s, ChainId chain) {
  auto it = s.dark_lord_defeats.find(chain);
  if (it == s.dark_lord_defeats.end()) throw Error(ErrorCode::UnknownChain, std::to_string(chain));
  const std::uint64_t count = ++it->second;
  return {std::move(s), count % kBloodMoonPeriod == 0};
}

/// Blood Moon rounds earned on `chain` but not yet resolved.
inline std::uint64_t pending_blood_moons(const GenesisState& s, ChainId chain) {
  return s.defeats(chain) / kBloodMoonPeriod - s.blood_moons_resolved(chain);
}

inline int adam_level_for(int attribute_sum) { return 1 + (attribute_sum - kBaseAttributeSum) / kPointsPerLevel; }

inline GenesisState accumulate_adam_growth(GenesisState s, ChainId chain, Attribute attribute) {
  auto it = s.adam.find(chain);
  if (it == s.adam.end()) throw Error(ErrorCode::UnknownChain, std::to_string(chain));
  Character& adam = it->second;
  ++adam.attribute(attribute);
  adam.level = adam_level_for(adam.attribute_sum());
  return s;
}

namespace detail {

inline GenesisState reject(GenesisState s, const Transaction& tx, std::uint64_t height, std::string reason) {
  s.rejected.push_back({height, tx.submitter, tx.nonce, std::move(reason)});
  return s;
}

}  // namespace detail

/// Transaction dispatcher used by replay. Anything that fails to decode or
/// validate is folded as a no-op plus a rejection note.
inline GenesisState apply_transaction(GenesisState s, const Transaction& tx, std::uint64_t height = 0) {
  try {
    switch (tx.kind) {
      case TxKind::UploadCharacter: {
        auto p = parse_upload(tx.payload);
        if (auto v = validate_character(p.character); !v)
          return detail::reject(std::move(s), tx, height,
                                "InvalidCharacter: " + std::string(to_string(*v.violated)));
        return upload_character(std::move(s), std::move(p.character), p.origin, height).state;
      }
      case TxKind::RecordDarkLordDefeat: {
        auto p = parse_defeat(tx.payload);
        if (!s.knows(p.chain_id)) return detail::reject(std::move(s), tx, height, "UnknownChain");
        if (p.defeat_index != s.defeats(p.chain_id) + 1)
          return detail::reject(std::move(s), tx, height, "DefeatIndexMismatch");
        return record_dark_lord_defeat(std::move(s), p.chain_id).state;
      }
      case TxKind::AccumulateAdamGrowth: {
        auto p = parse_growth(tx.payload);
        if (!s.knows(p.chain_id)) return detail::reject(std::move(s), tx, height, "UnknownChain");
        return accumulate_adam_growth(std::move(s), p.chain_id, p.attribute);
      }
      case TxKind::BloodMoonResult: {
        auto p = parse_blood_moon(tx.payload);
        if (!s.knows(p.home_chain)) return detail::reject(std::move(s), tx, height, "UnknownChain");
        if (p.round != s.blood_moons_resolved(p.home_chain) + 1 || pending_blood_moons(s, p.home_chain) == 0)
          return detail::reject(std::move(s), tx, height, "NotTriggered");
        s.blood_moon_log.push_back(std::move(p));
        return s;
      }
    }
  } catch (const Error& e) {
    return detail::reject(std::move(s), tx, height, e.what());
  }
  return s;
}

// --- snapshot ---------------------------------------------------------------

inline Json to_json(const CharacterRecord& r) {
  return Json{{"character_id", r.id},
              {"character", to_json(r.character)},
              {"origin_game", std::string(to_string(r.origin))},
              {"uploaded_at", r.uploaded_at},
              {"alive_in_store", r.alive_in_store}};
}

inline Json to_json(const GenesisState& s) {
  Json characters = Json::array();
  for (const auto& r : s.characters) characters.push_back(to_json(r));
  Json adam = Json::array();
  for (const auto& [chain, c] : s.adam) adam.push_back(Json{{"chain_id", chain}, {"character", to_json(c)}});
  Json defeats = Json::array();
  for (const auto& [chain, n] : s.dark_lord_defeats) defeats.push_back(Json{{"chain_id", chain}, {"defeats", n}});
  Json moons = Json::array();
  for (const auto& b : s.blood_moon_log) moons.push_back(to_json(b));
  Json rejected = Json::array();
  for (const auto& r : s.rejected)
    rejected.push_back(Json{{"height", r.height}, {"submitter", r.submitter}, {"nonce", r.nonce}, {"reason", r.reason}});
  return Json{{"characters", std::move(characters)},
              {"adam", std::move(adam)},
              {"dark_lord_defeats", std::move(defeats)},
              {"blood_moon_log", std::move(moons)},
              {"rejected", std::move(rejected)}};
}

inline std::string state_digest(const GenesisState& s) { return digest_hex_of(to_json(s)); }

}  // namespace rd
