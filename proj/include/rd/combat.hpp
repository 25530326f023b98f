#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "rd/canonical.hpp"
#include "rd/characters.hpp"
#include "rd/rhythm.hpp"
#include "rd/rng.hpp"

namespace rd {

struct Combatant {
  Character character;
  int current_health = 0;
  bool charged = false;
  bool dodging = false;
  std::optional<Weakness> stance;  // weakness tag this combatant's attacks target

  bool alive() const { return current_health > 0; }
  bool operator==(const Combatant&) const = default;
};

inline Combatant make_combatant(Character c, std::optional<Weakness> stance = std::nullopt) {
  Combatant out{std::move(c), 0, false, false, stance};
  out.current_health = out.character.max_health();
  return out;
}

inline constexpr int kCritLuckCap = 50;

struct DamageRoll {
  int points = 0;
  bool crit = false;
  bool exploit = false;
  std::uint64_t rng_state = 0;
  bool operator==(const DamageRoll&) const = default;
};

inline bool exploits(const std::optional<Weakness>& stance, Weakness weakness) {
  return stance && *stance != Weakness::None && *stance == weakness;
}

/// One seeded draw per call. Crit fires with probability min(luck, 50)/100
/// and doubles the base; a stance matching the defender's weakness adds
/// x3/2 (truncated) last. The caller clears `charged` on the attacker.
inline DamageRoll damage(const Combatant& attacker, const Combatant& defender, std::uint64_t rng_state) {
  SplitMix64 rng{rng_state};
  const int strength = attacker.charged ? attacker.character.strength * 2 : attacker.character.strength;
  int points = std::max(1, strength - defender.character.armor);
  const auto crit_chance = static_cast<std::uint64_t>(std::clamp(attacker.character.luck, 0, kCritLuckCap));
  const bool crit = rng.below(100) < crit_chance;
  if (crit) points *= 2;
  const bool exploit = exploits(attacker.stance, defender.character.weakness);
  if (exploit) points = points * 3 / 2;
  return {points, crit, exploit, rng.state};
}

namespace detail {

inline DamageRoll strike(Combatant& attacker, Combatant& defender, std::uint64_t& rng_state) {
  DamageRoll roll = damage(attacker, defender, rng_state);
  rng_state = roll.rng_state;
  attacker.charged = false;
  defender.current_health = std::max(0, defender.current_health - roll.points);
  return roll;
}

}  // namespace detail

struct BattleState {
  Combatant player;
  Combatant enemy;
  std::uint64_t turn = 0;
  std::uint64_t rng_state = 0;

  bool over() const { return !player.alive() || !enemy.alive(); }
  bool operator==(const BattleState&) const = default;
};

/// What happened during one resolved action pair.
struct TurnLog {
  Action action = Action::Stumble;
  std::optional<DamageRoll> player_hit;
  std::optional<DamageRoll> enemy_hit;
  bool enemy_negated = false;
};

struct TurnResult {
  BattleState state;
  TurnLog log;
};

/// Player acts, then a surviving enemy attacks (attack-only enemy). A
/// pending dodge negates that attack entirely and is consumed.
inline TurnResult resolve_turn(BattleState s, Action action) {
  if (s.over()) throw Error(ErrorCode::BattleOver);
  TurnLog log;
  log.action = action;
  switch (action) {
    case Action::Attack: log.player_hit = detail::strike(s.player, s.enemy, s.rng_state); break;
    case Action::Dodge: s.player.dodging = true; break;
    case Action::Charge: s.player.charged = true; break;
    case Action::Stumble: break;
  }
  if (s.enemy.alive()) {
    if (s.player.dodging) {
      s.player.dodging = false;
      log.enemy_negated = true;
    } else {
      log.enemy_hit = detail::strike(s.enemy, s.player, s.rng_state);
    }
  }
  ++s.turn;
  return {std::move(s), log};
}

inline BattleState resolve_player_action(BattleState s, Action action) {
  return resolve_turn(std::move(s), action).state;
}

enum class Side : std::uint8_t { A, B };

struct AutoBattleResult {
  Side winner = Side::B;
  std::uint64_t turns = 0;  // individual attacks executed
  Combatant a;
  Combatant b;
};

inline constexpr std::uint64_t kAutoBattleTurnPairCap = 1000;

/// Alternating plain attacks, `a` first, crits and exploits active. After
/// the cap the higher health fraction wins, `b` on an exact tie.
inline AutoBattleResult auto_battle(Combatant a, Combatant b, std::uint64_t seed) {
  if (!a.alive() || !b.alive()) throw Error(ErrorCode::BattleOver, "auto_battle needs two living combatants");
  a.charged = a.dodging = false;
  b.charged = b.dodging = false;
  std::uint64_t rng = seed;
  std::uint64_t turns = 0;
  for (std::uint64_t pair = 0; pair < kAutoBattleTurnPairCap; ++pair) {
    detail::strike(a, b, rng);
    ++turns;
    if (!b.alive()) return {Side::A, turns, std::move(a), std::move(b)};
    detail::strike(b, a, rng);
    ++turns;
    if (!a.alive()) return {Side::B, turns, std::move(a), std::move(b)};
  }
  const auto lhs = std::int64_t{a.current_health} * b.character.max_health();
  const auto rhs = std::int64_t{b.current_health} * a.character.max_health();
  return {lhs > rhs ? Side::A : Side::B, turns, std::move(a), std::move(b)};
}

inline Json to_json(const DamageRoll& d) {
  return Json{{"points", d.points}, {"crit", d.crit}, {"exploit", d.exploit}};
}

inline Json to_json(const Combatant& c) {
  Json j{{"character", to_json(c.character)},
         {"current_health", c.current_health},
         {"max_health", c.character.max_health()},
         {"charged", c.charged},
         {"dodging", c.dodging}};
  j["stance"] = c.stance ? Json(std::string(to_string(*c.stance))) : Json(nullptr);
  return j;
}

}  // namespace rd
