#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rd/canonical.hpp"
#include "rd/characters.hpp"
#include "rd/combat.hpp"
#include "rd/genesis.hpp"
#include "rd/rhythm.hpp"
#include "rd/rng.hpp"
#include "rd/transaction.hpp"

namespace rd {

// --- enemies ----------------------------------------------------------------

/// Base character raised to `level` with every skill point spent
/// round-robin, starting at `start`. Not capped: bosses may exceed the
/// contract's level range.
inline Character procedural_character(std::string name, int level, Attribute start) {
  Character c = create_base(std::move(name));
  c.level = std::max(1, level);
  auto slot = static_cast<std::size_t>(start);
  for (int p = 0; p < kPointsPerLevel * (c.level - 1); ++p) {
    ++c.attribute(kAttributes[slot]);
    slot = (slot + 1) % kAttributes.size();
  }
  return c;
}

struct EnemySpawn {
  Combatant enemy;
  std::optional<CharacterId> fetched;  // empty: procedural
  bool fetch_attempted = false;
};

/// Draw 1 decides whether to consult the contract (p_fetch_percent/100);
/// draw 2 is the ReadCharacter seed, or the starting attribute of the
/// procedural build when nothing is fetched.
inline EnemySpawn generate_enemy(const GenesisState& state, int player_level, std::uint64_t seed,
                                 int p_fetch_percent) {
  SplitMix64 rng{seed};
  const bool attempt = rng.below(100) < static_cast<std::uint64_t>(std::clamp(p_fetch_percent, 0, 100));
  const std::uint64_t second = rng.next();
  if (attempt) {
    if (auto rec = read_character(state, player_level, second))
      return {make_combatant(rec->character), rec->id, true};
  }
  auto start = kAttributes[second % kAttributes.size()];
  return {make_combatant(procedural_character("Shade", player_level, start)), std::nullopt, attempt};
}

// --- Rhythm Dungeon -----------------------------------------------------------

enum class Phase : std::uint8_t { Exploring, InBattle, Dead, Retired };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Exploring: return "Exploring";
    case Phase::InBattle: return "InBattle";
    case Phase::Dead: return "Dead";
    case Phase::Retired: return "Retired";
  }
  return "?";
}

inline constexpr std::uint64_t kXpPerEnemyLevel = 10;

struct DungeonSession {
  Character character;
  std::uint64_t room_index = 0;
  std::optional<BattleState> battle;
  std::optional<CharacterId> enemy_fetched;
  BeatGrid grid;
  std::int64_t window_index = 0;  // next window of the current grid
  std::int64_t clock_ms = 0;      // where the next grid starts
  MistakeTally tally;
  std::uint64_t seed = 0;
  int p_fetch_percent = 50;
  Phase phase = Phase::Exploring;
  bool uploaded = false;

  bool terminal() const { return phase == Phase::Dead || phase == Phase::Retired; }
};

inline DungeonSession start_dungeon(std::string name, std::uint64_t seed, int p_fetch_percent = 50,
                                    std::int64_t origin_ms = 0) {
  DungeonSession s;
  s.character = create_base(std::move(name));
  s.seed = seed;
  s.p_fetch_percent = p_fetch_percent;
  s.clock_ms = origin_ms;
  s.grid = {tempo_for_tier(1), origin_ms};
  return s;
}

/// The command pattern the presses agree with most (most Hits), ties in
/// Attack, Dodge, Charge order.
inline Pattern intended_pattern(const BeatGrid& grid, std::int64_t window, std::span<const InputEvent> inputs) {
  Pattern best = kAttackPattern;
  int best_hits = -1;
  for (auto a : {Action::Attack, Action::Dodge, Action::Charge}) {
    const auto r = judge_window(grid, window, pattern_of(a), inputs);
    int hits = 0;
    for (const auto& j : r.judged) hits += j.outcome == Outcome::Hit;
    if (hits > best_hits) {
      best = pattern_of(a);
      best_hits = hits;
    }
  }
  return best;
}

struct StepResult {
  DungeonSession session;
  std::vector<Json> events;  // left empty when the caller opts out
  bool fetch_attempted = false;
  std::optional<WindowResult> window;
  std::optional<TurnLog> turn;
};

namespace detail {

inline Json pattern_json(const Pattern& p) {
  Json a = Json::array();
  for (auto b : p) a.push_back(std::string(to_string(b)));
  return a;
}

inline Json schedule_json(const BeatGrid& g, std::int64_t window) {
  Json targets = Json::array();
  for (int i = 0; i < kBeatsPerBar; ++i) targets.push_back(g.judged_beat_time(window, i));
  return Json{{"window_index", window},
              {"bpm", g.bpm},
              {"window_start_us", g.beat_time(g.first_beat(window))},
              {"beat_targets_us", std::move(targets)},
              {"deadline_us", g.window_deadline(window)}};
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a >= 0 ? (a + b - 1) / b : a / b; }

}  // namespace detail

/// Beat schedule of the next window to be played.
inline Json window_schedule(const DungeonSession& s) { return detail::schedule_json(s.grid, s.window_index); }

/// Exploring: spawn the room's enemy and switch tempo to its tier.
/// InBattle: judge the window, decode and resolve the action, fold mistakes
/// into the tally; a kill grants xp and returns to Exploring, a death is final.
/// Bots pass `record_events = false` to skip building the event log.
inline StepResult step_dungeon(DungeonSession s, const GenesisState& state, std::span<const InputEvent> inputs,
                               std::optional<Weakness> stance = std::nullopt, bool record_events = true) {
  if (s.terminal()) throw Error(ErrorCode::SessionOver, std::string(to_string(s.phase)));
  StepResult out;
  if (s.phase == Phase::Exploring) {
    auto spawn = generate_enemy(state, s.character.level, derive_seed(s.seed, 2 * s.room_index), s.p_fetch_percent);
    s.grid = {tempo_for_tier(spawn.enemy.character.level), s.clock_ms};
    s.window_index = 0;
    s.enemy_fetched = spawn.fetched;
    s.battle = BattleState{make_combatant(s.character), spawn.enemy, 0, derive_seed(s.seed, 2 * s.room_index + 1)};
    s.phase = Phase::InBattle;
    out.fetch_attempted = spawn.fetch_attempted;
    if (!record_events) {
      out.session = std::move(s);
      return out;
    }
    Json ev{{"type", "spawn"},
            {"room_index", s.room_index},
            {"enemy", to_json(spawn.enemy)},
            {"schedule", window_schedule(s)},
            {"state_characters", state.characters.size()}};
    ev["fetched_id"] = spawn.fetched ? Json(*spawn.fetched) : Json(nullptr);
    ev["fetch_attempted"] = spawn.fetch_attempted;
    out.events.push_back(std::move(ev));
    out.session = std::move(s);
    return out;
  }

  const Pattern expected = intended_pattern(s.grid, s.window_index, inputs);
  WindowResult judged = judge_window(s.grid, s.window_index, expected, inputs);
  const Action action = decode_action(judged.judged, pressed_pattern(judged.judged, expected));
  BattleState battle = std::move(*s.battle);
  battle.player.stance = stance;
  TurnResult turn = resolve_turn(std::move(battle), action);
  s.tally += judged.delta;

  Json ev;
  if (record_events) {
    ev = Json{{"type", "window"},
              {"room_index", s.room_index},
              {"schedule", window_schedule(s)},
              {"expected", detail::pattern_json(expected)},
              {"action", std::string(to_string(action))},
              {"enemy_negated", turn.log.enemy_negated},
              {"turn", turn.state.turn},
              {"player_health", turn.state.player.current_health},
              {"enemy_health", turn.state.enemy.current_health},
              {"tally", to_json(s.tally)},
              {"inputs", trace_to_json(inputs)}};
    Json judgements = Json::array();
    for (const auto& j : judged.judged) judgements.push_back(to_json(j));
    ev["judgements"] = std::move(judgements);
    ev["player_hit"] = turn.log.player_hit ? to_json(*turn.log.player_hit) : Json(nullptr);
    ev["enemy_hit"] = turn.log.enemy_hit ? to_json(*turn.log.enemy_hit) : Json(nullptr);
    ev["stance"] = stance ? Json(std::string(to_string(*stance))) : Json(nullptr);
  }

  s.clock_ms = detail::ceil_div(s.grid.beat_time(s.grid.first_beat(s.window_index + 1)), 1000);
  ++s.window_index;
  if (!turn.state.enemy.alive()) {
    const int enemy_level = turn.state.enemy.character.level;
    s.character = grant_xp(std::move(s.character), kXpPerEnemyLevel * static_cast<std::uint64_t>(enemy_level));
    s.battle.reset();
    s.enemy_fetched.reset();
    s.phase = Phase::Exploring;
    ++s.room_index;
    if (record_events) ev["xp_gained"] = kXpPerEnemyLevel * static_cast<std::uint64_t>(enemy_level);
  } else if (!turn.state.player.alive()) {
    s.battle = turn.state;
    s.phase = Phase::Dead;
  } else {
    s.battle = turn.state;
  }
  if (record_events) {
    ev["phase"] = std::string(to_string(s.phase));
    ev["level"] = s.character.level;
    out.events.push_back(std::move(ev));
  }
  out.window = std::move(judged);
  out.turn = turn.log;
  out.session = std::move(s);
  return out;
}

/// Skill points are spent between rooms only.
inline DungeonSession allocate_session_point(DungeonSession s, Attribute a) {
  if (s.terminal()) throw Error(ErrorCode::SessionOver);
  if (s.phase != Phase::Exploring) throw Error(ErrorCode::SessionActive, "points are allocated between rooms");
  s.character = allocate_point(std::move(s.character), a);
  return s;
}

inline DungeonSession retire(DungeonSession s) {
  if (s.terminal()) throw Error(ErrorCode::SessionOver);
  s.phase = Phase::Retired;
  s.battle.reset();
  return s;
}

/// The character as it goes on chain: weakness stamped from the tally.
inline Character finished_character(const DungeonSession& s) {
  Character c = s.character;
  c.weakness = weakness_from_tally(s.tally);
  return c;
}

struct UploadIntent {
  DungeonSession session;
  Call call;
};

/// Emits the UploadCharacter call for a finished run. The session is
/// marked uploaded and can never produce another upload.
inline UploadIntent finish_and_upload(DungeonSession s, Game origin = Game::RhythmDungeon) {
  if (!s.terminal()) throw Error(ErrorCode::SessionActive, std::string(to_string(s.phase)));
  if (s.uploaded) throw Error(ErrorCode::SessionOver, "already uploaded");
  Call call = upload_call(finished_character(s), origin);
  s.uploaded = true;
  return {std::move(s), std::move(call)};
}

// --- Last Trip ----------------------------------------------------------------

enum class Choice : std::uint8_t { Train, Fortify, Explore, Rest };

constexpr Attribute attribute_of(Choice c) { return static_cast<Attribute>(static_cast<std::uint8_t>(c)); }

inline constexpr std::size_t kLastTripChapters = 10;
inline constexpr int kLastTripFoeLevel = 4;

enum class TripPhase : std::uint8_t { Choosing, FinalBattle, Won, Lost };

struct LastTripSession {
  Character character;
  std::size_t chapter = 0;
  TripPhase phase = TripPhase::Choosing;
};

struct LastTripOutcome {
  LastTripSession session;
  Character foe;
  std::uint64_t turns = 0;
  std::optional<Call> upload;
};

/// Sets level and unspent points so sum + unspent == 9 + 3(level - 1)
/// holds exactly, using the smallest level that covers the attributes.
inline Character settle_level(Character c) {
  const int earned = c.attribute_sum() - kBaseAttributeSum;
  const int levels = earned <= 0 ? 0 : (earned + kPointsPerLevel - 1) / kPointsPerLevel;
  c.level = 1 + levels;
  c.unspent_skill_points = static_cast<std::uint32_t>(kPointsPerLevel * levels - std::max(earned, 0));
  c.xp = 0;
  return c;
}

inline LastTripOutcome last_trip_run(std::string name, std::uint64_t seed, std::span<const Choice> policy) {
  if (policy.size() != kLastTripChapters)
    throw Error(ErrorCode::BadPolicy, "expected " + std::to_string(kLastTripChapters) + " choices");
  LastTripSession session{create_base(std::move(name)), 0, TripPhase::Choosing};
  for (auto choice : policy) {
    ++session.character.attribute(attribute_of(choice));
    ++session.chapter;
  }
  session.character = settle_level(std::move(session.character));
  session.phase = TripPhase::FinalBattle;

  SplitMix64 rng{seed};
  Character foe = procedural_character("Warden", kLastTripFoeLevel, kAttributes[rng.below(4)]);
  auto result = auto_battle(make_combatant(session.character), make_combatant(foe), rng.next());
  LastTripOutcome out{std::move(session), std::move(foe), result.turns, std::nullopt};
  if (result.winner == Side::A) {
    out.session.phase = TripPhase::Won;
    out.upload = upload_call(out.session.character, Game::LastTrip);
  } else {
    out.session.phase = TripPhase::Lost;
  }
  return out;
}

// --- Adam's Adventure ---------------------------------------------------------

enum class AdventureMode : std::uint8_t { BattleOfAdventure, BattleOfDarkLord, BattleOfBloodMoon };

struct AdventureSession {
  Character character;
  AdventureMode mode = AdventureMode::BattleOfAdventure;
  ChainId chain_id = 0;
};

/// Battle of Adventure completion: Adam grows in the finished character's
/// career attribute, and the character itself goes on chain.
inline std::vector<Call> adventure_completion_calls(const DungeonSession& s, ChainId chain) {
  if (!s.terminal()) throw Error(ErrorCode::SessionActive, std::string(to_string(s.phase)));
  const Character c = finished_character(s);
  return {growth_call(chain, career_attribute(determine_career(c))), upload_call(c, Game::AdamsAdventure)};
}

inline int dark_lord_level(std::uint64_t defeats) { return 5 + static_cast<int>(defeats / 5); }

struct DarkLordOutcome {
  bool victory = false;
  int dark_lord_level = 0;
  CharacterId summoned = 0;
  std::vector<AutoBattleResult> duels;
  std::vector<Call> calls;
  bool blood_moon_triggered = false;
};

/// Adam of `chain` and one Last Trip character fight the Dark Lord in
/// sequence; the Dark Lord's wounds carry over between duels.
inline DarkLordOutcome dark_lord_battle(const GenesisState& state, ChainId chain, std::uint64_t seed) {
  const Character& adam = state.adam_of(chain);
  const std::uint64_t defeats = state.defeats(chain);
  SplitMix64 rng{seed};
  auto summon = read_character_from(state, adam.level, rng.next(), Game::LastTrip);
  if (!summon) summon = nearest_level_record(state, adam.level, Game::LastTrip);
  if (!summon) throw Error(ErrorCode::NoSummon, "no LastTrip character on chain " + std::to_string(chain));

  DarkLordOutcome out;
  out.dark_lord_level = dark_lord_level(defeats);
  out.summoned = summon->id;
  Combatant lord = make_combatant(procedural_character("Dark Lord", out.dark_lord_level, kAttributes[rng.below(4)]));
  for (const Character* member : std::array<const Character*, 2>{&adam, &summon->character}) {
    auto duel = auto_battle(make_combatant(*member), lord, rng.next());
    lord = duel.b;
    out.duels.push_back(std::move(duel));
    if (!lord.alive()) break;
  }
  out.victory = !lord.alive();
  if (out.victory) {
    out.calls.push_back(defeat_call(chain, defeats + 1));
    out.blood_moon_triggered = (defeats + 1) % kBloodMoonPeriod == 0;
  }
  return out;
}

/// Home Adam duels every other chain's Adam in ascending chain order,
/// fully healed before each duel.
inline Call blood_moon(const std::map<ChainId, GenesisState>& states, ChainId home, std::uint64_t seed) {
  auto it = states.find(home);
  if (it == states.end()) throw Error(ErrorCode::UnknownChain, std::to_string(home));
  const GenesisState& home_state = it->second;
  if (pending_blood_moons(home_state, home) == 0) throw Error(ErrorCode::NotTriggered, std::to_string(home));
  BloodMoonPayload p{home, home_state.blood_moons_resolved(home) + 1, {}};
  const Character& champion = home_state.adam_of(home);
  for (const auto& [chain, st] : states) {
    if (chain == home) continue;
    auto r = auto_battle(make_combatant(champion), make_combatant(st.adam_of(chain)), derive_seed(seed, chain));
    p.duels.push_back({chain, r.winner == Side::A ? DuelWinner::Home : DuelWinner::Opponent, r.turns});
  }
  return blood_moon_call(p);
}

}  // namespace rd
