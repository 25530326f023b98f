#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "rd/canonical.hpp"
#include "rd/games.hpp"
#include "rd/genesis.hpp"
#include "rd/ledger.hpp"
#include "rd/rhythm.hpp"
#include "rd/rng.hpp"

namespace rd {

// --- bot input ----------------------------------------------------------------

/// Bot presses for one window. Each judged beat draws from its own stream,
/// so raising accuracy only turns mistakes into correct presses. A correct
/// press lands uniformly within +-jitter of the target; a mistake is a
/// skip, a wrong button inside the hit window, or the right button pushed
/// out to (w_hit, T/2], each with probability 1/3.
inline std::vector<InputEvent> synth_trace(const BeatGrid& grid, std::int64_t window, const Pattern& intended,
                                           int accuracy_percent, Micros jitter_us, std::uint64_t seed) {
  const Micros hit = grid.hit_window();
  const Micros outer = grid.outer_window();
  const Micros jitter = std::max<Micros>(0, jitter_us);
  auto uniform = [](SplitMix64& g, Micros lo, Micros hi) {
    return lo + static_cast<Micros>(g.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  std::vector<InputEvent> out;
  for (int i = 0; i < kBeatsPerBar; ++i) {
    SplitMix64 g{derive_seed(seed, static_cast<std::uint64_t>(i))};
    const Micros target = grid.judged_beat_time(window, i);
    if (g.below(100) < static_cast<std::uint64_t>(std::clamp(accuracy_percent, 0, 100))) {
      out.push_back({target + uniform(g, -jitter, jitter), intended[i]});
      continue;
    }
    switch (g.below(3)) {
      case 0:
        break;
      case 1: {
        const auto wrong = static_cast<Button>((static_cast<int>(intended[i]) + 1 + static_cast<int>(g.below(3))) % 4);
        const Micros j = std::min(jitter, hit);
        out.push_back({target + uniform(g, -j, j), wrong});
        break;
      }
      default: {
        const Micros magnitude = uniform(g, hit + 1, std::max(hit + 1, outer));
        out.push_back({g.below(2) == 0 ? target - magnitude : target + magnitude, intended[i]});
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.at_us < b.at_us; });
  return out;
}

/// Charges when a charged hit beats two plain ones, then attacks.
inline Action bot_action(const BattleState& b) {
  if (b.player.charged) return Action::Attack;
  const int plain = std::max(1, b.player.character.strength - b.enemy.character.armor);
  const int charged = std::max(1, 2 * b.player.character.strength - b.enemy.character.armor);
  return charged > 2 * plain ? Action::Charge : Action::Attack;
}

/// Spends all points on the career attribute, falling back along career
/// order when an attribute is capped.
inline Character bot_allocate(Character c) {
  while (c.unspent_skill_points > 0) {
    const auto first = static_cast<std::size_t>(career_attribute(determine_career(c)));
    bool spent = false;
    for (std::size_t k = 0; k < kAttributes.size() && !spent; ++k) {
      const Attribute a = kAttributes[(first + k) % kAttributes.size()];
      if (c.attribute(a) < kMaxAttribute) {
        c = allocate_point(std::move(c), a);
        spent = true;
      }
    }
    if (!spent) break;
  }
  return c;
}

inline constexpr std::uint64_t kBotRoomCap = 8;
inline constexpr std::int64_t kBotWindowCap = 4000;

struct BotRunStats {
  std::uint64_t fetch_attempts = 0;
  std::uint64_t fetch_hits = 0;
  std::uint64_t windows = 0;
};

/// Plays a dungeon session to the end with a bot: dies, or retires after
/// kBotRoomCap rooms.
inline DungeonSession run_bot_dungeon(DungeonSession s, const GenesisState& state, int accuracy_percent,
                                      Micros jitter_us, BotRunStats* stats = nullptr) {
  while (!s.terminal()) {
    if (s.phase == Phase::Exploring) {
      if (s.room_index >= kBotRoomCap || s.window_index >= kBotWindowCap) {
        s = retire(std::move(s));
        break;
      }
      s.character = bot_allocate(std::move(s.character));
      auto r = step_dungeon(std::move(s), state, {}, std::nullopt, false);
      s = std::move(r.session);
      if (stats) {
        stats->fetch_attempts += r.fetch_attempted;
        stats->fetch_hits += s.enemy_fetched.has_value();
      }
      continue;
    }
    if (s.window_index >= kBotWindowCap) {
      s = retire(std::move(s));
      break;
    }
    const Action action = bot_action(*s.battle);
    const Weakness target = s.battle->enemy.character.weakness;
    const std::optional<Weakness> stance = target == Weakness::None ? std::nullopt : std::optional(target);
    const auto seed = derive_seed(s.seed, 0x10000 + (s.room_index << 20) + static_cast<std::uint64_t>(s.window_index));
    auto trace = synth_trace(s.grid, s.window_index, pattern_of(action), accuracy_percent, jitter_us, seed);
    s = step_dungeon(std::move(s), state, trace, stance, false).session;
    if (stats) ++stats->windows;
  }
  return s;
}

// --- scenarios ----------------------------------------------------------------

struct Scenario {
  std::uint64_t chains = 1;
  std::uint64_t players = 1;
  std::uint64_t sessions_per_player = 1;
  int bot_accuracy_percent = 90;
  Micros bot_jitter_us = 20'000;
  int p_fetch_percent = 50;
  std::uint64_t master_seed = 0;
};

inline void validate(const Scenario& s) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, m); };
  if (s.chains < 1) fail("chains must be >= 1");
  if (s.players < 1) fail("players must be >= 1");
  if (s.sessions_per_player < 1) fail("sessions_per_player must be >= 1");
  if (s.bot_accuracy_percent < 0 || s.bot_accuracy_percent > 100) fail("bot_accuracy_percent must be 0..100");
  if (s.p_fetch_percent < 0 || s.p_fetch_percent > 100) fail("p_fetch_percent must be 0..100");
  if (s.bot_jitter_us < 0) fail("bot_jitter_us must be >= 0");
}

/// TOML with exactly the Scenario fields, all integers.
inline Scenario scenario_from_toml(std::string_view text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string(e.description()));
  }
  static constexpr std::array<std::string_view, 7> kKeys = {
      "chains", "players", "sessions_per_player", "bot_accuracy_percent", "bot_jitter_us", "p_fetch_percent",
      "master_seed"};
  for (const auto& [key, _] : t)
    if (std::find(kKeys.begin(), kKeys.end(), key.str()) == kKeys.end())
      throw Error(ErrorCode::ConfigInvalid, "unknown key " + std::string(key.str()));
  auto get = [&](std::string_view key) -> std::int64_t {
    auto v = t[key].value<std::int64_t>();
    if (!v || !t[key].is_integer()) throw Error(ErrorCode::ConfigInvalid, "missing or non-integer " + std::string(key));
    return *v;
  };
  auto count = [&](std::string_view key) -> std::uint64_t {
    auto v = get(key);
    if (v < 1) throw Error(ErrorCode::ConfigInvalid, std::string(key) + " must be >= 1");
    return static_cast<std::uint64_t>(v);
  };
  auto percent = [&](std::string_view key) -> int {
    auto v = get(key);
    if (v < 0 || v > 100) throw Error(ErrorCode::ConfigInvalid, std::string(key) + " must be 0..100");
    return static_cast<int>(v);
  };
  Scenario s;
  s.chains = count("chains");
  s.players = count("players");
  s.sessions_per_player = count("sessions_per_player");
  s.bot_accuracy_percent = percent("bot_accuracy_percent");
  s.bot_jitter_us = get("bot_jitter_us");
  s.p_fetch_percent = percent("p_fetch_percent");
  // master_seed is a 64-bit value; TOML integers are signed, so negative
  // values are taken as their two's-complement bit pattern.
  s.master_seed = static_cast<std::uint64_t>(get("master_seed"));
  validate(s);
  return s;
}

/// Everything here is recomputable from the chains alone.
struct LedgerMetrics {
  std::map<Game, std::uint64_t> uploads;
  std::uint64_t rejected = 0;
  std::map<ChainId, std::uint64_t> dark_lord_defeats;
  std::map<ChainId, std::uint64_t> blood_moons;
  std::map<ChainId, int> adam_levels;
  std::map<Weakness, std::uint64_t> weakness_histogram;
  std::uint64_t transactions = 0;
  bool operator==(const LedgerMetrics&) const = default;
};

/// Session-side observations that never reach the ledger.
struct Telemetry {
  std::uint64_t sessions = 0;
  std::uint64_t fetch_attempts = 0;
  std::uint64_t fetch_hits = 0;
  std::uint64_t rooms_cleared = 0;
  std::uint64_t last_trip_wins = 0;
  std::uint64_t dark_lord_attempts = 0;
  MistakeTally mistakes;
};

struct Metrics {
  LedgerMetrics ledger;
  Telemetry telemetry;
};

namespace detail {

inline LedgerMetrics empty_metrics() {
  LedgerMetrics m;
  for (auto g : kGames) m.uploads[g] = 0;
  for (auto w : {Weakness::Early, Weakness::Late, Weakness::WrongButton, Weakness::Miss, Weakness::None})
    m.weakness_histogram[w] = 0;
  return m;
}

inline void add_chain_state(LedgerMetrics& m, ChainId chain, const GenesisState& s) {
  for (const auto& r : s.characters) {
    ++m.uploads[r.origin];
    ++m.weakness_histogram[r.character.weakness];
  }
  m.rejected += s.rejected.size();
  m.dark_lord_defeats[chain] = s.defeats(chain);
  m.blood_moons[chain] = s.blood_moons_resolved(chain);
  m.adam_levels[chain] = s.adam_of(chain).level;
}

}  // namespace detail

/// Recounts every ledger metric by replaying `chains` from scratch.
inline LedgerMetrics ledger_metrics(const std::vector<Chain>& chains) {
  LedgerMetrics m = detail::empty_metrics();
  for (const auto& chain : chains) {
    detail::add_chain_state(m, chain.chain_id(), replay(chain));
    m.transactions += chain.transaction_count();
  }
  return m;
}

inline Json to_json(const LedgerMetrics& m) {
  Json uploads = Json::object();
  for (auto [g, n] : m.uploads) uploads[std::string(to_string(g))] = n;
  Json hist = Json::object();
  for (auto [w, n] : m.weakness_histogram) hist[std::string(to_string(w))] = n;
  Json per_chain = Json::array();
  for (auto [chain, n] : m.dark_lord_defeats)
    per_chain.push_back(Json{{"chain_id", chain},
                             {"dark_lord_defeats", n},
                             {"blood_moons", m.blood_moons.at(chain)},
                             {"adam_level", m.adam_levels.at(chain)}});
  return Json{{"uploads", std::move(uploads)},
              {"rejected", m.rejected},
              {"weakness_histogram", std::move(hist)},
              {"chains", std::move(per_chain)},
              {"transactions", m.transactions}};
}

inline Json to_json(const Metrics& m) {
  const auto& t = m.telemetry;
  return Json{{"ledger", to_json(m.ledger)},
              {"telemetry",
               Json{{"sessions", t.sessions},
                    {"fetch_attempts", t.fetch_attempts},
                    {"fetch_hits", t.fetch_hits},
                    {"fetch_hit_permille", t.fetch_attempts == 0 ? 0 : t.fetch_hits * 1000 / t.fetch_attempts},
                    {"rooms_cleared", t.rooms_cleared},
                    {"last_trip_wins", t.last_trip_wins},
                    {"dark_lord_attempts", t.dark_lord_attempts},
                    {"mistakes", to_json(t.mistakes)}}}};
}

struct ScenarioResult {
  std::vector<Chain> chains;
  Metrics metrics;
};

inline constexpr std::uint64_t kScenarioEpochMs = 1'700'000'000'000;

namespace detail {

/// Single ordered writer for all chains of a scenario: stamps nonces,
/// appends blocks on a logical clock and keeps contract state in step.
class ScenarioLedger {
 public:
  explicit ScenarioLedger(std::uint64_t chain_count) {
    for (ChainId c = 0; c < chain_count; ++c) {
      chains_.emplace_back(c);
      states_.emplace(c, GenesisState::for_chains({c}));
    }
  }

  const GenesisState& state(ChainId c) const { return states_.at(c); }
  const std::map<ChainId, GenesisState>& states() const { return states_; }

  void submit(ChainId c, const std::string& submitter, std::vector<Call> calls) {
    if (calls.empty()) return;
    std::vector<Transaction> txs;
    for (auto& call : calls) txs.push_back(sign(std::move(call), submitter, next_nonce_[{submitter, c}]++));
    chains_[c] = append_block(std::move(chains_[c]), txs, kScenarioEpochMs + 1000 * tick_++);
    const std::uint64_t height = chains_[c].tip().height;
    GenesisState& s = states_.at(c);
    for (const auto& tx : txs) s = apply_transaction(std::move(s), tx, height);
  }

  std::vector<Chain> take_chains() { return std::move(chains_); }

 private:
  std::vector<Chain> chains_;
  std::map<ChainId, GenesisState> states_;
  std::map<std::pair<std::string, ChainId>, std::uint64_t> next_nonce_;
  std::uint64_t tick_ = 0;
};

inline void count_session(Telemetry& t, const DungeonSession& s) {
  ++t.sessions;
  t.rooms_cleared += s.room_index;
  t.mistakes += s.tally;
}

}  // namespace detail

/// Deterministic multi-chain simulation. Player p plays game p mod 3 on
/// chain p mod chains; rounds run session-major, player-minor, so ledger
/// order is fixed by (session, player) alone.
inline ScenarioResult run_scenario(const Scenario& sc) {
  validate(sc);
  detail::ScenarioLedger ledger(sc.chains);
  Telemetry t;

  auto play_dungeon = [&](std::string name, ChainId c, std::uint64_t seed) {
    BotRunStats stats;
    DungeonSession s = run_bot_dungeon(start_dungeon(std::move(name), seed, sc.p_fetch_percent), ledger.state(c),
                                       sc.bot_accuracy_percent, sc.bot_jitter_us, &stats);
    t.fetch_attempts += stats.fetch_attempts;
    t.fetch_hits += stats.fetch_hits;
    detail::count_session(t, s);
    return s;
  };

  for (std::uint64_t session = 0; session < sc.sessions_per_player; ++session) {
    for (std::uint64_t p = 0; p < sc.players; ++p) {
      const ChainId c = p % sc.chains;
      const Game game = kGames[p % kGames.size()];
      const std::string submitter = "player-" + std::to_string(p);
      const std::string name = "P" + std::to_string(p) + "S" + std::to_string(session);
      const std::uint64_t seed = derive_seed(derive_seed(sc.master_seed, p), session);
      switch (game) {
        case Game::RhythmDungeon: {
          DungeonSession s = play_dungeon(name, c, seed);
          ledger.submit(c, submitter, {finish_and_upload(std::move(s)).call});
          break;
        }
        case Game::LastTrip: {
          SplitMix64 g{derive_seed(seed, 1)};
          std::array<Choice, kLastTripChapters> policy{};
          for (auto& choice : policy) choice = static_cast<Choice>(g.below(4));
          auto run = last_trip_run(name, derive_seed(seed, 2), policy);
          ++t.sessions;
          if (run.upload) {
            ++t.last_trip_wins;
            ledger.submit(c, submitter, {*run.upload});
          }
          break;
        }
        case Game::AdamsAdventure: {
          DungeonSession s = play_dungeon(name, c, seed);
          ledger.submit(c, submitter, adventure_completion_calls(s, c));
          const GenesisState& st = ledger.state(c);
          if (!nearest_level_record(st, 1, Game::LastTrip)) break;
          ++t.dark_lord_attempts;
          auto lord = dark_lord_battle(st, c, derive_seed(seed, 3));
          ledger.submit(c, submitter, std::move(lord.calls));
          while (pending_blood_moons(ledger.state(c), c) > 0)
            ledger.submit(c, submitter, {blood_moon(ledger.states(), c, derive_seed(seed, 4))});
          break;
        }
      }
    }
  }

  LedgerMetrics counted = detail::empty_metrics();
  for (const auto& [c, st] : ledger.states()) detail::add_chain_state(counted, c, st);
  ScenarioResult out{ledger.take_chains(), {std::move(counted), t}};
  for (const auto& chain : out.chains) {
    out.metrics.ledger.transactions += chain.transaction_count();
    if (!verify_chain(chain)) throw std::logic_error("scenario produced an invalid chain");
  }
  return out;
}

/// Writes chain_<id>.ndjson per chain and metrics.json into `dir`.
inline void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioResult& r) {
  std::filesystem::create_directories(dir);
  for (const auto& chain : r.chains) save_chain(dir, chain);
  write_file(dir / "metrics.json", to_json(r.metrics).dump(2) + "\n");
}

}  // namespace rd
