#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rd/canonical.hpp"
#include "rd/characters.hpp"

namespace rd {

using Micros = std::int64_t;

inline constexpr int kBeatsPerBar = 4;
inline constexpr int kBarsPerAction = 2;
inline constexpr int kBeatsPerWindow = kBeatsPerBar * kBarsPerAction;
inline constexpr Micros kMaxHitWindow = 150'000;

enum class Button : std::uint8_t { L, D, U, R };
using Pattern = std::array<Button, kBeatsPerBar>;

constexpr std::string_view to_string(Button b) {
  switch (b) {
    case Button::L: return "L";
    case Button::D: return "D";
    case Button::U: return "U";
    case Button::R: return "R";
  }
  return "?";
}

inline std::optional<Button> button_from_string(std::string_view s) {
  for (auto b : {Button::L, Button::D, Button::U, Button::R})
    if (to_string(b) == s) return b;
  return std::nullopt;
}

/// Timing lattice: 4 beats per bar, 2 bars per action window. The first bar
/// of a window is the cue bar; the four presses land on the second bar.
struct BeatGrid {
  int bpm = 120;
  std::int64_t origin_ms = 0;

  Micros period() const { return 60'000'000 / bpm; }
  Micros hit_window() const { return std::min(kMaxHitWindow, period() / 4); }
  Micros outer_window() const { return period() / 2; }
  Micros beat_time(std::int64_t k) const { return origin_ms * 1000 + k * period(); }
  std::int64_t first_beat(std::int64_t window) const { return window * kBeatsPerWindow; }
  /// Target of the i-th judged press (0..3) in a window.
  Micros judged_beat_time(std::int64_t window, int i) const {
    return beat_time(first_beat(window) + kBeatsPerBar + i);
  }
  /// Inputs at or after this instant can no longer affect the window.
  Micros window_deadline(std::int64_t window) const {
    return judged_beat_time(window, kBeatsPerBar - 1) + outer_window();
  }

  bool operator==(const BeatGrid&) const = default;
};

struct InputEvent {
  Micros at_us = 0;
  Button button = Button::L;
  bool operator==(const InputEvent&) const = default;
};

enum class Outcome : std::uint8_t { Hit, Early, Late, WrongButton, Miss };

constexpr std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Hit: return "Hit";
    case Outcome::Early: return "Early";
    case Outcome::Late: return "Late";
    case Outcome::WrongButton: return "WrongButton";
    case Outcome::Miss: return "Miss";
  }
  return "?";
}

struct BeatJudgement {
  Outcome outcome = Outcome::Miss;
  std::optional<Button> pressed;  // set whenever a press was matched
  Micros offset_us = 0;           // press time minus target; 0 for Miss
  bool operator==(const BeatJudgement&) const = default;
};

using Judgement = std::array<BeatJudgement, kBeatsPerBar>;

struct MistakeTally {
  std::uint64_t early = 0;
  std::uint64_t late = 0;
  std::uint64_t wrong_button = 0;
  std::uint64_t miss = 0;

  MistakeTally& operator+=(const MistakeTally& o) {
    early += o.early;
    late += o.late;
    wrong_button += o.wrong_button;
    miss += o.miss;
    return *this;
  }
  std::uint64_t total() const { return early + late + wrong_button + miss; }
  bool operator==(const MistakeTally&) const = default;
};

inline MistakeTally tally_of(const Judgement& judged) {
  MistakeTally t;
  for (const auto& j : judged) {
    switch (j.outcome) {
      case Outcome::Early: ++t.early; break;
      case Outcome::Late: ++t.late; break;
      case Outcome::WrongButton: ++t.wrong_button; break;
      case Outcome::Miss: ++t.miss; break;
      case Outcome::Hit: break;
    }
  }
  return t;
}

struct WindowResult {
  Judgement judged;
  MistakeTally delta;
};

namespace detail {

inline BeatJudgement classify(Micros dt, Button pressed, Button expected, Micros hit) {
  if (dt >= -hit && dt <= hit)
    return {pressed == expected ? Outcome::Hit : Outcome::WrongButton, pressed, dt};
  return {dt < 0 ? Outcome::Early : Outcome::Late, pressed, dt};
}

}  // namespace detail

/// Judges the four presses of one action window against `expected`.
/// For each judged beat in order, the unconsumed press with the smallest
/// |dt| inside +-T/2 is taken (earlier press on ties). Presses elsewhere
/// in the trace are ignored. `trace` must be sorted by time.
inline WindowResult judge_window(const BeatGrid& grid, std::int64_t window, const Pattern& expected,
                                 std::span<const InputEvent> trace) {
  const Micros outer = grid.outer_window();
  const Micros hit = grid.hit_window();
  std::vector<bool> consumed(trace.size(), false);
  WindowResult result;
  for (int i = 0; i < kBeatsPerBar; ++i) {
    const Micros target = grid.judged_beat_time(window, i);
    auto lo = std::lower_bound(trace.begin(), trace.end(), target - outer,
                               [](const InputEvent& e, Micros t) { return e.at_us < t; });
    std::optional<std::size_t> best;
    Micros best_abs = 0;
    for (auto it = lo; it != trace.end() && it->at_us <= target + outer; ++it) {
      auto idx = static_cast<std::size_t>(it - trace.begin());
      if (consumed[idx]) continue;
      Micros d = it->at_us - target;
      Micros a = d < 0 ? -d : d;
      if (!best || a < best_abs) {
        best = idx;
        best_abs = a;
      }
    }
    if (!best) {
      result.judged[i] = {};
      continue;
    }
    consumed[*best] = true;
    result.judged[i] = detail::classify(trace[*best].at_us - target, trace[*best].button, expected[i], hit);
  }
  result.delta = tally_of(result.judged);
  return result;
}

enum class Action : std::uint8_t { Attack, Dodge, Charge, Stumble };

constexpr std::string_view to_string(Action a) {
  switch (a) {
    case Action::Attack: return "Attack";
    case Action::Dodge: return "Dodge";
    case Action::Charge: return "Charge";
    case Action::Stumble: return "Stumble";
  }
  return "?";
}

inline constexpr Pattern kAttackPattern = {Button::L, Button::L, Button::R, Button::R};
inline constexpr Pattern kDodgePattern = {Button::U, Button::D, Button::U, Button::D};
inline constexpr Pattern kChargePattern = {Button::D, Button::D, Button::D, Button::D};

constexpr Pattern pattern_of(Action a) {
  switch (a) {
    case Action::Dodge: return kDodgePattern;
    case Action::Charge: return kChargePattern;
    default: return kAttackPattern;
  }
}

inline Action decode_action(const Judgement& judged, const Pattern& pressed) {
  for (const auto& j : judged)
    if (j.outcome != Outcome::Hit) return Action::Stumble;
  if (pressed == kAttackPattern) return Action::Attack;
  if (pressed == kDodgePattern) return Action::Dodge;
  if (pressed == kChargePattern) return Action::Charge;
  return Action::Stumble;
}

/// Buttons actually matched in a judgement; unmatched beats fall back to
/// `fallback` (only relevant when some beat is not a Hit).
inline Pattern pressed_pattern(const Judgement& judged, const Pattern& fallback) {
  Pattern p = fallback;
  for (int i = 0; i < kBeatsPerBar; ++i)
    if (judged[i].pressed) p[i] = *judged[i].pressed;
  return p;
}

/// Most frequent mistake; ties Miss > Late > Early > WrongButton.
inline Weakness weakness_from_tally(const MistakeTally& t) {
  const std::array<std::pair<Weakness, std::uint64_t>, 4> ranked = {
      {{Weakness::Miss, t.miss}, {Weakness::Late, t.late}, {Weakness::Early, t.early},
       {Weakness::WrongButton, t.wrong_button}}};
  Weakness best = Weakness::None;
  std::uint64_t best_count = 0;
  for (auto [w, n] : ranked) {
    if (n > best_count) {
      best = w;
      best_count = n;
    }
  }
  return best;
}

inline int tempo_tier(int enemy_level) { return std::min(5, 1 + (std::max(enemy_level, 1) - 1) / 4); }
inline int tempo_for_tier(int enemy_level) { return 60 + 20 * tempo_tier(enemy_level); }

// --- trace files ----------------------------------------------------------

inline Json to_json(const InputEvent& e) { return Json{{"at_us", e.at_us}, {"button", std::string(to_string(e.button))}}; }

/// Accepts both "at_us" and "at_µs" as the timestamp key.
inline InputEvent input_event_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Malformed, "input event must be an object");
  auto it = j.find("at_us");
  if (it == j.end()) it = j.find("at_\xc2\xb5s");
  if (it == j.end() || !it->is_number_integer()) throw Error(ErrorCode::Malformed, "input event needs integer at_us");
  auto b = j.find("button");
  if (b == j.end() || !b->is_string()) throw Error(ErrorCode::Malformed, "input event needs button");
  auto button = button_from_string(b->get_ref<const std::string&>());
  if (!button) throw Error(ErrorCode::Malformed, "unknown button");
  return {it->get<Micros>(), *button};
}

inline std::vector<InputEvent> trace_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Malformed, "trace must be a JSON array");
  std::vector<InputEvent> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(input_event_from_json(e));
  if (!std::is_sorted(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.at_us < b.at_us; }))
    throw Error(ErrorCode::Malformed, "trace must be sorted by time");
  return out;
}

inline Json trace_to_json(std::span<const InputEvent> trace) {
  Json arr = Json::array();
  for (const auto& e : trace) arr.push_back(to_json(e));
  return arr;
}

inline Json to_json(const BeatJudgement& j) {
  Json out{{"outcome", std::string(to_string(j.outcome))}, {"offset_us", j.offset_us}};
  out["button"] = j.pressed ? Json(std::string(to_string(*j.pressed))) : Json(nullptr);
  return out;
}

inline Json to_json(const MistakeTally& t) {
  return Json{{"early", t.early}, {"late", t.late}, {"wrong_button", t.wrong_button}, {"miss", t.miss}};
}

}  // namespace rd
