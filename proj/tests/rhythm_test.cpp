#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "rd/rhythm.hpp"
#include "rd/rng.hpp"

namespace rd {
namespace {

std::vector<InputEvent> presses_at(const BeatGrid& g, std::int64_t w, const Pattern& p, Micros dt = 0) {
  std::vector<InputEvent> out;
  for (int i = 0; i < 4; ++i) out.push_back({g.judged_beat_time(w, i) + dt, p[i]});
  return out;
}

TEST(BeatGrid, PeriodAndWindows) {
  const BeatGrid g{120, 0};
  EXPECT_EQ(g.period(), 500'000);
  EXPECT_EQ(g.hit_window(), 125'000);
  EXPECT_EQ(g.outer_window(), 250'000);
  EXPECT_EQ((BeatGrid{80, 0}.hit_window()), 150'000);
  EXPECT_EQ((BeatGrid{70, 0}.period()), 857'142);
  const BeatGrid shifted{100, 1500};
  EXPECT_EQ(shifted.beat_time(0), 1'500'000);
  EXPECT_EQ(shifted.judged_beat_time(2, 0), 1'500'000 + 20 * 600'000);
  EXPECT_EQ(shifted.window_deadline(2), 1'500'000 + 23 * 600'000 + 300'000);
}

TEST(JudgeWindow, PerfectPressesAreHits) {
  const BeatGrid g{120, 0};
  const auto r = judge_window(g, 3, kAttackPattern, presses_at(g, 3, kAttackPattern));
  for (const auto& j : r.judged) {
    EXPECT_EQ(j.outcome, Outcome::Hit);
    EXPECT_EQ(j.offset_us, 0);
  }
  EXPECT_EQ(r.delta.total(), 0u);
  EXPECT_EQ(decode_action(r.judged, pressed_pattern(r.judged, kAttackPattern)), Action::Attack);
}

TEST(JudgeWindow, EmptyTraceIsFourMisses) {
  const auto r = judge_window(BeatGrid{120, 0}, 0, kAttackPattern, {});
  for (const auto& j : r.judged) EXPECT_EQ(j.outcome, Outcome::Miss);
  EXPECT_EQ(r.delta.miss, 4u);
}

TEST(JudgeWindow, LateAtPlus130MsAt120Bpm) {
  const BeatGrid g{120, 0};
  auto trace = presses_at(g, 0, kAttackPattern);
  trace[0].at_us += 130'000;
  const auto r = judge_window(g, 0, kAttackPattern, trace);
  EXPECT_EQ(r.judged[0].outcome, Outcome::Late);
  EXPECT_EQ(r.judged[0].offset_us, 130'000);
  EXPECT_EQ(r.delta.late, 1u);
}

TEST(JudgeWindow, BoundariesAreInclusive) {
  const BeatGrid g{120, 0};
  auto at = [&](Micros dt, Button b) {
    std::vector<InputEvent> t{{g.judged_beat_time(0, 0) + dt, b}};
    return judge_window(g, 0, kAttackPattern, t).judged[0].outcome;
  };
  EXPECT_EQ(at(125'000, Button::L), Outcome::Hit);
  EXPECT_EQ(at(-125'000, Button::L), Outcome::Hit);
  EXPECT_EQ(at(125'001, Button::L), Outcome::Late);
  EXPECT_EQ(at(-125'001, Button::L), Outcome::Early);
  EXPECT_EQ(at(125'000, Button::U), Outcome::WrongButton);
  EXPECT_EQ(at(250'000, Button::L), Outcome::Late);
  EXPECT_EQ(at(-250'000, Button::L), Outcome::Early);
  EXPECT_EQ(at(250'001, Button::L), Outcome::Miss);
}

TEST(JudgeWindow, PressConsumedOnce) {
  const BeatGrid g{120, 0};
  // A single press between two beats can serve only one of them.
  std::vector<InputEvent> t{{g.judged_beat_time(0, 0) + 250'000, Button::L}};
  const auto r = judge_window(g, 0, kAttackPattern, t);
  EXPECT_EQ(r.judged[0].outcome, Outcome::Late);
  EXPECT_EQ(r.judged[1].outcome, Outcome::Miss);
}

TEST(JudgeWindow, MatchesBruteForceOnRandomTraces) {
  SplitMix64 g{2024};
  const int bpms[] = {80, 100, 120, 140, 160, 97};
  for (int n = 0; n < 3000; ++n) {
    const int bpm = bpms[g.below(6)];
    const BeatGrid grid{bpm, static_cast<std::int64_t>(g.below(5000))};
    const std::int64_t w = static_cast<std::int64_t>(g.below(20));
    Pattern expected;
    for (auto& b : expected) b = static_cast<Button>(g.below(4));
    std::vector<InputEvent> trace;
    const auto count = g.below(10);
    const Micros lo = grid.beat_time(grid.first_beat(w) + 3);
    for (std::uint64_t i = 0; i < count; ++i) {
      // Coarse 10 ms lattice makes exact ties common.
      trace.push_back({lo + static_cast<Micros>(g.below(600)) * 10'000, static_cast<Button>(g.below(4))});
    }
    std::sort(trace.begin(), trace.end(), [](auto& a, auto& b) { return a.at_us < b.at_us; });
    const auto got = judge_window(grid, w, expected, trace);
    const auto want = oracle::judge(bpm, grid.origin_ms, w, expected, trace);
    for (int i = 0; i < 4; ++i) {
      ASSERT_EQ(got.judged[i].outcome, want[i].outcome) << "case " << n << " beat " << i;
      ASSERT_EQ(got.judged[i].pressed, want[i].button) << "case " << n << " beat " << i;
    }
  }
}

TEST(JudgeWindow, TranslationInvariance) {
  SplitMix64 g{77};
  for (int n = 0; n < 500; ++n) {
    const BeatGrid grid{120, 0};
    std::vector<InputEvent> trace;
    for (int i = 0; i < 6; ++i)
      trace.push_back({grid.beat_time(3) + static_cast<Micros>(g.below(3'000'000)), static_cast<Button>(g.below(4))});
    std::sort(trace.begin(), trace.end(), [](auto& a, auto& b) { return a.at_us < b.at_us; });
    const std::int64_t delta_ms = static_cast<std::int64_t>(g.below(100'000));
    auto moved = trace;
    for (auto& e : moved) e.at_us += delta_ms * 1000;
    const auto a = judge_window(grid, 0, kDodgePattern, trace);
    const auto b = judge_window(BeatGrid{120, delta_ms}, 0, kDodgePattern, moved);
    EXPECT_EQ(a.judged, b.judged);
  }
}

TEST(DecodeAction, Table) {
  auto all_hits = [](const Pattern& p) {
    Judgement j;
    for (int i = 0; i < 4; ++i) j[i] = {Outcome::Hit, p[i], 0};
    return j;
  };
  EXPECT_EQ(decode_action(all_hits(kAttackPattern), kAttackPattern), Action::Attack);
  EXPECT_EQ(decode_action(all_hits(kDodgePattern), kDodgePattern), Action::Dodge);
  EXPECT_EQ(decode_action(all_hits(kChargePattern), kChargePattern), Action::Charge);
  const Pattern other{Button::R, Button::R, Button::L, Button::L};
  EXPECT_EQ(decode_action(all_hits(other), other), Action::Stumble);
  Judgement late = all_hits(kAttackPattern);
  late[2] = {Outcome::Late, Button::R, 200'000};
  EXPECT_EQ(decode_action(late, kAttackPattern), Action::Stumble);
}

TEST(WeaknessFromTally, Examples) {
  EXPECT_EQ(weakness_from_tally({2, 5, 1, 0}), Weakness::Late);
  EXPECT_EQ(weakness_from_tally({}), Weakness::None);
  EXPECT_EQ(weakness_from_tally({3, 3, 0, 3}), Weakness::Miss);
  EXPECT_EQ(weakness_from_tally({4, 0, 4, 0}), Weakness::Early);
  EXPECT_EQ(weakness_from_tally({0, 0, 1, 0}), Weakness::WrongButton);
}

TEST(WeaknessFromTally, ExhaustiveAgainstOracle) {
  for (std::uint64_t e = 0; e <= 5; ++e)
    for (std::uint64_t l = 0; l <= 5; ++l)
      for (std::uint64_t w = 0; w <= 5; ++w)
        for (std::uint64_t m = 0; m <= 5; ++m)
          ASSERT_EQ(weakness_from_tally({e, l, w, m}), oracle::weakness(e, l, w, m));
}

TEST(Tempo, TiersAndMonotonicity) {
  EXPECT_EQ(tempo_for_tier(1), 80);
  EXPECT_EQ(tempo_for_tier(4), 80);
  EXPECT_EQ(tempo_for_tier(5), 100);
  EXPECT_EQ(tempo_for_tier(40), 160);
  for (int lvl = 1; lvl < 100; ++lvl) EXPECT_LE(tempo_for_tier(lvl), tempo_for_tier(lvl + 1));
}

TEST(TraceJson, RoundTripAndAlternateKey) {
  const std::vector<InputEvent> t{{10, Button::L}, {20, Button::R}};
  EXPECT_EQ(trace_from_json(trace_to_json(t)), t);
  const Json alt = Json::parse(R"([{"at_µs": 5, "button": "U"}])");
  EXPECT_EQ(trace_from_json(alt).front(), (InputEvent{5, Button::U}));
  EXPECT_THROW(trace_from_json(Json::parse(R"([{"at_us": 9, "button": "L"}, {"at_us": 1, "button": "L"}])")), Error);
  EXPECT_THROW(trace_from_json(Json::parse(R"([{"at_us": 9, "button": "X"}])")), Error);
}

}  // namespace
}  // namespace rd
