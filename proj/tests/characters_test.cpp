#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rd/characters.hpp"
#include "rd/rng.hpp"

namespace rd {
namespace {

TEST(CreateBase, DefinitionalValues) {
  const Character c = create_base("hero");
  EXPECT_EQ(c.level, 1);
  EXPECT_EQ(c.xp, 0u);
  EXPECT_EQ(c.strength, 3);
  EXPECT_EQ(c.armor, 2);
  EXPECT_EQ(c.luck, 2);
  EXPECT_EQ(c.vitality, 2);
  EXPECT_EQ(c.attribute_sum(), 9);
  EXPECT_EQ(c.max_health(), 30);
  EXPECT_EQ(c.unspent_skill_points, 0u);
  EXPECT_EQ(c.weakness, Weakness::None);
  EXPECT_EQ(determine_career(c), Career::Warrior);
  EXPECT_TRUE(validate_character(c));
}

TEST(CreateBase, RejectsBadNames) {
  EXPECT_THROW(create_base(""), Error);
  EXPECT_THROW(create_base(std::string(25, 'a')), Error);
  EXPECT_THROW(create_base("tab\tname"), Error);
  EXPECT_NO_THROW(create_base(std::string(24, 'a')));
  try {
    create_base("");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadName);
  }
}

TEST(GrantXp, ThresholdsFollowFiftyPerLevel) {
  const Character base = create_base("hero");
  Character c = grant_xp(base, 50);
  EXPECT_EQ(c.level, 2);
  EXPECT_EQ(c.xp, 0u);
  EXPECT_EQ(c.unspent_skill_points, 3u);

  c = grant_xp(base, 49);
  EXPECT_EQ(c.level, 1);
  EXPECT_EQ(c.xp, 49u);

  // 150 - 50 = 100 at level 2, 100 - 100 = 0 at level 3.
  c = grant_xp(base, 150);
  EXPECT_EQ(c.level, 3);
  EXPECT_EQ(c.xp, 0u);
  EXPECT_EQ(c.unspent_skill_points, 6u);
}

TEST(GrantXp, SaturatesAtLevelCap) {
  Character c = grant_xp(create_base("hero"), 1'000'000'000ULL);
  EXPECT_EQ(c.level, kMaxLevel);
  EXPECT_EQ(c.xp, kXpCeiling);
  EXPECT_EQ(c.unspent_skill_points, 3u * (kMaxLevel - 1));
  EXPECT_TRUE(validate_character(c));
  EXPECT_EQ(grant_xp(c, 12345), c);
}

TEST(GrantXp, AssociativeInTotalAmount) {
  SplitMix64 g{11};
  for (int i = 0; i < 2000; ++i) {
    const auto a = g.below(3000), b = g.below(3000);
    Character start = grant_xp(create_base("x"), g.below(500));
    EXPECT_EQ(grant_xp(start, a + b), grant_xp(grant_xp(start, a), b)) << a << "+" << b;
  }
}

TEST(AllocatePoint, SpendsAndRecomputesCareer) {
  Character c = grant_xp(create_base("hero"), 50);
  c = allocate_point(c, Attribute::Strength);
  EXPECT_EQ(c.strength, 4);
  EXPECT_EQ(c.unspent_skill_points, 2u);
  EXPECT_EQ(determine_career(c), Career::Warrior);

  Character v = create_base("hero");
  v.unspent_skill_points = 1;
  v = allocate_point(v, Attribute::Vitality);
  EXPECT_EQ(v.max_health(), 35);
}

TEST(AllocatePoint, Errors) {
  try {
    allocate_point(create_base("hero"), Attribute::Luck);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPoints);
  }
  Character c = create_base("hero");
  c.luck = kMaxAttribute;
  c.unspent_skill_points = 1;
  try {
    allocate_point(c, Attribute::Luck);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AttributeCap);
  }
}

Character with_attributes(int s, int a, int l, int v) {
  Character c = create_base("c");
  c.strength = s;
  c.armor = a;
  c.luck = l;
  c.vitality = v;
  return c;
}

TEST(DetermineCareer, ArgmaxWithListedTieOrder) {
  EXPECT_EQ(determine_career(with_attributes(3, 2, 2, 2)), Career::Warrior);
  EXPECT_EQ(determine_career(with_attributes(5, 5, 3, 3)), Career::Warrior);
  EXPECT_EQ(determine_career(with_attributes(3, 4, 9, 5)), Career::Gambler);
  EXPECT_EQ(determine_career(with_attributes(1, 4, 4, 4)), Career::Guardian);
  EXPECT_EQ(determine_career(with_attributes(1, 1, 1, 7)), Career::Survivor);
}

TEST(DetermineCareer, InvariantUnderUniformShift) {
  SplitMix64 g{5};
  for (int i = 0; i < 5000; ++i) {
    auto r = [&] { return 1 + static_cast<int>(g.below(40)); };
    const Character c = with_attributes(r(), r(), r(), r());
    const int k = static_cast<int>(g.below(30));
    EXPECT_EQ(determine_career(c), determine_career(with_attributes(c.strength + k, c.armor + k, c.luck + k, c.vitality + k)));
  }
}

TEST(ValidateCharacter, NamedExamples) {
  Character c = create_base("hero");
  c.level = 2;
  auto v = validate_character(c);
  ASSERT_FALSE(v);
  EXPECT_EQ(*v.violated, Rule::AttributeBudget);

  Character lucky = create_base("hero");
  lucky.luck = 51;
  EXPECT_EQ(*validate_character(lucky).violated, Rule::AttributeRange);

  Character lvl = create_base("hero");
  lvl.level = 21;
  EXPECT_EQ(*validate_character(lvl).violated, Rule::Level);

  Character w = create_base("hero");
  w.weakness = static_cast<Weakness>(9);
  EXPECT_EQ(*validate_character(w).violated, Rule::Weakness);

  Character n = create_base("hero");
  n.name = "bad\x01";
  EXPECT_EQ(*validate_character(n).violated, Rule::Name);
}

TEST(ValidateCharacter, BudgetIdentityPreservedByAnyOperationSequence) {
  SplitMix64 g{99};
  for (int run = 0; run < 300; ++run) {
    Character c = create_base("walker");
    for (int step = 0; step < 60; ++step) {
      if (g.below(2) == 0) {
        c = grant_xp(c, g.below(120));
      } else if (c.unspent_skill_points > 0) {
        const Attribute a = kAttributes[g.below(4)];
        if (c.attribute(a) < kMaxAttribute) c = allocate_point(c, a);
      }
      ASSERT_TRUE(validate_character(c)) << to_string(*validate_character(c).violated);
      ASSERT_EQ(oracle::violated_rule(c), "");
    }
  }
}

TEST(CharacterJson, RoundTripAndStrictShape) {
  Character c = grant_xp(create_base("Round Trip"), 170);
  c = allocate_point(c, Attribute::Luck);
  c.weakness = Weakness::Late;
  const Json j = to_json(c);
  EXPECT_EQ(character_from_json(j), c);
  EXPECT_FALSE(j.contains("max_health"));
  EXPECT_EQ(j.at("career"), "Warrior");

  Json wrong_career = j;
  wrong_career["career"] = "Gambler";
  EXPECT_THROW(character_from_json(wrong_career), Error);
  Json negative_xp = j;
  negative_xp["xp"] = -1;
  EXPECT_THROW(character_from_json(negative_xp), Error);
  Json extra = j;
  extra["hp"] = 3;
  EXPECT_THROW(character_from_json(extra), Error);
}

}  // namespace
}  // namespace rd
