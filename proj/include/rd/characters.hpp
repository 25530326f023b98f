#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rd/canonical.hpp"
#include "rd/error.hpp"

namespace rd {

enum class Attribute : std::uint8_t { Strength, Armor, Luck, Vitality };
inline constexpr std::array<Attribute, 4> kAttributes = {Attribute::Strength, Attribute::Armor,
                                                         Attribute::Luck, Attribute::Vitality};

enum class Career : std::uint8_t { Warrior, Guardian, Gambler, Survivor };

// Weakness is also the tag space for attack stances. Values outside the
// enumerators can be produced by decoding or fuzzing; validation rejects them.
enum class Weakness : std::uint8_t { Early, Late, WrongButton, Miss, None };

inline constexpr int kBaseAttributeSum = 9;
inline constexpr int kPointsPerLevel = 3;
inline constexpr int kMaxLevel = 20;
inline constexpr int kMinAttribute = 1;
inline constexpr int kMaxAttribute = 50;
inline constexpr std::size_t kMaxNameLength = 24;
inline constexpr std::uint32_t kXpPerLevelStep = 50;
// xp saturates here once the level cap is reached
inline constexpr std::uint32_t kXpCeiling = kXpPerLevelStep * kMaxLevel - 1;

constexpr std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Strength: return "strength";
    case Attribute::Armor: return "armor";
    case Attribute::Luck: return "luck";
    case Attribute::Vitality: return "vitality";
  }
  return "?";
}

constexpr std::string_view to_string(Career c) {
  switch (c) {
    case Career::Warrior: return "Warrior";
    case Career::Guardian: return "Guardian";
    case Career::Gambler: return "Gambler";
    case Career::Survivor: return "Survivor";
  }
  return "?";
}

constexpr std::string_view to_string(Weakness w) {
  switch (w) {
    case Weakness::Early: return "Early";
    case Weakness::Late: return "Late";
    case Weakness::WrongButton: return "WrongButton";
    case Weakness::Miss: return "Miss";
    case Weakness::None: return "None";
  }
  return "?";
}

constexpr bool is_known(Weakness w) { return static_cast<std::uint8_t>(w) <= static_cast<std::uint8_t>(Weakness::None); }

inline std::optional<Attribute> attribute_from_string(std::string_view s) {
  for (auto a : kAttributes)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

inline std::optional<Weakness> weakness_from_string(std::string_view s) {
  for (auto w : {Weakness::Early, Weakness::Late, Weakness::WrongButton, Weakness::Miss, Weakness::None})
    if (to_string(w) == s) return w;
  return std::nullopt;
}

struct Character {
  std::string name;
  int level = 1;
  std::uint32_t xp = 0;
  int strength = 3;
  int armor = 2;
  int luck = 2;
  int vitality = 2;
  Weakness weakness = Weakness::None;
  std::uint32_t unspent_skill_points = 0;

  int max_health() const { return 20 + 5 * vitality; }
  int attribute_sum() const { return strength + armor + luck + vitality; }

  int& attribute(Attribute a) {
    switch (a) {
      case Attribute::Strength: return strength;
      case Attribute::Armor: return armor;
      case Attribute::Luck: return luck;
      case Attribute::Vitality: return vitality;
    }
    return strength;
  }
  int attribute(Attribute a) const { return const_cast<Character&>(*this).attribute(a); }

  bool operator==(const Character&) const = default;
};

/// Argmax over (strength, armor, luck, vitality); ties go to the earlier one.
inline Career determine_career(const Character& c) {
  Career best = Career::Warrior;
  int best_value = c.strength;
  const std::array<std::pair<Career, int>, 3> rest = {
      {{Career::Guardian, c.armor}, {Career::Gambler, c.luck}, {Career::Survivor, c.vitality}}};
  for (auto [career, value] : rest) {
    if (value > best_value) {
      best = career;
      best_value = value;
    }
  }
  return best;
}

constexpr Attribute career_attribute(Career c) { return static_cast<Attribute>(static_cast<std::uint8_t>(c)); }

inline bool is_valid_name(std::string_view name) {
  if (name.empty() || name.size() > kMaxNameLength) return false;
  for (unsigned char ch : name)
    if (ch < 0x20 || ch > 0x7e) return false;
  return true;
}

inline Character create_base(std::string name) {
  if (!is_valid_name(name)) throw Error(ErrorCode::BadName, "name must be 1..24 printable ASCII characters");
  Character c;
  c.name = std::move(name);
  return c;
}

/// Levels up while xp covers 50 * level; each level grants 3 skill points.
/// At the level cap xp saturates instead of overflowing into another level.
inline Character grant_xp(Character c, std::uint64_t amount) {
  std::uint64_t xp = std::uint64_t{c.xp} + amount;
  while (c.level < kMaxLevel && xp >= std::uint64_t{kXpPerLevelStep} * static_cast<std::uint64_t>(c.level)) {
    xp -= std::uint64_t{kXpPerLevelStep} * static_cast<std::uint64_t>(c.level);
    ++c.level;
    c.unspent_skill_points += kPointsPerLevel;
  }
  if (c.level >= kMaxLevel && xp > kXpCeiling) xp = kXpCeiling;
  c.xp = static_cast<std::uint32_t>(xp);
  return c;
}

inline Character allocate_point(Character c, Attribute a) {
  if (c.unspent_skill_points == 0) throw Error(ErrorCode::NoPoints);
  if (c.attribute(a) >= kMaxAttribute) throw Error(ErrorCode::AttributeCap, std::string(to_string(a)));
  ++c.attribute(a);
  --c.unspent_skill_points;
  return c;
}

enum class Rule : std::uint8_t { Level, AttributeRange, AttributeBudget, Weakness, Name };

constexpr std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::Level: return "Level";
    case Rule::AttributeRange: return "AttributeRange";
    case Rule::AttributeBudget: return "AttributeBudget";
    case Rule::Weakness: return "Weakness";
    case Rule::Name: return "Name";
  }
  return "?";
}

struct Validation {
  std::optional<Rule> violated;
  explicit operator bool() const { return !violated; }
};

/// The contract's acceptance rules, checked in order; the first failure wins.
inline Validation validate_character(const Character& c) {
  if (c.level < 1 || c.level > kMaxLevel) return {Rule::Level};
  for (auto a : kAttributes) {
    int v = c.attribute(a);
    if (v < kMinAttribute || v > kMaxAttribute) return {Rule::AttributeRange};
  }
  const std::int64_t budget = kBaseAttributeSum + std::int64_t{kPointsPerLevel} * (c.level - 1);
  if (std::int64_t{c.attribute_sum()} + c.unspent_skill_points != budget) return {Rule::AttributeBudget};
  if (!is_known(c.weakness)) return {Rule::Weakness};
  if (!is_valid_name(c.name)) return {Rule::Name};
  return {};
}

// --- canonical encoding ---------------------------------------------------

/// Sorted-key JSON. career is written for readers but always derived;
/// max_health is never encoded.
inline Json to_json(const Character& c) {
  return Json{{"name", c.name},
              {"level", c.level},
              {"xp", c.xp},
              {"strength", c.strength},
              {"armor", c.armor},
              {"luck", c.luck},
              {"vitality", c.vitality},
              {"career", std::string(to_string(determine_career(c)))},
              {"weakness", std::string(to_string(c.weakness))},
              {"unspent_skill_points", c.unspent_skill_points}};
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::Malformed, std::string("missing field ") + key);
  return *it;
}

inline std::int64_t int_field(const Json& j, const char* key, std::int64_t lo, std::int64_t hi) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) throw Error(ErrorCode::Malformed, std::string(key) + " must be an integer");
  std::int64_t x = v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)
                       ? hi + 1
                       : v.get<std::int64_t>();
  if (x < lo || x > hi) throw Error(ErrorCode::Malformed, std::string(key) + " out of range");
  return x;
}

inline std::uint64_t uint_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned()) throw Error(ErrorCode::Malformed, std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline const std::string& string_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw Error(ErrorCode::Malformed, std::string(key) + " must be a string");
  return v.get_ref<const std::string&>();
}

inline void exact_keys(const Json& j, std::size_t n) {
  if (!j.is_object() || j.size() != n) throw Error(ErrorCode::Malformed, "unexpected object shape");
}

}  // namespace detail

/// Inverse of to_json. Shape errors are Malformed; rule violations are not
/// checked here (that is validate_character's job), except that the derived
/// fields must agree with the attributes.
inline Character character_from_json(const Json& j) {
  using namespace detail;
  exact_keys(j, 10);
  constexpr std::int64_t kI32 = 0x7fffffff;
  Character c;
  c.name = string_field(j, "name");
  c.level = static_cast<int>(int_field(j, "level", -kI32, kI32));
  c.xp = static_cast<std::uint32_t>(int_field(j, "xp", 0, 0xffffffffLL));
  c.strength = static_cast<int>(int_field(j, "strength", -kI32, kI32));
  c.armor = static_cast<int>(int_field(j, "armor", -kI32, kI32));
  c.luck = static_cast<int>(int_field(j, "luck", -kI32, kI32));
  c.vitality = static_cast<int>(int_field(j, "vitality", -kI32, kI32));
  c.unspent_skill_points = static_cast<std::uint32_t>(int_field(j, "unspent_skill_points", 0, 0xffffffffLL));
  auto w = weakness_from_string(string_field(j, "weakness"));
  if (!w) throw Error(ErrorCode::Malformed, "unknown weakness tag");
  c.weakness = *w;
  if (string_field(j, "career") != to_string(determine_career(c)))
    throw Error(ErrorCode::Malformed, "career does not match attributes");
  return c;
}

}  // namespace rd
