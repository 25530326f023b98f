#pragma once

#include <cstdint>

namespace rd {

/// splitmix64. The whole state is one 64-bit word, so it can be carried in
/// battle states and transaction payloads and resumed exactly.
struct SplitMix64 {
  std::uint64_t state = 0;

  constexpr std::uint64_t next() noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Value in [0, bound). Plain modulo; the bias is below 2^-57 for the
  /// small bounds used here.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }
};

/// Derives an independent child seed from a parent seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  SplitMix64 g{parent ^ (tag * 0xd1b54a32d192ed03ULL)};
  g.next();
  return g.next();
}

}  // namespace rd
