#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace claimcheck {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

}  // namespace claimcheck
