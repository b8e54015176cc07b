#pragma once

#include <cstdint>
#include <string_view>

namespace clml {

// Hierarchical seed derivation: run -> epoch -> candidate -> stream.
// Every random stream in the library is keyed by its position in that tree,
// so results never depend on evaluation order or worker count.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t child) noexcept {
  return mix64(mix64(parent) ^ (child + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(parent, h);
}

// Fixed stream labels below a candidate node.
inline constexpr std::uint64_t kSampleStream = 0;
inline constexpr std::uint64_t kMonteCarloStream = 1;

}  // namespace clml
