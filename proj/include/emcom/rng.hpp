// Seed derivation: one master seed, named substreams per component.
// Adding a new consumer never perturbs existing streams.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emcom {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// seed(master, name, index) = splitmix64(splitmix64(master ^ fnv1a64(name)) + index)
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a64(name)) + index);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view name,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, name, index));
}

}  // namespace emcom
