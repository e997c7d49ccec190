#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sacflow {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, used to turn stream labels into integers.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derive an independent child seed from (master, label, index).
/// Distinct labels or indices give non-overlapping streams for all practical purposes.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return mix64(mix64(master ^ fnv1a(label)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// A reproducible standard-normal stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace sacflow
