#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sli {

/// Deterministic random source used by every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// draws below (bounded integers, uniforms, normals) are written out here to
/// keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection sampling. bound > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the Box-Muller transform (one value per call).
  double normal();

  /// Fisher-Yates shuffle driven by uniform_index.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named component: mix64 of the master seed combined with the
/// FNV-1a hash of the name.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);

/// Seed for the i-th member of a family (e.g. tree i of a forest).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace sli
