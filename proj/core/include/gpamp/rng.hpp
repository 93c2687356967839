#pragma once

#include <cstdint>

namespace gpamp {

// One SplitMix64 step: advances state and returns the next output word.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives a child seed from a master seed and up to three stream tags.
// Pure function of its inputs, so parallel streams (per trial, per point,
// per cycle) are decorrelated and reproducible across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Deterministic random source (xoshiro256++ seeded via SplitMix64).
// The uniform and normal transforms are implemented here rather than with
// std:: distributions, whose output is implementation-defined; sequences
// from this class are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; one value is cached per pair.
  double normal();

 private:
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gpamp
