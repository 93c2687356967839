#include "gpamp/rng.hpp"

#include <cmath>
#include <numbers>

namespace gpamp {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  state ^= a * 0x9e3779b97f4a7c15ULL;
  out ^= splitmix64(state);
  state ^= b * 0xc2b2ae3d27d4eb4fULL;
  out ^= splitmix64(state);
  state ^= c * 0x165667b19e3779f9ULL;
  out ^= splitmix64(state);
  return out;
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller on (0, 1] x [0, 1) so the log argument is never zero.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(angle);
  has_cached_ = true;
  return r * std::cos(angle);
}

}  // namespace gpamp
