#pragma once

#include <cstdint>
#include <random>

namespace platenet {

// splitmix64 finalizer; used to derive independent stream seeds.
inline uint64_t mix_bits(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  return mix_bits(a ^ mix_bits(b));
}

// Deterministic random stream. The mt19937 engine output sequence is fixed
// by the standard; the float mappings below avoid std::*_distribution,
// whose draws are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : engine_(static_cast<uint32_t>(mix_bits(seed) >> 32)) {}

  uint32_t next() { return engine_(); }

  // Uniform in [0,1), 24 bits of resolution.
  float uniform() { return static_cast<float>(next() >> 8) * (1.0f / 16777216.0f); }

  // Uniform in [0,1), 32 bits mapped through double.
  double uniform_double() { return static_cast<double>(next()) * (1.0 / 4294967296.0); }

  float uniform(float lo, float hi) {
    return static_cast<float>(lo + (hi - lo) * uniform_double());
  }

  bool coin() { return (next() & 1u) != 0; }

  // Uniform integer in [0, n).
  uint32_t below(uint32_t n) { return n > 0 ? next() % n : 0; }

 private:
  std::mt19937 engine_;
};

}  // namespace platenet
