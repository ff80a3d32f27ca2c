#pragma once

#include <cmath>
#include <cstdint>

namespace lkdn {

// splitmix64. Self-contained so streams are reproducible across platforms and
// standard-library versions (std:: distributions make no such promise).
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [lo, hi)
  int uniform_int(int lo, int hi) {
    return lo + int((unsigned __int128)(next()) * uint64_t(hi - lo) >> 64);
  }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

// Decorrelated seed for a named stream (per training step, per parameter, ...).
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  Rng r(base ^ (stream * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  return r.next();
}

}  // namespace lkdn
