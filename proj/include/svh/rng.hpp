#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace svh {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// value transforms below avoid the implementation-defined std distributions,
// so streams are reproducible across compilers and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_base_(seed) {}

  // Independent substream; mixing keeps children of nearby salts decorrelated.
  Rng child(uint64_t salt) const {
    return Rng(splitmix64(seed_base_ ^ splitmix64(salt)));
  }

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, one value per call (the spare is discarded so the draw
  // count does not depend on call pairing)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_base_ = 0;
};

}  // namespace svh
