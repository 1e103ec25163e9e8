#pragma once

#include <cstdint>
#include <vector>

namespace fsnn {

// splitmix64: seed expansion and stream derivation.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** seeded via splitmix64. Self-contained so results never depend
// on standard-library distribution internals; identical streams on every
// platform and compiler.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Independent stream for (seed, index) pairs; used to give every campaign
  // run its own generator so parallel and serial schedules agree.
  static Rng stream(uint64_t seed, uint64_t index) {
    uint64_t sm = seed ^ 0x71c9b75ee5289a93ull;
    uint64_t a = splitmix64(sm);
    sm ^= index * 0x9e3779b97f4a7c15ull;
    (void)a;
    uint64_t mixed = splitmix64(sm) ^ (index + 0x632be59bd9b4e019ull);
    return Rng(seed ^ mixed);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased integer in [0, n) by rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float normal_float(float stddev) {
    // Sum of 12 uniforms minus 6: cheap, deterministic, good enough for
    // weight init (no tails needed there).
    double acc = 0.0;
    for (int i = 0; i < 12; ++i) acc += uniform();
    return static_cast<float>((acc - 6.0) * stddev);
  }

  // k distinct values from [0, n), ascending. Floyd's algorithm; O(k) memory.
  std::vector<uint64_t> sample_distinct(uint64_t n, uint64_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace fsnn
