#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace treeclime {

// Deterministic RNG stack. Everything that draws randomness goes through
// these types so results are bit-identical for a given seed regardless of
// platform stdlib or worker count. Parallel work derives one independent
// stream per work item via mix_seed and never shares a stream.

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a child seed from a base seed plus up to three stream labels.
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = seed;
  uint64_t out = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ULL;
  out ^= splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  out ^= splitmix64(s);
  s ^= c * 0x165667b19e3779f9ULL;
  out ^= splitmix64(s);
  return out;
}

// xoshiro256** by Blackman & Vigna, seeded via splitmix64.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
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

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). Lemire's method with rejection.
  uint64_t below(uint64_t n) {
    uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t t = (-n) % n;
      while (lo < t) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller (cached spare).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Repeated k-of-n sampling without replacement in O(k) per draw: partial
// Fisher-Yates with the swaps undone afterwards so the pool never needs a
// reset pass. One instance per tree keeps forest split search cheap even
// with thousands of candidate features.
class SubsetSampler {
public:
  void reset(int n) {
    pool_.resize(n);
    for (int i = 0; i < n; ++i) pool_[i] = i;
  }

  // Fills out with k distinct values from [0, pool size), selection order.
  void sample(Rng& rng, int k, std::vector<int>& out) {
    const int n = static_cast<int>(pool_.size());
    out.resize(k);
    swaps_.resize(k);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
      std::swap(pool_[i], pool_[j]);
      out[i] = pool_[i];
      swaps_[i] = j;
    }
    for (int i = k - 1; i >= 0; --i) std::swap(pool_[i], pool_[swaps_[i]]);
  }

private:
  std::vector<int> pool_;
  std::vector<int> swaps_;
};

}  // namespace treeclime
