#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "nnmass/error.hpp"

namespace nnmass {

// Deterministic generator with pinned output on every platform. splitmix64
// underneath; the distributions are implemented here as well because the
// standard library ones are allowed to differ between implementations, and
// seeds are part of the identity of realizations, weights and datasets.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) throw RangeError("below(0) is undefined");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Box-Muller; the second value of each pair is kept for the next call.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1;
    do {
      u1 = unit();
    } while (u1 <= 0.0);
    double u2 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mean + stddev * r * std::cos(a);
  }

  // Sorted k-subset of {0..n-1}, uniform over subsets. Partial Fisher-Yates.
  std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k) {
    if (k > n) throw RangeError("sample_without_replacement: k exceeds population");
    std::vector<uint32_t> pool(n);
    for (uint32_t i = 0; i < n; ++i) pool[i] = i;
    for (uint32_t i = 0; i < k; ++i) {
      uint32_t j = i + static_cast<uint32_t>(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Stable hash-combine of seed and tag path, so independent streams can be
  // carved out per (cell, layer), (trial, ...) etc. without coordination.
  static uint64_t mix_key(uint64_t seed, std::initializer_list<uint64_t> tags) {
    uint64_t s = finalize(seed ^ 0x6A09E667F3BCC909ull);
    for (uint64_t t : tags) s = finalize(s ^ (t + 0x9E3779B97F4A7C15ull));
    return s;
  }

  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
    return Rng(mix_key(seed, tags));
  }

 private:
  static uint64_t finalize(uint64_t x) {
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDull;
    x ^= x >> 33;
    x *= 0xC4CEB9FE1A85EC53ull;
    x ^= x >> 33;
    return x;
  }

  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nnmass
