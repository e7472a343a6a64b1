#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "nnmass/rng.hpp"

using nnmass::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
  Rng a(42), b(43);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("mix_key is order and content sensitive") {
  CHECK(Rng::mix_key(1, {2, 3}) != Rng::mix_key(1, {3, 2}));
  CHECK(Rng::mix_key(1, {2, 3}) != Rng::mix_key(1, {2, 4}));
  CHECK(Rng::mix_key(1, {2}) != Rng::mix_key(2, {2}));
  CHECK(Rng::mix_key(1, {2}) != Rng::mix_key(1, {2, 0}));
  CHECK(Rng::mix_key(7, {1, 2}) == Rng::mix_key(7, {1, 2}));
}

TEST_CASE("unit lies in [0, 1) and fills the interval") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform maps into the requested interval") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-3.0, 5.0);
    CHECK(u >= -3.0);
    CHECK(u < 5.0);
  }
}

TEST_CASE("below produces every residue with near-uniform frequency") {
  Rng rng(11);
  const uint64_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    uint64_t v = rng.below(n);
    REQUIRE(v < n);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c > draws / static_cast<int>(n) - 600);
    CHECK(c < draws / static_cast<int>(n) + 600);
  }
}

TEST_CASE("normal has zero mean and unit variance") {
  Rng rng(3);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.normal();
    sum += g;
    sum_sq += g * g;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sample_without_replacement is sorted, unique and in range") {
  Rng rng(5);
  for (int round = 0; round < 50; ++round) {
    auto picks = rng.sample_without_replacement(100, 17);
    REQUIRE(picks.size() == 17);
    CHECK(std::is_sorted(picks.begin(), picks.end()));
    std::set<uint32_t> uniq(picks.begin(), picks.end());
    CHECK(uniq.size() == picks.size());
    for (uint32_t p : picks) CHECK(p < 100);
  }
}

TEST_CASE("sampling the whole pool returns 0..n-1") {
  Rng rng(9);
  auto picks = rng.sample_without_replacement(12, 12);
  REQUIRE(picks.size() == 12);
  for (uint32_t i = 0; i < 12; ++i) CHECK(picks[i] == i);
}

TEST_CASE("oversampling the pool is rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(rng.sample_without_replacement(5, 6), nnmass::RangeError);
}

TEST_CASE("derived streams are reproducible and distinct per tag") {
  Rng a = Rng::derive(123, {4, 5});
  Rng b = Rng::derive(123, {4, 5});
  Rng c = Rng::derive(123, {4, 6});
  uint64_t av = a.next_u64(), bv = b.next_u64(), cv = c.next_u64();
  CHECK(av == bv);
  CHECK(av != cv);
}
