#include <cmath>
#include <vector>

#include "doctest.h"
#include "nnmass/error.hpp"
#include "nnmass/randmat.hpp"
#include "support/oracles.hpp"

using namespace nnmass;

TEST_CASE("gaussian sampling is deterministic and seed-sensitive") {
  auto a = sample_gaussian(1, 1, 1.0, 9);
  auto b = sample_gaussian(1, 1, 1.0, 9);
  auto c = sample_gaussian(1, 1, 1.0, 10);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
}

TEST_CASE("gaussian sampling rejects bad arguments") {
  CHECK_THROWS_AS(sample_gaussian(0, 3, 1.0, 1), RangeError);
  CHECK_THROWS_AS(sample_gaussian(3, 0, 1.0, 1), RangeError);
  CHECK_THROWS_AS(sample_gaussian(3, 3, 0.0, 1), RangeError);
  CHECK_THROWS_AS(sample_gaussian(3, 3, -1.0, 1), RangeError);
}

TEST_CASE("large gaussian sample has near-zero mean") {
  auto m = sample_gaussian(1000, 1000, 1.0, 123);
  double sum = 0.0;
  for (double v : m.data) sum += v;
  CHECK(std::abs(sum / static_cast<double>(m.size())) < 0.01);
}

TEST_CASE("requested variance is realized") {
  double pooled = 0.0;
  int n = 0;
  for (uint64_t t = 0; t < 10; ++t) {
    auto m = sample_gaussian(10, 10, 4.0, 500 + t);
    for (double v : m.data) pooled += v * v;
    n += static_cast<int>(m.size());
  }
  double var = pooled / n;
  CHECK(var > 3.0);
  CHECK(var < 5.0);
}

TEST_CASE("singular values of the identity are all one") {
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  auto spec = singular_values(eye);
  REQUIRE(spec.values.size() == 3);
  for (double v : spec.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec.mean_square == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("singular values of a diagonal matrix are its magnitudes") {
  Matrix d(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 4.0;
  auto spec = singular_values(d);
  REQUIRE(spec.values.size() == 2);
  CHECK(spec.values[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(spec.values[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("singular values match the Gram-matrix eigensolver oracle") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    auto m = sample_gaussian(8, 5, 1.0, seed);
    auto spec = singular_values(m);
    auto oracle = testsupport::gram_singular_values(m);
    REQUIRE(spec.values.size() == oracle.size());
    for (size_t i = 0; i < oracle.size(); ++i)
      CHECK(spec.values[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
  }
}

TEST_CASE("wide matrices are handled through the transpose") {
  auto m = sample_gaussian(4, 11, 1.0, 77);
  auto spec = singular_values(m);
  REQUIRE(spec.values.size() == 4);
  Matrix t(11, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 11; ++c) t(c, r) = m(r, c);
  auto oracle = testsupport::gram_singular_values(t);
  for (size_t i = 0; i < 4; ++i)
    CHECK(spec.values[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
}

TEST_CASE("squared singular values conserve the Frobenius norm") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto m = sample_gaussian(30, 12, 1.0, 900 + seed);
    auto spec = singular_values(m);
    double frob = 0.0;
    for (double v : m.data) frob += v * v;
    double sum_sq = 0.0;
    for (double v : spec.values) sum_sq += v * v;
    CHECK(sum_sq == doctest::Approx(frob).epsilon(1e-8));
    CHECK(spec.mean_square ==
          doctest::Approx(sum_sq / static_cast<double>(spec.values.size()))
              .epsilon(1e-12));
  }
}

TEST_CASE("singular values are descending and scale-equivariant") {
  auto m = sample_gaussian(16, 9, 1.0, 44);
  auto spec = singular_values(m);
  for (size_t i = 1; i < spec.values.size(); ++i)
    CHECK(spec.values[i] <= spec.values[i - 1]);

  Matrix scaled = m;
  for (double& v : scaled.data) v *= 2.5;
  auto spec2 = singular_values(scaled);
  for (size_t i = 0; i < spec.values.size(); ++i)
    CHECK(spec2.values[i] == doctest::Approx(2.5 * spec.values[i]).epsilon(1e-10));
}

TEST_CASE("non-finite entries are rejected") {
  Matrix m(2, 2);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(singular_values(m), NumericError);
}

TEST_CASE("pooled mean squared singular value tracks the row count") {
  SUBCASE("tall") {
    double est = mean_square_identity_check(100, 10, 200, 7);
    double tol = 5.0 * 100.0 / std::sqrt(200.0 * 10.0);
    CHECK(std::abs(est - 100.0) < tol);
  }
  SUBCASE("scalar") {
    double est = mean_square_identity_check(1, 1, 400, 8);
    double tol = 5.0 * 1.0 / std::sqrt(400.0);
    CHECK(std::abs(est - 1.0) < tol);
  }
  SUBCASE("square") {
    double est = mean_square_identity_check(50, 50, 200, 9);
    double tol = 5.0 * 50.0 / std::sqrt(200.0 * 50.0);
    CHECK(std::abs(est - 50.0) < tol);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(mean_square_identity_check(10, 20, 5, 1), RangeError);
    CHECK_THROWS_AS(mean_square_identity_check(10, 5, 0, 1), RangeError);
  }
}

TEST_CASE("pooled mean squared singular value does not depend on the column count") {
  struct Est {
    double mean;
    double se;
  };
  std::vector<Est> estimates;
  const int trials = 60;
  for (int w : {10, 50, 100}) {
    // Pool per-trial means and compute their standard error.
    std::vector<double> per_trial;
    for (int t = 0; t < trials; ++t) {
      auto m = sample_gaussian(200, w, 1.0,
                               Rng::mix_key(2718, {static_cast<uint64_t>(w),
                                                   static_cast<uint64_t>(t)}));
      per_trial.push_back(singular_values(m).mean_square);
    }
    double mean = 0.0;
    for (double v : per_trial) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : per_trial) var += (v - mean) * (v - mean);
    var /= (trials - 1);
    estimates.push_back({mean, std::sqrt(var / trials)});
  }
  for (size_t a = 0; a < estimates.size(); ++a)
    for (size_t b = a + 1; b < estimates.size(); ++b) {
      double pooled_se = std::sqrt(estimates[a].se * estimates[a].se +
                                   estimates[b].se * estimates[b].se);
      CHECK(std::abs(estimates[a].mean - estimates[b].mean) < 3.0 * pooled_se);
    }
}

TEST_CASE("mass sweep at zero mass reduces to the square baseline") {
  auto rows = simulate_mass_sweep(8, {0.0}, 20, 1.0, 5);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].matrix_rows == 8);
  CHECK(rows[0].width == 8);
  CHECK(rows[0].trials == 20);
  CHECK(rows[0].mean_sv > 0.0);
}

TEST_CASE("mass sweep rows are deterministic and stream in order") {
  std::vector<double> masses = {0.0, 10.0, 20.0};
  std::vector<int> streamed;
  auto a = simulate_mass_sweep(8, masses, 10, 1.0, 31,
                               [&](const SimSweepRow& r) {
                                 streamed.push_back(r.matrix_rows);
                               });
  auto b = simulate_mass_sweep(8, masses, 10, 1.0, 31);
  REQUIRE(a.size() == 3);
  REQUIRE(streamed.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a[i].mean_sv == b[i].mean_sv);
    CHECK(a[i].stddev_sv == b[i].stddev_sv);
    CHECK(streamed[i] == a[i].matrix_rows);
  }
  CHECK(a[1].matrix_rows == 13);  // round(8 + 10/2)
  CHECK(a[2].matrix_rows == 18);
}

TEST_CASE("mean singular value climbs with mass step over step") {
  std::vector<double> masses;
  for (double m = 0.0; m <= 300.0; m += 30.0) masses.push_back(m);
  auto rows = simulate_mass_sweep(8, masses, 50, 1.0, 2026);
  REQUIRE(rows.size() == masses.size());
  for (size_t i = 1; i < rows.size(); ++i) {
    double prev_se = rows[i - 1].stddev_sv / std::sqrt(50.0);
    double cur_se = rows[i].stddev_sv / std::sqrt(50.0);
    double pooled = std::sqrt(prev_se * prev_se + cur_se * cur_se);
    CHECK(rows[i].mean_sv > rows[i - 1].mean_sv + pooled);
  }
}

TEST_CASE("wider matrices have larger mean singular values at equal mass") {
  auto wide = simulate_mass_sweep(64, {40.0}, 30, 1.0, 99);
  auto narrow = simulate_mass_sweep(8, {40.0}, 30, 1.0, 99);
  CHECK(wide[0].mean_sv > narrow[0].mean_sv);
}

TEST_CASE("mean singular value is locally linear in mass") {
  std::vector<double> masses;
  for (double m = 0.0; m <= 32.0; m += 4.0) masses.push_back(m);
  auto rows = simulate_mass_sweep(8, masses, 60, 1.0, 404);
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.mass);
    ys.push_back(r.mean_sv);
  }
  auto fit = testsupport::normal_equation_fit(xs, ys);
  CHECK(fit.r_squared >= 0.95);
  CHECK(fit.slope > 0.0);
}

TEST_CASE("sweep argument validation") {
  CHECK_THROWS_AS(simulate_mass_sweep(0, {1.0}, 5, 1.0, 1), RangeError);
  CHECK_THROWS_AS(simulate_mass_sweep(4, {-1.0}, 5, 1.0, 1), RangeError);
  CHECK_THROWS_AS(simulate_mass_sweep(4, {1.0}, 0, 1.0, 1), RangeError);
}
