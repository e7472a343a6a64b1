#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nnmass/matrix.hpp"
#include "nnmass/svd.hpp"

namespace nnmass {

// H x W matrix with i.i.d. N(0, variance) entries, deterministic in the seed.
Matrix sample_gaussian(int rows, int cols, double variance, uint64_t seed);

// Pooled mean of squared singular values over `trials` unit-variance draws.
// For tall Gaussian matrices this estimates H (the row count): the expected
// squared Frobenius norm is H*W, spread over W singular values.
double mean_square_identity_check(int rows, int cols, int trials, uint64_t seed);

struct SimSweepRow {
  int width = 0;
  double mass = 0.0;
  int matrix_rows = 0;  // round(width + mass/2)
  int trials = 0;
  double mean_sv = 0.0;    // mean over trials of the per-trial mean singular value
  double stddev_sv = 0.0;  // sample stddev of the per-trial means
};

// For each mass, draw `trials` matrices of shape (round(width + mass/2), width)
// and record statistics of the mean singular value. Each trial's stream is
// derived from (seed, mass index, trial index), so results do not depend on
// evaluation order. `on_row` fires after each mass completes, for streaming.
std::vector<SimSweepRow> simulate_mass_sweep(
    int width, const std::vector<double>& masses, int trials, double variance,
    uint64_t seed, const std::function<void(const SimSweepRow&)>& on_row = nullptr);

}  // namespace nnmass
