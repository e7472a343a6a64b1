#include "nnmass/randmat.hpp"

#include <cmath>

#include "nnmass/error.hpp"
#include "nnmass/rng.hpp"

namespace nnmass {

Matrix sample_gaussian(int rows, int cols, double variance, uint64_t seed) {
  if (rows < 1 || cols < 1) throw RangeError("sample_gaussian: dimensions must be positive");
  if (!(variance > 0.0)) throw RangeError("sample_gaussian: variance must be positive");
  Rng rng(seed);
  return gaussian_matrix(rows, cols, std::sqrt(variance), rng);
}

double mean_square_identity_check(int rows, int cols, int trials, uint64_t seed) {
  if (trials < 1) throw RangeError("mean_square_identity_check: trials must be >= 1");
  if (cols < 1 || rows < cols)
    throw RangeError("mean_square_identity_check: requires rows >= cols >= 1");
  double sum = 0.0;
  long long count = 0;
  for (int t = 0; t < trials; ++t) {
    Matrix m = sample_gaussian(rows, cols, 1.0, Rng::mix_key(seed, {static_cast<uint64_t>(t)}));
    SingularSpectrum spectrum = singular_values(m);
    for (double v : spectrum.values) sum += v * v;
    count += spectrum.values.size();
  }
  return sum / static_cast<double>(count);
}

std::vector<SimSweepRow> simulate_mass_sweep(
    int width, const std::vector<double>& masses, int trials, double variance,
    uint64_t seed, const std::function<void(const SimSweepRow&)>& on_row) {
  if (width < 1) throw RangeError("simulate_mass_sweep: width must be positive");
  if (trials < 1) throw RangeError("simulate_mass_sweep: trials must be >= 1");
  if (!(variance > 0.0)) throw RangeError("simulate_mass_sweep: variance must be positive");
  for (double m : masses)
    if (!(m >= 0.0)) throw RangeError("simulate_mass_sweep: masses must be non-negative");

  std::vector<SimSweepRow> rows;
  rows.reserve(masses.size());
  for (size_t mi = 0; mi < masses.size(); ++mi) {
    double mass = masses[mi];
    int h = static_cast<int>(std::llround(width + mass / 2.0));
    SimSweepRow row;
    row.width = width;
    row.mass = mass;
    row.matrix_rows = h;
    row.trials = trials;
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      uint64_t trial_seed = Rng::mix_key(seed, {mi, static_cast<uint64_t>(t)});
      Matrix m = sample_gaussian(h, width, variance, trial_seed);
      double mean_sv = singular_values(m).mean;
      sum += mean_sv;
      sum_sq += mean_sv * mean_sv;
    }
    row.mean_sv = sum / trials;
    // Sample standard deviation across trials of the per-trial mean.
    double var = trials > 1 ? (sum_sq - sum * sum / trials) / (trials - 1) : 0.0;
    row.stddev_sv = std::sqrt(std::max(0.0, var));
    rows.push_back(row);
    if (on_row) on_row(row);
  }
  return rows;
}

}  // namespace nnmass
