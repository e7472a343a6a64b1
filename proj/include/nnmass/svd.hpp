#pragma once

#include <vector>

#include "nnmass/matrix.hpp"

namespace nnmass {

struct SingularSpectrum {
  std::vector<double> values;  // descending, length min(rows, cols)
  double mean = 0.0;
  double mean_square = 0.0;
};

// Singular values only, via one-sided Jacobi on the shorter side. Accurate to
// well below the 1e-8 relative Frobenius contract for the sizes used here
// (<= ~2000 x 256).
SingularSpectrum singular_values(const Matrix& m);

}  // namespace nnmass
