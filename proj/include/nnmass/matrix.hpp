#pragma once

#include <cstddef>
#include <vector>

#include "nnmass/error.hpp"
#include "nnmass/rng.hpp"

namespace nnmass {

// Dense row-major matrix of doubles. Deliberately minimal: the heavy kernels
// the MLP needs (X*W^T, rank-1 accumulations) live in network.cpp next to
// their call sites.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw RangeError("negative matrix dimension");
  }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

inline Matrix gaussian_matrix(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.normal(0.0, stddev);
  return m;
}

}  // namespace nnmass
