#include "nnmass/svd.hpp"

#include <algorithm>
#include <cmath>

#include "nnmass/error.hpp"

namespace nnmass {

// One-sided Jacobi: rotate column pairs of A until all pairs are orthogonal;
// the singular values are then the column norms. Works on the transpose when
// the input is wide so the rotated side is always the short one.
SingularSpectrum singular_values(const Matrix& m) {
  if (m.rows < 1 || m.cols < 1) throw RangeError("singular_values: empty matrix");
  for (double v : m.data)
    if (!std::isfinite(v)) throw NumericError("singular_values: non-finite entry");

  const bool transpose = m.cols > m.rows;
  const int rows = transpose ? m.cols : m.rows;
  const int cols = transpose ? m.rows : m.cols;

  // Column-major working copy, one contiguous vector per column.
  std::vector<std::vector<double>> a(cols, std::vector<double>(rows));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      if (transpose)
        a[r][c] = m(r, c);
      else
        a[c][r] = m(r, c);
    }

  const double tol = 1e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int r = 0; r < rows; ++r) {
          app += a[p][r] * a[p][r];
          aqq += a[q][r] * a[q][r];
          apq += a[p][r] * a[q][r];
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
        rotated = true;
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double cs = 1.0 / std::sqrt(1.0 + t * t);
        double sn = cs * t;
        for (int r = 0; r < rows; ++r) {
          double vp = a[p][r], vq = a[q][r];
          a[p][r] = cs * vp - sn * vq;
          a[q][r] = sn * vp + cs * vq;
        }
      }
    }
    if (!rotated) break;
  }

  SingularSpectrum spectrum;
  spectrum.values.resize(cols);
  for (int c = 0; c < cols; ++c) {
    double norm2 = 0.0;
    for (int r = 0; r < rows; ++r) norm2 += a[c][r] * a[c][r];
    spectrum.values[c] = std::sqrt(norm2);
  }
  std::sort(spectrum.values.begin(), spectrum.values.end(), std::greater<double>());

  double sum = 0.0, sum_sq = 0.0;
  for (double v : spectrum.values) {
    sum += v;
    sum_sq += v * v;
  }
  spectrum.mean = sum / static_cast<double>(cols);
  spectrum.mean_square = sum_sq / static_cast<double>(cols);
  return spectrum;
}

}  // namespace nnmass
