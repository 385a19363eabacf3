#pragma once

#include <random>

#include "nnsid/hankel.hpp"
#include "nnsid/timeseries.hpp"

namespace nnsid::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

inline TimeSeries random_series(std::mt19937_64& rng, int length, int channels) {
  return TimeSeries(random_matrix(rng, length, channels));
}

/// Symmetric positive definite matrix with a controlled condition number.
inline Matrix random_spd(std::mt19937_64& rng, int n, double cond) {
  const Matrix a = random_matrix(rng, n, n);
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector eigs(n);
  for (int i = 0; i < n; ++i) {
    eigs[i] = std::pow(cond, -static_cast<double>(i) / std::max(1, n - 1));
  }
  return q * eigs.asDiagonal() * q.transpose();
}

/// Map with random dense factors; weights need not be SPD, only shaped right.
inline HankelMap random_map(std::mt19937_64& rng, int r, int n_cols, int channels, int q) {
  const int p = r * channels;
  return HankelMap(random_matrix(rng, p, p), random_matrix(rng, n_cols, q),
                   HankelParams{r, 0, n_cols, 0}, channels);
}

}  // namespace nnsid::testing
