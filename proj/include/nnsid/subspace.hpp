#pragma once

#include <vector>

#include "nnsid/hankel.hpp"
#include "nnsid/timeseries.hpp"

namespace nnsid {

/// Discrete-time state-space model in innovation form:
///   x(k+1) = A x(k) + B u(k) + K e(k)
///   y(k)   = C x(k) + D u(k) + e(k)
struct StateSpaceModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Matrix K;
  int order = 0;
  bool stabilized = false;

  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
  void validate() const;
};

/// Model order chosen from a singular value spectrum.
struct OrderSelection {
  std::vector<double> singular_values;
  double threshold = 0.0;
  int chosen = 0;
};

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& a);

/// Order selection: the threshold is the average of the largest and smallest
/// singular values on a logarithmic scale (their geometric mean), with the
/// smallest floored at machine epsilon times the largest; the order is the
/// count of values strictly above the threshold, clamped to [1, count - 1].
OrderSelection select_order(const std::vector<double>& sv);

/// Extended observability estimate from the weighted data matrix: the first
/// n_x left singular triplets scaled by sqrt(singular value), with the left
/// weight undone. block_rows * channels must match ghat's row count.
Matrix observability_from_ghat(const Matrix& ghat, const Matrix& w1, int n_x);

/// State-space model from the weighted data matrix: C from the first block
/// row of the observability estimate, A from its shift invariance, and B, D
/// plus the initial state from a least-squares fit of the measured outputs
/// against the model response over the full identification record. K is set
/// to zero. When direct_term is false, D is fixed at zero.
StateSpaceModel extract_model(const Matrix& ghat, const Matrix& w1, const HankelParams& p,
                              const TimeSeries& u, const TimeSeries& y, int n_x,
                              bool direct_term = true);

/// Scales A by 0.99 / rho(A) when the spectral radius is 1 or more. The
/// returned model is always flagged stabilized; the operation is idempotent.
StateSpaceModel stabilize(StateSpaceModel model);

}  // namespace nnsid
