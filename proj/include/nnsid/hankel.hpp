#pragma once

#include "nnsid/timeseries.hpp"

namespace nnsid {

/// Parameters of a block Hankel window over a time series.
///
/// The window covers samples [start, start + r + n_cols - 1); block row j,
/// column k of the Hankel matrix holds sample start + j + k stacked
/// channel-wise.
struct HankelParams {
  int r = 0;       ///< future block rows
  int s = 0;       ///< past block rows (instrument depth); 0 when no instrument is used
  int n_cols = 0;  ///< Hankel columns
  int start = 0;   ///< index of the first sample entering the window

  /// Number of distinct samples covered by the window.
  int var_samples() const { return n_cols + r - 1; }

  /// Throws std::out_of_range unless start + r + n_cols - 1 <= series_length
  /// (and the basic positivity requirements hold).
  void validate(int series_length) const;
};

/// Block Hankel matrix of a series: (r * channels) x n_cols, block (j, k)
/// equal to sample start + j + k.
Matrix build_hankel(const TimeSeries& series, const HankelParams& p);

/// The structured linear map x -> W1 * H(x) * R, where H(x) is the block
/// Hankel matrix built from the flat sample vector x.
///
/// W1 is a (r*c) x (r*c) left weight and R an n_cols x q right factor; both
/// are frozen at construction, so the map is linear in x. The adjoint
/// accumulates W1^T * Z * R^T back into the sample slots each Hankel entry
/// was read from (anti-diagonal summation, raw sums without averaging).
class HankelMap {
 public:
  HankelMap(Matrix weight_left, Matrix right_factor, HankelParams params, int channels);

  int channels() const { return channels_; }
  int var_dim() const { return channels_ * params_.var_samples(); }
  int out_rows() const { return static_cast<int>(weight_left_.rows()); }
  int out_cols() const { return static_cast<int>(right_factor_.cols()); }

  const HankelParams& params() const { return params_; }
  const Matrix& weight_left() const { return weight_left_; }
  const Matrix& right_factor() const { return right_factor_; }

  /// W1 * H(x) * R. x must have length var_dim().
  Matrix apply(const Vector& x) const;

  /// Adjoint of apply: <apply(x), Z>_F == <x, apply_adjoint(Z)> for all x, Z.
  Vector apply_adjoint(const Matrix& z) const;

  /// Dense n x n matrix M with M*x == apply_adjoint(apply(x)); symmetric PSD.
  Matrix gram_matrix() const;

 private:
  Matrix weight_left_;
  Matrix right_factor_;
  HankelParams params_;
  int channels_;
};

}  // namespace nnsid
