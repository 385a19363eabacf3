#include "nnsid/hankel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nnsid {

void HankelParams::validate(int series_length) const {
  if (r < 1 || n_cols < 1 || s < 0 || start < 0) {
    throw std::out_of_range("HankelParams: need r >= 1, n_cols >= 1, s >= 0, start >= 0 (got r=" +
                            std::to_string(r) + ", s=" + std::to_string(s) +
                            ", n_cols=" + std::to_string(n_cols) +
                            ", start=" + std::to_string(start) + ")");
  }
  if (start + r + n_cols - 1 > series_length) {
    throw std::out_of_range("HankelParams: window violates start + r + n_cols - 1 <= length (" +
                            std::to_string(start) + " + " + std::to_string(r) + " + " +
                            std::to_string(n_cols) + " - 1 > " + std::to_string(series_length) +
                            ")");
  }
}

Matrix build_hankel(const TimeSeries& series, const HankelParams& p) {
  p.validate(series.length());
  const int c = series.channels();
  Matrix h(static_cast<Eigen::Index>(p.r) * c, p.n_cols);
  for (int j = 0; j < p.r; ++j) {
    for (int k = 0; k < p.n_cols; ++k) {
      h.block(static_cast<Eigen::Index>(j) * c, k, c, 1) =
          series.values().row(p.start + j + k).transpose();
    }
  }
  return h;
}

namespace {

// Hankel matrix of a flat sample-major window vector (start already applied).
Matrix hankel_from_flat(const Vector& x, int r, int n_cols, int c) {
  Matrix h(static_cast<Eigen::Index>(r) * c, n_cols);
  for (int j = 0; j < r; ++j) {
    h.middleRows(static_cast<Eigen::Index>(j) * c, c) =
        Eigen::Map<const Matrix>(x.data() + static_cast<Eigen::Index>(j) * c, c, n_cols);
  }
  return h;
}

}  // namespace

HankelMap::HankelMap(Matrix weight_left, Matrix right_factor, HankelParams params, int channels)
    : weight_left_(std::move(weight_left)),
      right_factor_(std::move(right_factor)),
      params_(params),
      channels_(channels) {
  if (channels_ < 1) {
    throw std::invalid_argument("HankelMap: channel count must be positive");
  }
  if (params_.r < 1 || params_.n_cols < 1 || params_.s < 0 || params_.start < 0) {
    throw std::invalid_argument("HankelMap: invalid window parameters (r=" +
                                std::to_string(params_.r) + ", s=" + std::to_string(params_.s) +
                                ", n_cols=" + std::to_string(params_.n_cols) +
                                ", start=" + std::to_string(params_.start) + ")");
  }
  const Eigen::Index p = static_cast<Eigen::Index>(params_.r) * channels_;
  if (weight_left_.rows() != p || weight_left_.cols() != p) {
    throw std::invalid_argument("HankelMap: left weight must be " + std::to_string(p) + " x " +
                                std::to_string(p) + ", got " + std::to_string(weight_left_.rows()) +
                                " x " + std::to_string(weight_left_.cols()));
  }
  if (right_factor_.rows() != params_.n_cols) {
    throw std::invalid_argument("HankelMap: right factor must have " +
                                std::to_string(params_.n_cols) + " rows, got " +
                                std::to_string(right_factor_.rows()));
  }
}

Matrix HankelMap::apply(const Vector& x) const {
  if (x.size() != var_dim()) {
    throw std::invalid_argument("HankelMap::apply: expected vector of length " +
                                std::to_string(var_dim()) + ", got " + std::to_string(x.size()));
  }
  const Matrix h = hankel_from_flat(x, params_.r, params_.n_cols, channels_);
  return weight_left_ * (h * right_factor_);
}

Vector HankelMap::apply_adjoint(const Matrix& z) const {
  if (z.rows() != out_rows() || z.cols() != out_cols()) {
    throw std::invalid_argument("HankelMap::apply_adjoint: expected " +
                                std::to_string(out_rows()) + " x " + std::to_string(out_cols()) +
                                " matrix, got " + std::to_string(z.rows()) + " x " +
                                std::to_string(z.cols()));
  }
  const Matrix g = weight_left_.transpose() * z * right_factor_.transpose();
  Vector out = Vector::Zero(var_dim());
  const int c = channels_;
  for (int j = 0; j < params_.r; ++j) {
    Eigen::Map<Matrix>(out.data() + static_cast<Eigen::Index>(j) * c, c, params_.n_cols) +=
        g.middleRows(static_cast<Eigen::Index>(j) * c, c);
  }
  return out;
}

Matrix HankelMap::gram_matrix() const {
  // M((ti,ci),(tj,cj)) = sum over block rows j1+k1 = ti, j2+k2 = tj of
  //   (W1^T W1)(j1*c+ci, j2*c+cj) * (R R^T)(k2, k1),
  // the Frobenius inner product of the map applied to unit samples.
  const int c = channels_;
  const int r = params_.r;
  const int n_cols = params_.n_cols;
  const int t_count = params_.var_samples();

  Matrix sw = weight_left_.transpose() * weight_left_;
  sw = 0.5 * (sw + sw.transpose()).eval();
  Matrix sr = right_factor_ * right_factor_.transpose();
  sr = 0.5 * (sr + sr.transpose()).eval();

  Matrix m = Matrix::Zero(var_dim(), var_dim());
  for (int ti = 0; ti < t_count; ++ti) {
    const int j1_lo = std::max(0, ti - (n_cols - 1));
    const int j1_hi = std::min(r - 1, ti);
    for (int tj = ti; tj < t_count; ++tj) {
      const int j2_lo = std::max(0, tj - (n_cols - 1));
      const int j2_hi = std::min(r - 1, tj);
      Matrix blk = Matrix::Zero(c, c);
      for (int j1 = j1_lo; j1 <= j1_hi; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
          blk += sr(tj - j2, ti - j1) *
                 sw.block(static_cast<Eigen::Index>(j1) * c, static_cast<Eigen::Index>(j2) * c, c, c);
        }
      }
      m.block(static_cast<Eigen::Index>(ti) * c, static_cast<Eigen::Index>(tj) * c, c, c) = blk;
      if (tj != ti) {
        m.block(static_cast<Eigen::Index>(tj) * c, static_cast<Eigen::Index>(ti) * c, c, c) =
            blk.transpose();
      }
    }
  }
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

}  // namespace nnsid
