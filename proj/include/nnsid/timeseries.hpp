#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace nnsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered vector-valued samples with a fixed channel count.
/// One row per sample, one column per channel. Immutable after construction.
class TimeSeries {
 public:
  explicit TimeSeries(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw std::invalid_argument(
          "TimeSeries: need at least one sample and one channel, got " +
          std::to_string(data_.rows()) + " x " + std::to_string(data_.cols()));
    }
    if (!data_.allFinite()) {
      throw std::invalid_argument("TimeSeries: all entries must be finite");
    }
  }

  int length() const { return static_cast<int>(data_.rows()); }
  int channels() const { return static_cast<int>(data_.cols()); }
  double operator()(int t, int ch) const { return data_(t, ch); }
  const Matrix& values() const { return data_; }

  /// Samples [start, start+count) flattened sample-major: v[i*channels + ch].
  Vector flatten(int start, int count) const {
    check_window(start, count);
    const int c = channels();
    Vector v(static_cast<Eigen::Index>(count) * c);
    for (int i = 0; i < count; ++i) {
      v.segment(static_cast<Eigen::Index>(i) * c, c) = data_.row(start + i).transpose();
    }
    return v;
  }

  /// Copy of the series with samples [start, start + flat.size()/channels)
  /// replaced by the contents of a flat sample-major vector.
  TimeSeries with_window(int start, const Vector& flat) const {
    const int c = channels();
    if (flat.size() % c != 0) {
      throw std::invalid_argument("TimeSeries::with_window: flat size " +
                                  std::to_string(flat.size()) +
                                  " is not a multiple of the channel count " + std::to_string(c));
    }
    const int count = static_cast<int>(flat.size() / c);
    check_window(start, count);
    Matrix out = data_;
    for (int i = 0; i < count; ++i) {
      out.row(start + i) = flat.segment(static_cast<Eigen::Index>(i) * c, c).transpose();
    }
    return TimeSeries(std::move(out));
  }

 private:
  void check_window(int start, int count) const {
    if (start < 0 || count < 0 || start + count > length()) {
      throw std::out_of_range("TimeSeries: window [" + std::to_string(start) + ", " +
                              std::to_string(start + count) + ") exceeds length " +
                              std::to_string(length()));
    }
  }

  Matrix data_;
};

/// An input/output record with aligned sample indices.
struct Dataset {
  TimeSeries u;
  TimeSeries y;

  Dataset(TimeSeries input, TimeSeries output) : u(std::move(input)), y(std::move(output)) {
    if (u.length() != y.length()) {
      throw std::invalid_argument("Dataset: input and output length mismatch (" +
                                  std::to_string(u.length()) + " vs " +
                                  std::to_string(y.length()) + ")");
    }
  }
};

}  // namespace nnsid
