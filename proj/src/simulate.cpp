#include "nnsid/simulate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "nnsid/random.hpp"

namespace nnsid {

namespace {

TimeSeries simulate_impl(const StateSpaceModel& model, const TimeSeries& u, const TimeSeries* e,
                         const Vector& x0) {
  model.validate();
  if (u.channels() != model.inputs()) {
    throw std::invalid_argument("simulate: input has " + std::to_string(u.channels()) +
                                " channels, model expects " + std::to_string(model.inputs()));
  }
  if (x0.size() != model.order) {
    throw std::invalid_argument("simulate: initial state length does not match the model order");
  }
  if (e != nullptr) {
    if (e->channels() != model.outputs() || e->length() != u.length()) {
      throw std::invalid_argument("simulate: noise must have the output channel count and the input length");
    }
  }
  const int t_len = u.length();
  const int n_p = model.outputs();
  Matrix y(t_len, n_p);
  Vector x = x0;
  for (int k = 0; k < t_len; ++k) {
    Vector yk = model.C * x + model.D * u.values().row(k).transpose();
    if (e != nullptr) {
      yk += e->values().row(k).transpose();
    }
    y.row(k) = yk.transpose();
    Vector x_next = model.A * x + model.B * u.values().row(k).transpose();
    if (e != nullptr) {
      x_next += model.K * e->values().row(k).transpose();
    }
    x = std::move(x_next);
  }
  return TimeSeries(std::move(y));
}

}  // namespace

TimeSeries simulate(const StateSpaceModel& model, const TimeSeries& u, const Vector& x0) {
  return simulate_impl(model, u, nullptr, x0);
}

TimeSeries simulate(const StateSpaceModel& model, const TimeSeries& u, const TimeSeries& e,
                    const Vector& x0) {
  return simulate_impl(model, u, &e, x0);
}

StateSpaceModel random_model(int n_x, std::uint64_t seed) {
  if (n_x < 1 || n_x > 20) {
    throw std::invalid_argument("random_model: order must be in [1, 20]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.4, 0.95);

  StateSpaceModel m;
  m.order = n_x;
  m.A = Matrix(n_x, n_x);
  const double target_rho = radius(rng);
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < n_x; ++i) {
      for (int j = 0; j < n_x; ++j) {
        m.A(i, j) = gauss(rng);
      }
    }
    const double rho = spectral_radius(m.A);
    if (rho > 1e-12) {
      m.A *= target_rho / rho;
      break;
    }
  }
  m.B = Matrix(n_x, 1);
  m.C = Matrix(1, n_x);
  m.K = Matrix(n_x, 1);
  for (int i = 0; i < n_x; ++i) m.B(i, 0) = gauss(rng);
  for (int i = 0; i < n_x; ++i) m.C(0, i) = gauss(rng);
  for (int i = 0; i < n_x; ++i) m.K(i, 0) = gauss(rng);
  m.D = Matrix::Zero(1, 1);
  m.validate();
  return m;
}

TimeSeries gaussian_series(int length, int channels, double scale, std::uint64_t seed,
                           std::string_view stream_name) {
  if (length < 1 || channels < 1) {
    throw std::invalid_argument("gaussian_series: length and channels must be positive");
  }
  std::mt19937_64 rng = substream_rng(seed, stream_name);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix data(length, channels);
  for (int t = 0; t < length; ++t) {
    for (int c = 0; c < channels; ++c) {
      data(t, c) = scale * gauss(rng);
    }
  }
  return TimeSeries(std::move(data));
}

FitScore fit_score(const TimeSeries& y_val, const TimeSeries& y_pred) {
  if (y_val.length() != y_pred.length() || y_val.channels() != y_pred.channels()) {
    throw std::invalid_argument("fit_score: series shapes must match");
  }
  FitScore score;
  score.per_channel.reserve(y_val.channels());
  double sum = 0.0;
  for (int c = 0; c < y_val.channels(); ++c) {
    const Vector truth = y_val.values().col(c);
    const Vector pred = y_pred.values().col(c);
    const double denom = (truth.array() - truth.mean()).matrix().norm();
    if (!(denom > 0.0)) {
      throw std::invalid_argument("fit_score: validation channel " + std::to_string(c) +
                                  " is constant (degenerate denominator)");
    }
    const double fit = 100.0 * (1.0 - (pred - truth).norm() / denom);
    score.per_channel.push_back(fit);
    sum += fit;
  }
  score.average = sum / y_val.channels();
  return score;
}

Prediction predict_for_validation(const StateSpaceModel& model, const TimeSeries& u_val,
                                  const TimeSeries& y_val) {
  model.validate();
  if (u_val.length() != y_val.length() || y_val.channels() != model.outputs()) {
    throw std::invalid_argument("predict_for_validation: series do not match the model");
  }
  const int n_x = model.order;
  const int n_p = model.outputs();
  const int window = std::min(5 * n_x, y_val.length());

  // Zero-state response over the estimation window; the residual y - h is
  // linear in x0 through the free response C A^k x0.
  const TimeSeries forced = simulate(model, u_val, Vector::Zero(n_x));
  Matrix obs(static_cast<Eigen::Index>(window) * n_p, n_x);
  Vector resid(static_cast<Eigen::Index>(window) * n_p);
  Matrix a_pow = Matrix::Identity(n_x, n_x);
  for (int k = 0; k < window; ++k) {
    obs.middleRows(static_cast<Eigen::Index>(k) * n_p, n_p) = model.C * a_pow;
    resid.segment(static_cast<Eigen::Index>(k) * n_p, n_p) =
        (y_val.values().row(k) - forced.values().row(k)).transpose();
    a_pow = (model.A * a_pow).eval();
  }

  Prediction out{forced, false};
  Eigen::ColPivHouseholderQR<Matrix> qr(obs);
  if (qr.rank() < n_x) {
    out.x0_fallback = true;
    return out;  // forced == simulation from x0 = 0
  }
  const Vector x0 = qr.solve(resid);
  out.y = simulate(model, u_val, x0);
  return out;
}

}  // namespace nnsid
