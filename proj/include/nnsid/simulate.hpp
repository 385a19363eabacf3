#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nnsid/subspace.hpp"
#include "nnsid/timeseries.hpp"

namespace nnsid {

/// Noise-free simulation of the state recursion from initial state x0.
TimeSeries simulate(const StateSpaceModel& model, const TimeSeries& u, const Vector& x0);

/// Simulation with an innovation sequence e feeding both equations:
/// x(k+1) = A x(k) + B u(k) + K e(k), y(k) = C x(k) + D u(k) + e(k).
TimeSeries simulate(const StateSpaceModel& model, const TimeSeries& u, const TimeSeries& e,
                    const Vector& x0);

/// Random single-input single-output model: A is a Gaussian matrix rescaled
/// so its spectral radius is uniform in [0.4, 0.95]; B, C, K have standard
/// Gaussian entries; D is zero. Deterministic in the seed.
StateSpaceModel random_model(int n_x, std::uint64_t seed);

/// Series of independent Gaussian samples scaled by `scale`, drawn from the
/// named substream of the seed.
TimeSeries gaussian_series(int length, int channels, double scale, std::uint64_t seed,
                           std::string_view stream_name);

/// Per-channel fit percentages: 100 * (1 - ||y_pred - y|| / ||y - mean(y)||).
/// 100 is a perfect fit; values are unbounded below.
struct FitScore {
  std::vector<double> per_channel;
  double average = 0.0;
};

FitScore fit_score(const TimeSeries& y_val, const TimeSeries& y_pred);

struct Prediction {
  TimeSeries y;
  bool x0_fallback = false;  ///< initial-state regression was singular; used x0 = 0
};

/// Predicted output for validation: the initial state is estimated by least
/// squares against the first min(5 * order, length) validation samples, then
/// the model is simulated noise-free from that state.
Prediction predict_for_validation(const StateSpaceModel& model, const TimeSeries& u_val,
                                  const TimeSeries& y_val);

}  // namespace nnsid
