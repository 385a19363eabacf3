#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "nnsid/hankel.hpp"
#include "nnsid/timeseries.hpp"

namespace nnsid {

/// Weighting schemes for the data matrix. MOESP, N4SID, IVM and CVA follow
/// the classical subspace identification weights; NONE keeps the instrument
/// but applies identity weights; NOINSTR drops the instrument entirely and
/// projects the raw output window onto the input complement.
enum class WeightingScheme { kMoesp, kN4sid, kIvm, kCva, kNone, kNoInstr };

std::string_view scheme_name(WeightingScheme scheme);
std::optional<WeightingScheme> parse_scheme(std::string_view name);

/// All six schemes, in the conventional reporting order.
inline constexpr WeightingScheme kAllSchemes[] = {
    WeightingScheme::kMoesp, WeightingScheme::kN4sid, WeightingScheme::kIvm,
    WeightingScheme::kCva,   WeightingScheme::kNone,  WeightingScheme::kNoInstr};

/// Fixed factors of the weighted data-matrix map: the weighted matrix of a
/// candidate output window x is w1 * H(x) * right_factor.
struct WeightFactors {
  Matrix w1;            ///< (r * n_p) x (r * n_p), identity or an inverse square root
  Matrix right_factor;  ///< n_cols x q, the projector/instrument/right-weight product
  int q = 0;            ///< output column count
  WeightingScheme scheme = WeightingScheme::kNone;
  HankelParams params;
  int out_channels = 0;  ///< n_p
  int in_channels = 0;   ///< n_m
};

/// Window parameters used by a scheme on a record of the given length.
/// Instrument-based schemes place the window at start = s with
/// n_cols = length - r - s + 1; NOINSTR starts at 0 with s = 0 and
/// n_cols = length - r + 1. Every sample of the record is used either way.
HankelParams scheme_window(WeightingScheme scheme, int r, int s, int length);

/// M * P, where P projects onto the orthogonal complement of U's row space.
/// Computed via an orthogonal factorization of U^T; the projector itself is
/// never formed. U must have full row rank.
Matrix project_complement(const Matrix& m, const Matrix& u);

/// Inverse matrix square root of a symmetric PSD matrix via eigendecomposition,
/// with eigenvalues floored at 1e-10 times the largest before inversion.
Matrix inv_sqrt(const Matrix& s);

/// Instrument variable: the past-input window stacked over the past-output
/// window, s block rows each, both starting at sample 0.
Matrix build_instrument(const TimeSeries& u_meas, const TimeSeries& y_meas,
                        const HankelParams& p);

/// Weight factors for a scheme, built from measured data only. The returned
/// right factor folds the complement projector, the instrument and the right
/// weight into a single n_cols x q matrix, so the weighted data matrix stays
/// affine in the output window.
WeightFactors compute_weights(WeightingScheme scheme, const TimeSeries& u_meas,
                              const TimeSeries& y_meas, const HankelParams& p);

/// The linear map packaged from precomputed factors.
HankelMap make_map(const WeightFactors& factors);

/// Weighted data matrix of a candidate output window y (flat sample-major).
Matrix assemble_ghat(const WeightFactors& factors, const Vector& y);

}  // namespace nnsid
