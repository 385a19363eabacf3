#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnsid/admm.hpp"
#include "nnsid/simulate.hpp"
#include "nnsid/subspace.hpp"
#include "nnsid/weights.hpp"

namespace nnsid {

/// 20 logarithmically spaced values covering [2e-3, 1e3].
std::vector<double> default_lambda_grid();
std::vector<double> log_spaced_grid(double lo, double hi, int count);

struct PipelineConfig {
  WeightingScheme scheme = WeightingScheme::kCva;
  /// Weighting used by the estimation step; defaults to `scheme` so the
  /// pre-processing and estimation weights stay coupled.
  std::optional<WeightingScheme> estimation_scheme;
  int r = 15;
  int s = 15;
  std::vector<double> lambda_grid = default_lambda_grid();
  AdmmSettings admm;
  bool direct_term = true;
  bool stabilize_models = false;
  int jobs = 1;

  WeightingScheme effective_estimation_scheme() const {
    return estimation_scheme.value_or(scheme);
  }
};

/// Validation fit of an identified model, with the settings that produced it.
struct FitReport {
  std::vector<double> per_channel;
  double average = 0.0;
  std::optional<double> lambda_used;  ///< absent when no pre-processing ran
  int order = 0;
  WeightingScheme scheme = WeightingScheme::kCva;
};

struct DenoiseResult {
  TimeSeries y;
  bool converged = false;
  int iterations = 0;
  double nuc_norm_before = 0.0;  ///< weighted data matrix, measured output
  double nuc_norm_after = 0.0;   ///< weighted data matrix, denoised output
};

/// Solves the regularized nuclear norm program for the output window and
/// returns the measured series with the window samples replaced by the
/// solution; samples outside the window pass through unchanged.
DenoiseResult denoise(const TimeSeries& u_meas, const TimeSeries& y_meas,
                      const PipelineConfig& cfg, double lambda);

struct SweepPoint {
  double lambda = 0.0;
  double fit = 0.0;  ///< average validation fit; meaningless when failed
  int order = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct IdentifyResult {
  StateSpaceModel model;
  FitReport report;
  std::vector<double> singular_values;  ///< spectrum behind the order choice
  bool degraded = false;  ///< fell back to the baseline, or the chosen solve did not converge
  bool x0_fallback = false;
  std::vector<SweepPoint> sweep;  ///< one entry per grid point (empty for the baseline path)
};

/// The single-lambda pipeline: denoise, estimate on the denoised record,
/// score on validation. When the estimation scheme equals the pre-processing
/// scheme, the estimation reuses the frozen weighted map of the denoising
/// program (so lambda -> infinity reproduces the baseline exactly); an
/// estimation-scheme override rebuilds the weights from the denoised record.
IdentifyResult identify_at(const TimeSeries& u_id, const TimeSeries& y_id,
                           const TimeSeries& u_val, const TimeSeries& y_val,
                           const PipelineConfig& cfg, double lambda);

/// Denoise-identify-validate over the whole lambda grid; returns the result
/// with the best average validation fit, ties broken toward smaller lambda.
/// If every grid point fails, returns the baseline result flagged degraded.
IdentifyResult identify_best(const TimeSeries& u_id, const TimeSeries& y_id,
                             const TimeSeries& u_val, const TimeSeries& y_val,
                             const PipelineConfig& cfg);

/// Identification without pre-processing: weights from measured data, order
/// selection, extraction, validation scoring.
IdentifyResult baseline(const TimeSeries& u_id, const TimeSeries& y_id, const TimeSeries& u_val,
                        const TimeSeries& y_val, const PipelineConfig& cfg);

/// One row of a scheme-comparison table; missing cells are NaN.
struct ComparisonRow {
  std::string label;
  double baseline = 0.0;
  std::vector<double> fits;  ///< parallel to ComparisonTable::schemes
};

struct ComparisonTable {
  std::vector<WeightingScheme> schemes;
  std::vector<ComparisonRow> rows;
  double average_baseline = 0.0;
  std::vector<double> average_fits;        ///< per scheme, over present cells
  std::vector<double> beats_baseline_pct;  ///< strict improvement percentage per scheme
};

/// Recomputes the averages and beats-baseline percentages from the cells.
void recompute_summary(ComparisonTable& table);

struct StudyGrid {
  std::vector<int> orders{4, 6, 8};
  std::vector<double> sigmas{2.0, 6.0, 10.0};
  int seeds_per_cell = 3;
  int n_id = 300;
  int n_val = 1500;
  std::vector<WeightingScheme> schemes{WeightingScheme::kCva};
};

/// Monte-Carlo comparison on randomly generated single-input single-output
/// systems: for each (order, input scale, seed) cell, identification and
/// validation records are generated with unit Gaussian innovation noise, the
/// baseline is computed with CVA estimation weights, and each requested
/// scheme runs the full lambda sweep. Individual failures become missing
/// cells rather than aborting the study.
ComparisonTable monte_carlo_study(const PipelineConfig& cfg, const StudyGrid& grid,
                                  std::uint64_t seed);

/// Same comparison on supplied records, split into identification and
/// validation at `split` samples.
ComparisonTable datasets_study(const PipelineConfig& cfg,
                               const std::vector<std::pair<std::string, Dataset>>& datasets,
                               int split, const std::vector<WeightingScheme>& schemes);

/// A freshly generated record with its ground-truth model: Gaussian input
/// scaled by sigma, unit Gaussian innovation noise, zero initial state.
struct GeneratedRecord {
  StateSpaceModel truth;
  TimeSeries u;
  TimeSeries e;
  TimeSeries y;
};

GeneratedRecord generate_record(int order, double sigma, int length, std::uint64_t seed);

}  // namespace nnsid
