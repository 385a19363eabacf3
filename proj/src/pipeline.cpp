#include "nnsid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nnsid/random.hpp"

namespace nnsid {

std::vector<double> log_spaced_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi and count >= 2");
  }
  std::vector<double> grid(count);
  const double llo = std::log10(lo);
  const double lhi = std::log10(hi);
  for (int i = 0; i < count; ++i) {
    grid[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return log_spaced_grid(2e-3, 1e3, 20); }

namespace {

// Runs fn(0..count-1) on up to `jobs` worker threads. Results must be stored
// by index inside fn; the first escaped exception is rethrown after joining.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) {
    throw std::invalid_argument("pipeline: lambda grid must be nonempty");
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) {
      throw std::invalid_argument("pipeline: lambda grid entries must be positive");
    }
    if (i > 0 && grid[i] < grid[i - 1]) {
      throw std::invalid_argument("pipeline: lambda grid must be sorted ascending");
    }
  }
}

// Frozen pieces of the denoising program, shared across a lambda sweep.
struct DenoiseSetup {
  WeightFactors factors;
  HankelMap map;
  Matrix gram;
  Vector anchor;
};

DenoiseSetup prepare_denoise(const TimeSeries& u_meas, const TimeSeries& y_meas,
                             const PipelineConfig& cfg) {
  const HankelParams p = scheme_window(cfg.scheme, cfg.r, cfg.s, y_meas.length());
  WeightFactors factors = compute_weights(cfg.scheme, u_meas, y_meas, p);
  HankelMap map = make_map(factors);
  Matrix gram = map.gram_matrix();
  Vector anchor = y_meas.flatten(p.start, p.var_samples());
  return DenoiseSetup{std::move(factors), std::move(map), std::move(gram), std::move(anchor)};
}

DenoiseResult run_denoise(const DenoiseSetup& setup, const TimeSeries& y_meas,
                          const AdmmSettings& admm, double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("denoise: lambda must be positive");
  }
  NucNormProblem prob{setup.map,
                      Matrix::Zero(setup.map.out_rows(), setup.map.out_cols()),
                      QuadraticTerm::scaled_identity(2.0 * lambda), setup.anchor};
  AdmmState st = solve(prob, admm, &setup.gram);
  DenoiseResult out{y_meas.with_window(setup.map.params().start, st.x), st.converged, st.iter,
                    nuclear_norm(setup.map.apply(setup.anchor)),
                    nuclear_norm(setup.map.apply(st.x))};
  return out;
}

struct EstimationOutcome {
  StateSpaceModel model;
  OrderSelection order_sel;
  FitScore fit;
  bool x0_fallback = false;
};

// Order selection, extraction and validation scoring for a given weighted
// data matrix of the record (u_id, y_id).
EstimationOutcome estimate_from_ghat(const Matrix& ghat, const Matrix& w1, const HankelParams& p,
                                     const TimeSeries& u_id, const TimeSeries& y_id,
                                     const TimeSeries& u_val, const TimeSeries& y_val,
                                     const PipelineConfig& cfg) {
  Eigen::JacobiSVD<Matrix> svd(ghat);
  std::vector<double> sv(svd.singularValues().data(),
                         svd.singularValues().data() + svd.singularValues().size());
  const OrderSelection sel = select_order(sv);

  StateSpaceModel model = extract_model(ghat, w1, p, u_id, y_id, sel.chosen, cfg.direct_term);
  if (cfg.stabilize_models) {
    model = stabilize(std::move(model));
  }
  const Prediction pred = predict_for_validation(model, u_val, y_val);
  FitScore fit = fit_score(y_val, pred.y);
  return EstimationOutcome{std::move(model), sel, std::move(fit), pred.x0_fallback};
}

// Subspace identification of a record plus validation scoring, with the
// weights rebuilt from the record itself.
EstimationOutcome estimate_and_score(const TimeSeries& u_id, const TimeSeries& y_id,
                                     const TimeSeries& u_val, const TimeSeries& y_val,
                                     const PipelineConfig& cfg) {
  const WeightingScheme scheme = cfg.effective_estimation_scheme();
  const HankelParams p = scheme_window(scheme, cfg.r, cfg.s, y_id.length());
  const WeightFactors factors = compute_weights(scheme, u_id, y_id, p);
  const Matrix ghat = assemble_ghat(factors, y_id.flatten(p.start, p.var_samples()));
  return estimate_from_ghat(ghat, factors.w1, p, u_id, y_id, u_val, y_val, cfg);
}

// Estimation step after denoising. Without an estimation-scheme override the
// frozen map of the denoising program is evaluated on the denoised window;
// with one, the weights are rebuilt from the denoised record.
EstimationOutcome estimate_after_denoise(const DenoiseSetup& setup, const TimeSeries& u_id,
                                         const TimeSeries& y_den, const TimeSeries& u_val,
                                         const TimeSeries& y_val, const PipelineConfig& cfg) {
  if (cfg.estimation_scheme.has_value() && *cfg.estimation_scheme != cfg.scheme) {
    return estimate_and_score(u_id, y_den, u_val, y_val, cfg);
  }
  const HankelParams& p = setup.factors.params;
  const Matrix ghat = setup.map.apply(y_den.flatten(p.start, p.var_samples()));
  return estimate_from_ghat(ghat, setup.factors.w1, p, u_id, y_den, u_val, y_val, cfg);
}

IdentifyResult package_result(EstimationOutcome outcome, WeightingScheme scheme,
                              std::optional<double> lambda) {
  IdentifyResult res;
  res.model = std::move(outcome.model);
  res.report.per_channel = outcome.fit.per_channel;
  res.report.average = outcome.fit.average;
  res.report.lambda_used = lambda;
  res.report.order = outcome.order_sel.chosen;
  res.report.scheme = scheme;
  res.singular_values = outcome.order_sel.singular_values;
  res.x0_fallback = outcome.x0_fallback;
  return res;
}

}  // namespace

DenoiseResult denoise(const TimeSeries& u_meas, const TimeSeries& y_meas,
                      const PipelineConfig& cfg, double lambda) {
  return run_denoise(prepare_denoise(u_meas, y_meas, cfg), y_meas, cfg.admm, lambda);
}

IdentifyResult baseline(const TimeSeries& u_id, const TimeSeries& y_id, const TimeSeries& u_val,
                        const TimeSeries& y_val, const PipelineConfig& cfg) {
  return package_result(estimate_and_score(u_id, y_id, u_val, y_val, cfg),
                        cfg.effective_estimation_scheme(), std::nullopt);
}

IdentifyResult identify_at(const TimeSeries& u_id, const TimeSeries& y_id,
                           const TimeSeries& u_val, const TimeSeries& y_val,
                           const PipelineConfig& cfg, double lambda) {
  const DenoiseSetup setup = prepare_denoise(u_id, y_id, cfg);
  const DenoiseResult den = run_denoise(setup, y_id, cfg.admm, lambda);
  EstimationOutcome est = estimate_after_denoise(setup, u_id, den.y, u_val, y_val, cfg);
  IdentifyResult res =
      package_result(std::move(est), cfg.effective_estimation_scheme(), lambda);
  res.degraded = !den.converged;
  return res;
}

IdentifyResult identify_best(const TimeSeries& u_id, const TimeSeries& y_id,
                             const TimeSeries& u_val, const TimeSeries& y_val,
                             const PipelineConfig& cfg) {
  validate_grid(cfg.lambda_grid);
  const DenoiseSetup setup = prepare_denoise(u_id, y_id, cfg);
  const int count = static_cast<int>(cfg.lambda_grid.size());

  struct PerLambda {
    SweepPoint point;
    std::optional<IdentifyResult> result;
  };
  std::vector<PerLambda> runs(count);

  // The trace sink is a single stream; keep the sweep sequential when tracing.
  const int jobs = (cfg.admm.trace != nullptr) ? 1 : cfg.jobs;
  parallel_for(count, jobs, [&](int i) {
    const double lambda = cfg.lambda_grid[i];
    PerLambda& run = runs[i];
    run.point.lambda = lambda;
    try {
      if (cfg.admm.trace != nullptr) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "# solve lambda=%.9g\n", lambda);
        *cfg.admm.trace << buf;
      }
      const DenoiseResult den = run_denoise(setup, y_id, cfg.admm, lambda);
      EstimationOutcome est = estimate_after_denoise(setup, u_id, den.y, u_val, y_val, cfg);
      run.point.fit = est.fit.average;
      run.point.order = est.order_sel.chosen;
      run.point.converged = den.converged;
      IdentifyResult res = package_result(std::move(est), cfg.effective_estimation_scheme(),
                                          lambda);
      res.degraded = !den.converged;
      run.result = std::move(res);
    } catch (const std::exception& e) {
      run.point.failed = true;
      run.point.error = e.what();
    }
  });

  int best = -1;
  for (int i = 0; i < count; ++i) {
    if (runs[i].point.failed) continue;
    if (best < 0 || runs[i].point.fit > runs[best].point.fit) {
      best = i;  // strict improvement keeps ties at the smaller lambda
    }
  }

  std::vector<SweepPoint> sweep;
  sweep.reserve(count);
  for (const PerLambda& run : runs) sweep.push_back(run.point);

  if (best < 0) {
    IdentifyResult res = baseline(u_id, y_id, u_val, y_val, cfg);
    res.degraded = true;
    res.sweep = std::move(sweep);
    return res;
  }
  IdentifyResult res = std::move(*runs[best].result);
  res.sweep = std::move(sweep);
  return res;
}

void recompute_summary(ComparisonTable& table) {
  const size_t n_schemes = table.schemes.size();
  table.average_fits.assign(n_schemes, std::numeric_limits<double>::quiet_NaN());
  table.beats_baseline_pct.assign(n_schemes, std::numeric_limits<double>::quiet_NaN());

  double base_sum = 0.0;
  int base_count = 0;
  for (const ComparisonRow& row : table.rows) {
    if (std::isfinite(row.baseline)) {
      base_sum += row.baseline;
      ++base_count;
    }
  }
  table.average_baseline =
      base_count > 0 ? base_sum / base_count : std::numeric_limits<double>::quiet_NaN();

  for (size_t s = 0; s < n_schemes; ++s) {
    double sum = 0.0;
    int count = 0;
    int beats = 0;
    int pairs = 0;
    for (const ComparisonRow& row : table.rows) {
      const double fit = row.fits.at(s);
      if (std::isfinite(fit)) {
        sum += fit;
        ++count;
      }
      if (std::isfinite(fit) && std::isfinite(row.baseline)) {
        ++pairs;
        if (fit > row.baseline) ++beats;  // ties count as not-better
      }
    }
    if (count > 0) table.average_fits[s] = sum / count;
    if (pairs > 0) table.beats_baseline_pct[s] = 100.0 * beats / pairs;
  }
}

GeneratedRecord generate_record(int order, double sigma, int length, std::uint64_t seed) {
  StateSpaceModel truth = random_model(order, substream_seed(seed, "model"));
  TimeSeries u = gaussian_series(length, 1, sigma, seed, "input");
  TimeSeries e = gaussian_series(length, 1, 1.0, seed, "noise");
  TimeSeries y = simulate(truth, u, e, Vector::Zero(order));
  return GeneratedRecord{std::move(truth), std::move(u), std::move(e), std::move(y)};
}

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

ComparisonRow run_comparison_row(const PipelineConfig& cfg,
                                 const std::vector<WeightingScheme>& schemes,
                                 const std::string& label, const TimeSeries& u_id,
                                 const TimeSeries& y_id, const TimeSeries& u_val,
                                 const TimeSeries& y_val) {
  ComparisonRow row;
  row.label = label;
  row.fits.assign(schemes.size(), kMissing);

  // The baseline stands in for an estimator with automatic weighting; CVA is
  // the fixed choice here.
  PipelineConfig base_cfg = cfg;
  base_cfg.scheme = WeightingScheme::kCva;
  base_cfg.estimation_scheme.reset();
  base_cfg.jobs = 1;
  try {
    row.baseline = baseline(u_id, y_id, u_val, y_val, base_cfg).report.average;
  } catch (const std::exception&) {
    row.baseline = kMissing;
  }

  for (size_t s = 0; s < schemes.size(); ++s) {
    PipelineConfig scfg = cfg;
    scfg.scheme = schemes[s];
    scfg.estimation_scheme.reset();
    scfg.jobs = 1;
    try {
      row.fits[s] = identify_best(u_id, y_id, u_val, y_val, scfg).report.average;
    } catch (const std::exception&) {
      row.fits[s] = kMissing;
    }
  }
  return row;
}

}  // namespace

ComparisonTable monte_carlo_study(const PipelineConfig& cfg, const StudyGrid& grid,
                                  std::uint64_t seed) {
  if (grid.orders.empty() || grid.sigmas.empty() || grid.seeds_per_cell < 1) {
    throw std::invalid_argument("monte_carlo_study: empty study grid");
  }
  struct Item {
    int order;
    double sigma;
    int rep;
  };
  std::vector<Item> items;
  for (int order : grid.orders) {
    for (double sigma : grid.sigmas) {
      for (int rep = 0; rep < grid.seeds_per_cell; ++rep) {
        items.push_back({order, sigma, rep});
      }
    }
  }

  ComparisonTable table;
  table.schemes = grid.schemes;
  table.rows.resize(items.size());

  parallel_for(static_cast<int>(items.size()), cfg.jobs, [&](int i) {
    const Item& it = items[i];
    char label[64];
    std::snprintf(label, sizeof(label), "n%d_s%g_k%d", it.order, it.sigma, it.rep);

    const std::uint64_t sys_seed = substream_seed(seed, "system", static_cast<std::uint64_t>(i));
    const GeneratedRecord id_rec = generate_record(it.order, it.sigma, grid.n_id, sys_seed);
    const std::uint64_t val_seed = substream_seed(sys_seed, "validation");
    TimeSeries u_val = gaussian_series(grid.n_val, 1, it.sigma, val_seed, "input");
    TimeSeries e_val = gaussian_series(grid.n_val, 1, 1.0, val_seed, "noise");
    TimeSeries y_val = simulate(id_rec.truth, u_val, e_val, Vector::Zero(it.order));

    table.rows[i] =
        run_comparison_row(cfg, grid.schemes, label, id_rec.u, id_rec.y, u_val, y_val);
  });

  recompute_summary(table);
  return table;
}

ComparisonTable datasets_study(const PipelineConfig& cfg,
                               const std::vector<std::pair<std::string, Dataset>>& datasets,
                               int split, const std::vector<WeightingScheme>& schemes) {
  if (datasets.empty()) {
    throw std::invalid_argument("datasets_study: no datasets given");
  }
  ComparisonTable table;
  table.schemes = schemes;
  table.rows.resize(datasets.size());

  parallel_for(static_cast<int>(datasets.size()), cfg.jobs, [&](int i) {
    const auto& [name, data] = datasets[i];
    ComparisonRow row;
    row.label = name;
    row.baseline = kMissing;
    row.fits.assign(schemes.size(), kMissing);
    try {
      if (split < 1 || split >= data.y.length()) {
        throw std::out_of_range("split " + std::to_string(split) +
                                " must lie strictly inside the record length " +
                                std::to_string(data.y.length()));
      }
      TimeSeries u_id(data.u.values().topRows(split));
      TimeSeries y_id(data.y.values().topRows(split));
      TimeSeries u_val(data.u.values().bottomRows(data.u.length() - split));
      TimeSeries y_val(data.y.values().bottomRows(data.y.length() - split));
      row = run_comparison_row(cfg, schemes, name, u_id, y_id, u_val, y_val);
    } catch (const std::exception&) {
      // leave the row as missing cells
    }
    table.rows[i] = std::move(row);
  });

  recompute_summary(table);
  return table;
}

}  // namespace nnsid
