// Command-line front end: identify, benchmark, generate, denoise.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nnsid/io.hpp"
#include "nnsid/pipeline.hpp"
#include "nnsid/random.hpp"

namespace {

using namespace nnsid;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDegraded = 2;

WeightingScheme scheme_from_flag(const std::string& name) {
  const auto scheme = parse_scheme(name);
  if (!scheme) {
    throw CLI::ValidationError("--scheme", "unknown scheme '" + name + "'");
  }
  return *scheme;
}

std::vector<double> grid_from_flag(const std::string& text) {
  // lo:hi:count, e.g. 2e-3:1e3:20
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw CLI::ValidationError("--lambda-grid", "expected lo:hi:count");
  }
  try {
    const double lo = std::stod(text.substr(0, first));
    const double hi = std::stod(text.substr(first + 1, second - first - 1));
    const int count = std::stoi(text.substr(second + 1));
    if (count == 1) return {lo};
    return log_spaced_grid(lo, hi, count);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--lambda-grid", e.what());
  }
}

struct CommonOptions {
  std::string scheme = "cva";
  int r = 15;
  int s = 15;
  std::string lambda_grid = "2e-3:1e3:20";
  bool no_direct_term = false;
  bool stabilize = false;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;
};

void add_common_flags(CLI::App& cmd, CommonOptions& opt) {
  cmd.add_option("--scheme", opt.scheme, "weighting scheme (moesp|n4sid|ivm|cva|none|noinstr)");
  cmd.add_option("--r", opt.r, "future block rows");
  cmd.add_option("--s", opt.s, "past block rows (instrument depth)");
  cmd.add_option("--lambda-grid", opt.lambda_grid, "regularization grid as lo:hi:count");
  cmd.add_flag("--no-direct-term", opt.no_direct_term, "fix the direct term D at zero");
  cmd.add_flag("--stabilize", opt.stabilize, "rescale unstable estimates");
  cmd.add_option("--jobs", opt.jobs, "worker threads for independent grid points");
  cmd.add_option("--seed", opt.seed, "master seed for generated randomness");
}

PipelineConfig config_from(const CommonOptions& opt) {
  PipelineConfig cfg;
  cfg.scheme = scheme_from_flag(opt.scheme);
  cfg.r = opt.r;
  cfg.s = opt.s;
  cfg.lambda_grid = grid_from_flag(opt.lambda_grid);
  cfg.direct_term = !opt.no_direct_term;
  cfg.stabilize_models = opt.stabilize;
  cfg.jobs = opt.jobs;
  return cfg;
}

Dataset split_head(const Dataset& data, int split) {
  return Dataset(TimeSeries(data.u.values().topRows(split)),
                 TimeSeries(data.y.values().topRows(split)));
}

Dataset split_tail(const Dataset& data, int split) {
  const int rest = data.y.length() - split;
  return Dataset(TimeSeries(data.u.values().bottomRows(rest)),
                 TimeSeries(data.y.values().bottomRows(rest)));
}

int run_identify(const CommonOptions& opt, const std::string& data_path, int split,
                 const std::string& model_path, const std::string& report_path,
                 const std::string& trace_path) {
  const Dataset data = read_dataset_csv(data_path);
  if (split < 1 || split >= data.y.length()) {
    throw std::out_of_range("--split must lie strictly inside the record (1 <= split < " +
                            std::to_string(data.y.length()) + ")");
  }
  const Dataset id = split_head(data, split);
  const Dataset val = split_tail(data, split);

  PipelineConfig cfg = config_from(opt);
  std::ofstream trace_file;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) {
      throw std::runtime_error("cannot open trace file '" + trace_path + "'");
    }
    trace_file << "iter,rp,rd,eps_p,eps_d,t,objective\n";
    cfg.admm.trace = &trace_file;
  }

  const IdentifyResult res = identify_best(id.u, id.y, val.u, val.y, cfg);

  Json metadata;
  metadata["scheme"] = std::string(scheme_name(res.report.scheme));
  if (res.report.lambda_used) metadata["lambda"] = *res.report.lambda_used;
  metadata["singular_values"] = res.singular_values;
  metadata["source"] = data_path;
  metadata["split"] = split;
  write_model_json(model_path, res.model, metadata);
  write_report_json(report_path, res);

  std::printf("fit %.4f%%  order %d", res.report.average, res.report.order);
  if (res.report.lambda_used) std::printf("  lambda %.6g", *res.report.lambda_used);
  if (res.degraded) std::printf("  [degraded]");
  std::printf("\n");
  return res.degraded ? kExitDegraded : kExitOk;
}

int run_benchmark(const CommonOptions& opt, bool random_mode, const std::string& orders_flag,
                  const std::string& sigmas_flag, int seeds_per_cell, int n_id, int n_val,
                  const std::string& datasets_dir, int split, const std::string& schemes_flag,
                  const std::string& out_path) {
  PipelineConfig cfg = config_from(opt);

  std::vector<WeightingScheme> schemes;
  {
    std::stringstream ss(schemes_flag);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) schemes.push_back(scheme_from_flag(name));
    }
    if (schemes.empty()) {
      throw std::invalid_argument("--schemes must name at least one scheme");
    }
  }

  ComparisonTable table;
  if (random_mode) {
    StudyGrid grid;
    grid.orders.clear();
    {
      std::stringstream ss(orders_flag);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) grid.orders.push_back(std::stoi(tok));
      }
    }
    grid.sigmas.clear();
    {
      std::stringstream ss(sigmas_flag);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) grid.sigmas.push_back(std::stod(tok));
      }
    }
    grid.seeds_per_cell = seeds_per_cell;
    grid.n_id = n_id;
    grid.n_val = n_val;
    grid.schemes = schemes;
    table = monte_carlo_study(cfg, grid, opt.seed);
  } else {
    std::vector<std::pair<std::string, Dataset>> datasets;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(datasets_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      datasets.emplace_back(file.stem().string(), read_dataset_csv(file.string()));
    }
    if (datasets.empty()) {
      throw std::runtime_error("no .csv datasets found in '" + datasets_dir + "'");
    }
    table = datasets_study(cfg, datasets, split, schemes);
  }

  if (!out_path.empty()) {
    write_table_json(out_path, table);
  }
  std::cout << render_table_text(table);
  return kExitOk;
}

int run_generate(std::uint64_t seed, int order, double sigma, int length,
                 const std::string& out_path, std::string truth_path) {
  if (length < 2) {
    throw std::invalid_argument("--length must be at least 2");
  }
  const GeneratedRecord rec = generate_record(order, sigma, length, seed);
  write_dataset_csv(out_path, Dataset(rec.u, rec.y));
  if (truth_path.empty()) {
    truth_path = out_path + ".truth.json";
  }
  Json metadata;
  metadata["seed"] = seed;
  metadata["sigma"] = sigma;
  metadata["length"] = length;
  write_model_json(truth_path, rec.truth, metadata);
  std::printf("wrote %s (%d samples) and %s\n", out_path.c_str(), length, truth_path.c_str());
  return kExitOk;
}

int run_denoise(const CommonOptions& opt, const std::string& data_path, double lambda,
                const std::string& out_path, std::string sidecar_path,
                const std::string& trace_path) {
  const Dataset data = read_dataset_csv(data_path);
  PipelineConfig cfg = config_from(opt);

  std::ofstream trace_file;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) {
      throw std::runtime_error("cannot open trace file '" + trace_path + "'");
    }
    trace_file << "iter,rp,rd,eps_p,eps_d,t,objective\n";
    cfg.admm.trace = &trace_file;
  }

  const DenoiseResult res = denoise(data.u, data.y, cfg, lambda);
  write_dataset_csv(out_path, Dataset(data.u, res.y));

  if (sidecar_path.empty()) {
    sidecar_path = out_path + ".meta.json";
  }
  Json sidecar;
  sidecar["scheme"] = std::string(scheme_name(cfg.scheme));
  sidecar["lambda"] = lambda;
  sidecar["converged"] = res.converged;
  sidecar["iterations"] = res.iterations;
  sidecar["nuc_norm_before"] = res.nuc_norm_before;
  sidecar["nuc_norm_after"] = res.nuc_norm_after;
  std::ofstream side(sidecar_path);
  if (!side) {
    throw std::runtime_error("cannot open '" + sidecar_path + "' for writing");
  }
  side << sidecar.dump(2) << "\n";

  std::printf("nuclear norm %.6g -> %.6g in %d iterations%s\n", res.nuc_norm_before,
              res.nuc_norm_after, res.iterations, res.converged ? "" : " [not converged]");
  return res.converged ? kExitOk : kExitDegraded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted nuclear-norm pre-processing for subspace system identification"};
  app.require_subcommand(1);

  CommonOptions opt;

  // identify
  auto* identify = app.add_subcommand("identify", "denoise, estimate and score a model");
  std::string id_data, id_model = "model.json", id_report = "report.json", id_trace;
  int id_split = 0;
  identify->add_option("--data", id_data, "input CSV record")->required();
  identify->add_option("--split", id_split, "identification length; the rest is validation")
      ->required();
  identify->add_option("--out", id_model, "model output path");
  identify->add_option("--report", id_report, "fit report output path");
  identify->add_option("--trace", id_trace, "per-iteration solver trace output path");
  add_common_flags(*identify, opt);

  // benchmark
  auto* benchmark = app.add_subcommand("benchmark", "compare schemes against the baseline");
  bool bm_random = false;
  std::string bm_orders = "4,6,8", bm_sigmas = "2,6,10", bm_datasets, bm_out = "table.json";
  std::string bm_schemes = "moesp,n4sid,ivm,cva,none,noinstr";
  int bm_seeds = 3, bm_n_id = 300, bm_n_val = 1500, bm_split = 0;
  benchmark->add_flag("--random", bm_random, "run on randomly generated systems");
  benchmark->add_option("--orders", bm_orders, "comma-separated system orders");
  benchmark->add_option("--sigmas", bm_sigmas, "comma-separated input scales");
  benchmark->add_option("--seeds", bm_seeds, "repetitions per (order, sigma) cell");
  benchmark->add_option("--n-id", bm_n_id, "identification record length");
  benchmark->add_option("--n-val", bm_n_val, "validation record length");
  benchmark->add_option("--datasets", bm_datasets, "directory of CSV records");
  benchmark->add_option("--split", bm_split, "identification length for dataset records");
  benchmark->add_option("--schemes", bm_schemes, "comma-separated schemes to compare");
  benchmark->add_option("--out", bm_out, "comparison table output path");
  add_common_flags(*benchmark, opt);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a random-system record");
  int gen_order = 4, gen_length = 1800;
  double gen_sigma = 2.0;
  std::string gen_out = "data.csv", gen_truth;
  std::uint64_t gen_seed = 0;
  generate->add_option("--order", gen_order, "true system order")->required();
  generate->add_option("--sigma", gen_sigma, "input scale")->required();
  generate->add_option("--length", gen_length, "record length")->required();
  generate->add_option("--seed", gen_seed, "master seed")->required();
  generate->add_option("--out", gen_out, "CSV output path");
  generate->add_option("--truth", gen_truth, "ground-truth model output path");

  // denoise
  auto* dn = app.add_subcommand("denoise", "solve the nuclear-norm program for one lambda");
  std::string dn_data, dn_out = "denoised.csv", dn_sidecar, dn_trace;
  double dn_lambda = 0.0;
  dn->add_option("--data", dn_data, "input CSV record")->required();
  dn->add_option("--lambda", dn_lambda, "regularization weight")->required();
  dn->add_option("--out", dn_out, "denoised CSV output path");
  dn->add_option("--sidecar", dn_sidecar, "solver summary output path");
  dn->add_option("--trace", dn_trace, "per-iteration solver trace output path");
  add_common_flags(*dn, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (identify->parsed()) {
      return run_identify(opt, id_data, id_split, id_model, id_report, id_trace);
    }
    if (benchmark->parsed()) {
      if (bm_random && !bm_datasets.empty()) {
        throw std::invalid_argument("benchmark takes either --random or --datasets, not both");
      }
      if (!bm_random && bm_datasets.empty()) {
        throw std::invalid_argument("benchmark needs either --random or --datasets <dir>");
      }
      return run_benchmark(opt, bm_random, bm_orders, bm_sigmas, bm_seeds, bm_n_id, bm_n_val,
                           bm_datasets, bm_split, bm_schemes, bm_out);
    }
    if (generate->parsed()) {
      return run_generate(gen_seed, gen_order, gen_sigma, gen_length, gen_out, gen_truth);
    }
    if (dn->parsed()) {
      return run_denoise(opt, dn_data, dn_lambda, dn_out, dn_sidecar, dn_trace);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
