#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nnsid/io.hpp"

using namespace nnsid;

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "nnsid_cli_tests";
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(NNSID_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
  const int status = pclose(pipe);
  return CliResult{WEXITSTATUS(status), std::move(output)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& dataset_path() {
  static const std::string path = [] {
    const fs::path p = work_dir() / "data.csv";
    const CliResult res = run_cli("generate --order 3 --sigma 4 --length 260 --seed 11 --out " +
                                  p.string() + " --truth " + (work_dir() / "truth.json").string());
    REQUIRE(res.exit_code == 0);
    return p.string();
  }();
  return path;
}

}  // namespace

TEST_CASE("cli generate writes a readable record and ground truth with no direct term") {
  const Dataset data = read_dataset_csv(dataset_path());
  CHECK(data.y.length() == 260);
  const StateSpaceModel truth = read_model_json((work_dir() / "truth.json").string());
  CHECK(truth.order == 3);
  CHECK(truth.D.isZero(0.0));
}

TEST_CASE("cli generate is reproducible") {
  const fs::path again = work_dir() / "data_again.csv";
  const CliResult res = run_cli("generate --order 3 --sigma 4 --length 260 --seed 11 --out " +
                                again.string() + " --truth " + (work_dir() / "t2.json").string());
  CHECK(res.exit_code == 0);
  CHECK(slurp(again) == slurp(dataset_path()));
}

TEST_CASE("cli identify runs the sweep and writes model and report") {
  const fs::path model = work_dir() / "model.json";
  const fs::path report = work_dir() / "report.json";
  const CliResult res =
      run_cli("identify --data " + dataset_path() + " --split 180 --scheme cva --r 8 --s 8" +
              " --lambda-grid 1e-2:1e2:4 --out " + model.string() + " --report " +
              report.string());
  CHECK((res.exit_code == 0 || res.exit_code == 2));
  CHECK(res.output.find("fit") != std::string::npos);

  Json meta;
  const StateSpaceModel m = read_model_json(model.string(), &meta);
  CHECK(m.order >= 1);
  CHECK(meta.contains("lambda"));

  const Json rep = Json::parse(slurp(report));
  CHECK(rep["sweep"].size() == 4);
  CHECK(rep["scheme"] == "cva");
}

TEST_CASE("cli identify rejects an out-of-range split with exit 1") {
  const CliResult res = run_cli("identify --data " + dataset_path() + " --split 9999");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("split") != std::string::npos);
}

TEST_CASE("cli identify reports CSV parse errors with the line number") {
  const fs::path bad = work_dir() / "bad.csv";
  std::ofstream(bad) << "t,u1,y1\n0,1.0,2.0\n1,oops,3.0\n";
  const CliResult res = run_cli("identify --data " + bad.string() + " --split 1");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find(":3:") != std::string::npos);
}

TEST_CASE("cli identify rejects unknown schemes") {
  const CliResult res = run_cli("identify --data " + dataset_path() + " --split 180 --scheme xyz");
  CHECK(res.exit_code == 1);
}

TEST_CASE("cli denoise passes input channels through and writes the sidecar") {
  const fs::path out = work_dir() / "denoised.csv";
  const fs::path sidecar = work_dir() / "denoised.meta.json";
  const CliResult res = run_cli("denoise --data " + dataset_path() +
                                " --lambda 0.05 --scheme cva --r 8 --s 8 --out " + out.string() +
                                " --sidecar " + sidecar.string());
  CHECK(res.exit_code == 0);

  const Dataset original = read_dataset_csv(dataset_path());
  const Dataset denoised = read_dataset_csv(out.string());
  CHECK(denoised.u.values() == original.u.values());
  CHECK(denoised.y.values() != original.y.values());

  const Json side = Json::parse(slurp(sidecar));
  CHECK(side["converged"] == true);
  CHECK(side["nuc_norm_after"].get<double>() <=
        side["nuc_norm_before"].get<double>() * (1.0 + 1e-8));
}

TEST_CASE("cli denoise with a huge lambda reproduces the input closely") {
  const fs::path out = work_dir() / "denoised_hi.csv";
  const CliResult res = run_cli("denoise --data " + dataset_path() +
                                " --lambda 1e3 --scheme cva --r 8 --s 8 --out " + out.string());
  CHECK(res.exit_code == 0);
  const Dataset original = read_dataset_csv(dataset_path());
  const Dataset denoised = read_dataset_csv(out.string());
  CHECK((denoised.y.values() - original.y.values()).norm() <=
        1e-3 * original.y.values().norm());
}

TEST_CASE("cli identify writes a solver trace when asked") {
  const fs::path trace = work_dir() / "trace.csv";
  const CliResult res =
      run_cli("identify --data " + dataset_path() + " --split 180 --scheme cva --r 8 --s 8" +
              " --lambda-grid 1e-1:1e1:2 --trace " + trace.string() + " --out " +
              (work_dir() / "mt.json").string() + " --report " +
              (work_dir() / "rt.json").string());
  CHECK((res.exit_code == 0 || res.exit_code == 2));
  const std::string text = slurp(trace);
  CHECK(text.rfind("iter,rp,rd,eps_p,eps_d,t,objective", 0) == 0);
  CHECK(text.find("# solve lambda=") != std::string::npos);
}

TEST_CASE("cli benchmark on a tiny random grid emits the table") {
  const fs::path out = work_dir() / "table.json";
  const CliResult res = run_cli(
      "benchmark --random --orders 2 --sigmas 4 --seeds 1 --n-id 120 --n-val 120 --schemes cva" +
      std::string(" --r 6 --s 6 --lambda-grid 1e-1:1e1:2 --seed 3 --out ") + out.string());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("beats baseline %") != std::string::npos);
  const Json doc = Json::parse(slurp(out));
  CHECK(doc["rows"].size() == 1);
  CHECK(doc["schemes"][0] == "cva");
}

TEST_CASE("cli benchmark requires a data source and a nonempty dataset directory") {
  CHECK(run_cli("benchmark --schemes cva").exit_code == 1);
  const fs::path empty = work_dir() / "empty_dir";
  fs::create_directories(empty);
  const CliResult res = run_cli("benchmark --datasets " + empty.string() + " --split 10");
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("csv") != std::string::npos);
}

TEST_CASE("cli benchmark over a dataset directory fills rows per file") {
  const fs::path dir = work_dir() / "sets";
  fs::create_directories(dir);
  fs::copy_file(dataset_path(), dir / "one.csv", fs::copy_options::overwrite_existing);
  const fs::path out = work_dir() / "sets_table.json";
  const CliResult res =
      run_cli("benchmark --datasets " + dir.string() +
              " --split 180 --schemes cva --r 6 --s 6 --lambda-grid 1e-1:1e1:2 --out " +
              out.string());
  CHECK(res.exit_code == 0);
  const Json doc = Json::parse(slurp(out));
  REQUIRE(doc["rows"].size() == 1);
  CHECK(doc["rows"][0]["label"] == "one");
}

TEST_CASE("cli rejects bad usage") {
  CHECK(run_cli("").exit_code != 0);
  CHECK(run_cli("identify").exit_code == 1);               // missing required flags
  CHECK(run_cli("generate --order 0 --sigma 1 --length 10 --seed 1 --out " +
                (work_dir() / "x.csv").string())
            .exit_code == 1);
}
