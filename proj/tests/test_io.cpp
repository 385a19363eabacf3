#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nnsid/io.hpp"
#include "test_helpers.hpp"

using namespace nnsid;
using namespace nnsid::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "nnsid_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("dataset CSV round-trips exactly") {
  std::mt19937_64 rng(1);
  const Dataset data(random_series(rng, 37, 2), random_series(rng, 37, 3));
  const auto path = temp_file("roundtrip.csv");
  write_dataset_csv(path.string(), data);
  const Dataset back = read_dataset_csv(path.string());
  CHECK(back.u.values() == data.u.values());
  CHECK(back.y.values() == data.y.values());
}

TEST_CASE("dataset CSV reports parse errors with line numbers") {
  const auto path = temp_file("bad.csv");

  spit(path, "t,u1,y1\n0,1.0,2.0\n1,xyz,3.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path.string()), doctest::Contains(":3:"),
                       std::runtime_error);

  spit(path, "t,u1,y1\n5,1.0,2.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path.string()), doctest::Contains(":2:"),
                       std::runtime_error);

  spit(path, "t,u1,y1\n0,1.0\n");
  CHECK_THROWS_WITH_AS(read_dataset_csv(path.string()), doctest::Contains("fields"),
                       std::runtime_error);

  spit(path, "time,u1,y1\n0,1.0,2.0\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), std::runtime_error);

  spit(path, "t,u1\n0,1.0\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), std::runtime_error);

  CHECK_THROWS_AS(read_dataset_csv((temp_file("missing_dir") / "nope.csv").string()),
                  std::runtime_error);
}

TEST_CASE("model JSON round-trips bit-exactly") {
  std::mt19937_64 rng(2);
  StateSpaceModel m;
  m.order = 3;
  m.A = random_matrix(rng, 3, 3);
  m.B = random_matrix(rng, 3, 2);
  m.C = random_matrix(rng, 2, 3);
  m.D = random_matrix(rng, 2, 2);
  m.K = random_matrix(rng, 3, 2);

  Json meta;
  meta["scheme"] = "cva";
  meta["lambda"] = 0.125;

  const auto path = temp_file("model.json");
  write_model_json(path.string(), m, meta);

  Json meta_back;
  const StateSpaceModel back = read_model_json(path.string(), &meta_back);
  CHECK(back.A == m.A);
  CHECK(back.B == m.B);
  CHECK(back.C == m.C);
  CHECK(back.D == m.D);
  CHECK(back.K == m.K);
  CHECK(back.order == 3);
  CHECK(meta_back["scheme"] == "cva");

  const auto path2 = temp_file("model2.json");
  write_model_json(path2.string(), back, meta_back);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("model JSON validates dimensions") {
  const auto path = temp_file("badmodel.json");
  spit(path, R"({"n_x": 2, "n_m": 1, "n_p": 1, "A": [1.0], "B": [1.0, 1.0],
                 "C": [1.0, 1.0], "D": [0.0], "K": [0.0, 0.0]})");
  CHECK_THROWS_WITH_AS(read_model_json(path.string()), doctest::Contains("A"),
                       std::runtime_error);
}

TEST_CASE("report JSON carries the sweep") {
  IdentifyResult res;
  res.model.order = 1;
  res.report.average = 85.5;
  res.report.per_channel = {85.5};
  res.report.order = 1;
  res.report.lambda_used = 0.5;
  res.report.scheme = WeightingScheme::kIvm;
  res.singular_values = {2.0, 1.0, 0.1};
  res.sweep.push_back({0.5, 85.5, 1, true, false, ""});
  res.sweep.push_back({5.0, 0.0, 0, false, true, "boom"});

  const Json doc = report_to_json(res);
  CHECK(doc["scheme"] == "ivm");
  CHECK(doc["lambda"] == 0.5);
  CHECK(doc["fit_average"] == 85.5);
  REQUIRE(doc["sweep"].size() == 2);
  CHECK(doc["sweep"][1]["failed"] == true);
  CHECK(doc["sweep"][0]["converged"] == true);

  IdentifyResult no_lambda = res;
  no_lambda.report.lambda_used.reset();
  CHECK(!report_to_json(no_lambda).contains("lambda"));
}

TEST_CASE("comparison table JSON and text agree on missing cells") {
  ComparisonTable table;
  table.schemes = {WeightingScheme::kCva};
  table.rows.resize(2);
  table.rows[0].label = "a";
  table.rows[0].baseline = 50.0;
  table.rows[0].fits = {75.0};
  table.rows[1].label = "b";
  table.rows[1].baseline = std::numeric_limits<double>::quiet_NaN();
  table.rows[1].fits = {25.0};
  recompute_summary(table);

  const Json doc = table_to_json(table);
  CHECK(doc["rows"][0]["fits"]["cva"] == 75.0);
  CHECK(doc["rows"][1]["baseline"].is_null());
  CHECK(doc["beats_baseline_pct"]["cva"] == 100.0);

  const std::string text = render_table_text(table);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(text.find("beats baseline %") != std::string::npos);
  CHECK(text.find("75.00") != std::string::npos);
}
