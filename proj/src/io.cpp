#include "nnsid/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace nnsid {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& path, int line_no, const std::string& field) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    parse_fail(path, line_no, "cannot parse '" + field + "' as a number");
  }
  if (!std::isfinite(v)) {
    parse_fail(path, line_no, "non-finite value '" + field + "'");
  }
  return v;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file '" + path + "'");
  }
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) {
    parse_fail(path, 1, "empty file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.empty() || header[0] != "t") {
    parse_fail(path, line_no, "header must start with column 't'");
  }
  int n_m = 0;
  size_t col = 1;
  while (col < header.size() && header[col] == "u" + std::to_string(n_m + 1)) {
    ++n_m;
    ++col;
  }
  int n_p = 0;
  while (col < header.size() && header[col] == "y" + std::to_string(n_p + 1)) {
    ++n_p;
    ++col;
  }
  if (n_m < 1 || n_p < 1 || col != header.size()) {
    parse_fail(path, line_no, "header must be t,u1..u{n},y1..y{m}");
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (static_cast<int>(fields.size()) != 1 + n_m + n_p) {
      parse_fail(path, line_no,
                 "expected " + std::to_string(1 + n_m + n_p) + " fields, got " +
                     std::to_string(fields.size()));
    }
    const double t = parse_double(path, line_no, fields[0]);
    const int expected = static_cast<int>(rows.size());
    if (t != static_cast<double>(expected)) {
      parse_fail(path, line_no,
                 "sample index must be " + std::to_string(expected) + ", got '" + fields[0] + "'");
    }
    std::vector<double> row(n_m + n_p);
    for (int j = 0; j < n_m + n_p; ++j) {
      row[j] = parse_double(path, line_no, fields[1 + j]);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    parse_fail(path, line_no, "no data rows");
  }

  Matrix u(rows.size(), n_m), y(rows.size(), n_p);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < n_m; ++j) u(i, j) = rows[i][j];
    for (int j = 0; j < n_p; ++j) y(i, j) = rows[i][n_m + j];
  }
  return Dataset(TimeSeries(std::move(u)), TimeSeries(std::move(y)));
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << "t";
  for (int j = 0; j < data.u.channels(); ++j) out << ",u" << (j + 1);
  for (int j = 0; j < data.y.channels(); ++j) out << ",y" << (j + 1);
  out << "\n";
  for (int t = 0; t < data.y.length(); ++t) {
    out << t;
    for (int j = 0; j < data.u.channels(); ++j) out << "," << format_full(data.u(t, j));
    for (int j = 0; j < data.y.channels(); ++j) out << "," << format_full(data.y(t, j));
    out << "\n";
  }
  if (!out) {
    throw std::runtime_error("write to '" + path + "' failed");
  }
}

namespace {

Json matrix_to_json(const Matrix& m) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      arr.push_back(m(i, j));
    }
  }
  return arr;
}

Matrix matrix_from_json(const Json& arr, Eigen::Index rows, Eigen::Index cols,
                        const std::string& name) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
    throw std::runtime_error("model file: array '" + name + "' must have " +
                             std::to_string(rows * cols) + " entries");
  }
  Matrix m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = arr.at(k++).get<double>();
    }
  }
  return m;
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("write to '" + path + "' failed");
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace

void write_model_json(const std::string& path, const StateSpaceModel& model,
                      const Json& metadata) {
  model.validate();
  Json doc;
  doc["n_x"] = model.order;
  doc["n_m"] = model.inputs();
  doc["n_p"] = model.outputs();
  doc["A"] = matrix_to_json(model.A);
  doc["B"] = matrix_to_json(model.B);
  doc["C"] = matrix_to_json(model.C);
  doc["D"] = matrix_to_json(model.D);
  doc["K"] = matrix_to_json(model.K);
  doc["stabilized"] = model.stabilized;
  doc["metadata"] = metadata;
  write_json_file(path, doc);
}

StateSpaceModel read_model_json(const std::string& path, Json* metadata) {
  const Json doc = load_json_file(path);
  StateSpaceModel model;
  try {
    model.order = doc.at("n_x").get<int>();
    const int n_m = doc.at("n_m").get<int>();
    const int n_p = doc.at("n_p").get<int>();
    if (model.order < 1 || n_m < 1 || n_p < 1) {
      throw std::runtime_error("model file: dimensions must be positive");
    }
    model.A = matrix_from_json(doc.at("A"), model.order, model.order, "A");
    model.B = matrix_from_json(doc.at("B"), model.order, n_m, "B");
    model.C = matrix_from_json(doc.at("C"), n_p, model.order, "C");
    model.D = matrix_from_json(doc.at("D"), n_p, n_m, "D");
    model.K = matrix_from_json(doc.at("K"), model.order, n_p, "K");
    model.stabilized = doc.value("stabilized", false);
    if (metadata != nullptr) {
      *metadata = doc.value("metadata", Json::object());
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  model.validate();
  return model;
}

Json report_to_json(const IdentifyResult& result) {
  Json doc;
  doc["scheme"] = std::string(scheme_name(result.report.scheme));
  doc["order"] = result.report.order;
  if (result.report.lambda_used) {
    doc["lambda"] = *result.report.lambda_used;
  }
  doc["fit_per_channel"] = result.report.per_channel;
  doc["fit_average"] = result.report.average;
  doc["degraded"] = result.degraded;
  doc["x0_fallback"] = result.x0_fallback;
  doc["singular_values"] = result.singular_values;
  Json sweep = Json::array();
  for (const SweepPoint& pt : result.sweep) {
    Json entry;
    entry["lambda"] = pt.lambda;
    if (pt.failed) {
      entry["failed"] = true;
      entry["error"] = pt.error;
    } else {
      entry["fit"] = pt.fit;
      entry["order"] = pt.order;
      entry["converged"] = pt.converged;
    }
    sweep.push_back(std::move(entry));
  }
  doc["sweep"] = std::move(sweep);
  return doc;
}

void write_report_json(const std::string& path, const IdentifyResult& result) {
  write_json_file(path, report_to_json(result));
}

Json table_to_json(const ComparisonTable& table) {
  Json doc;
  Json schemes = Json::array();
  for (WeightingScheme s : table.schemes) schemes.push_back(std::string(scheme_name(s)));
  doc["schemes"] = std::move(schemes);

  const auto cell = [](double v) -> Json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  Json rows = Json::array();
  for (const ComparisonRow& row : table.rows) {
    Json r;
    r["label"] = row.label;
    r["baseline"] = cell(row.baseline);
    Json fits = Json::object();
    for (size_t s = 0; s < table.schemes.size(); ++s) {
      fits[std::string(scheme_name(table.schemes[s]))] = cell(row.fits[s]);
    }
    r["fits"] = std::move(fits);
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  doc["average_baseline"] = cell(table.average_baseline);
  Json avg = Json::object(), beats = Json::object();
  for (size_t s = 0; s < table.schemes.size(); ++s) {
    const std::string name(scheme_name(table.schemes[s]));
    avg[name] = cell(table.average_fits[s]);
    beats[name] = cell(table.beats_baseline_pct[s]);
  }
  doc["average_fits"] = std::move(avg);
  doc["beats_baseline_pct"] = std::move(beats);
  return doc;
}

void write_table_json(const std::string& path, const ComparisonTable& table) {
  write_json_file(path, table_to_json(table));
}

std::string render_table_text(const ComparisonTable& table) {
  size_t label_width = std::string("beats baseline %").size();
  for (const ComparisonRow& row : table.rows) {
    label_width = std::max(label_width, row.label.size());
  }

  const auto cell_text = [](double v) -> std::string {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
  };

  std::ostringstream out;
  const auto emit_row = [&](const std::string& label, const std::string& base,
                            const std::vector<std::string>& cells) {
    out << label;
    out << std::string(label_width - label.size(), ' ');
    out << "  " << std::string(base.size() >= 10 ? 0 : 10 - base.size(), ' ') << base;
    for (const std::string& c : cells) {
      out << "  " << std::string(c.size() >= 10 ? 0 : 10 - c.size(), ' ') << c;
    }
    out << "\n";
  };

  std::vector<std::string> header_cells;
  for (WeightingScheme s : table.schemes) header_cells.emplace_back(scheme_name(s));
  emit_row("system", "baseline", header_cells);
  for (const ComparisonRow& row : table.rows) {
    std::vector<std::string> cells;
    for (double v : row.fits) cells.push_back(cell_text(v));
    emit_row(row.label, cell_text(row.baseline), cells);
  }
  std::vector<std::string> avg_cells, beats_cells;
  for (size_t s = 0; s < table.schemes.size(); ++s) {
    avg_cells.push_back(cell_text(table.average_fits[s]));
    beats_cells.push_back(cell_text(table.beats_baseline_pct[s]));
  }
  emit_row("average", cell_text(table.average_baseline), avg_cells);
  emit_row("beats baseline %", "-", beats_cells);
  return out.str();
}

}  // namespace nnsid
