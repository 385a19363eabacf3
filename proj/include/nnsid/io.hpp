#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "nnsid/pipeline.hpp"
#include "nnsid/timeseries.hpp"

namespace nnsid {

using Json = nlohmann::ordered_json;

/// Reads a record from CSV with header "t,u1..u{n_m},y1..y{n_p}" and a
/// consecutive integer index column starting at 0. Parse failures carry the
/// offending line number.
Dataset read_dataset_csv(const std::string& path);

/// Writes a record in the same layout, values at full precision (17
/// significant digits), so a read of the file reproduces the series exactly.
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Model document: integer dimensions, row-major matrix arrays and a
/// free-form metadata block. Values round-trip exactly.
void write_model_json(const std::string& path, const StateSpaceModel& model,
                      const Json& metadata);
StateSpaceModel read_model_json(const std::string& path, Json* metadata = nullptr);

Json report_to_json(const IdentifyResult& result);
void write_report_json(const std::string& path, const IdentifyResult& result);

Json table_to_json(const ComparisonTable& table);
void write_table_json(const std::string& path, const ComparisonTable& table);

/// Fixed-width text rendering of a comparison table, one row per system plus
/// average and beats-baseline summary rows.
std::string render_table_text(const ComparisonTable& table);

}  // namespace nnsid
