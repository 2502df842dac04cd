#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/types.hpp"

namespace motionforge::jsonutil {

using nlohmann::json;

// Throws Error(input_missing) when absent, Error(contract) on parse failure.
json read_json_file(const std::filesystem::path& path);
// Writes via a temporary file and rename.
void write_json_file(const std::filesystem::path& path, const json& doc, int indent = -1);

// Numeric arrays are either plain JSON arrays or binary blobs:
//   {"dtype": "f64" | "i32", "shape": [...], "b64": "<little-endian bytes>"}
// Errors (contract) carry `where` as the field path.
std::vector<double> read_f64_array(const json& node, const std::string& where);
std::vector<std::int64_t> read_int_array(const json& node, const std::string& where);

json f64_blob(const double* data, std::size_t count, std::vector<std::size_t> shape);
json i32_blob(const std::int32_t* data, std::size_t count, std::vector<std::size_t> shape);

double read_number(const json& node, const std::string& key, const std::string& where);
const json& require(const json& node, const std::string& key, const std::string& where);

bool all_finite(const std::vector<double>& values);

}  // namespace motionforge::jsonutil
