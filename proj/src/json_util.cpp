#include "motionforge/json_util.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "motionforge/base64.hpp"
#include "motionforge/error.hpp"

namespace motionforge {

std::string_view error_kind(ErrorCode code) {
    switch (code) {
        case ErrorCode::config: return "config";
        case ErrorCode::input_missing: return "input-missing";
        case ErrorCode::contract: return "contract-violation";
        case ErrorCode::internal: return "internal";
    }
    return "internal";
}

}  // namespace motionforge

namespace motionforge::jsonutil {

static_assert(std::endian::native == std::endian::little, "blob decoding assumes a little-endian host");

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::input_missing, "input missing: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::contract, path.string() + ": parse failure: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc, int indent) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::internal, "cannot write " + tmp.string());
        out << doc.dump(indent) << '\n';
        if (!out) fail(ErrorCode::internal, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::size_t shape_product(const json& shape, const std::string& where) {
    if (!shape.is_array()) fail(ErrorCode::contract, where + ".shape: expected array");
    std::size_t n = 1;
    for (const auto& d : shape) {
        if (!d.is_number_integer() || d.get<std::int64_t>() < 0)
            fail(ErrorCode::contract, where + ".shape: expected non-negative integers");
        n *= d.get<std::size_t>();
    }
    return n;
}

std::vector<std::uint8_t> blob_bytes(const json& node, const std::string& where, std::size_t elem,
                                     std::size_t* count) {
    const auto& b64 = require(node, "b64", where);
    if (!b64.is_string()) fail(ErrorCode::contract, where + ".b64: expected string");
    auto bytes = base64::decode(b64.get<std::string>());
    if (bytes.size() % elem != 0) fail(ErrorCode::contract, where + ": blob size not a multiple of element size");
    *count = bytes.size() / elem;
    if (node.contains("shape") && shape_product(node["shape"], where) != *count)
        fail(ErrorCode::contract, where + ": blob length does not match shape");
    return bytes;
}

}  // namespace

std::vector<double> read_f64_array(const json& node, const std::string& where) {
    std::vector<double> out;
    if (node.is_array()) {
        out.reserve(node.size());
        for (std::size_t i = 0; i < node.size(); ++i) {
            if (!node[i].is_number())
                fail(ErrorCode::contract, where + "[" + std::to_string(i) + "]: expected number");
            out.push_back(node[i].get<double>());
        }
        return out;
    }
    if (node.is_object()) {
        const auto dtype = node.value("dtype", std::string("f64"));
        if (dtype != "f64") fail(ErrorCode::contract, where + ".dtype: expected f64, got " + dtype);
        std::size_t count = 0;
        const auto bytes = blob_bytes(node, where, sizeof(double), &count);
        out.resize(count);
        std::memcpy(out.data(), bytes.data(), bytes.size());
        return out;
    }
    fail(ErrorCode::contract, where + ": expected numeric array or blob");
}

std::vector<std::int64_t> read_int_array(const json& node, const std::string& where) {
    std::vector<std::int64_t> out;
    if (node.is_array()) {
        out.reserve(node.size());
        for (std::size_t i = 0; i < node.size(); ++i) {
            if (!node[i].is_number_integer())
                fail(ErrorCode::contract, where + "[" + std::to_string(i) + "]: expected integer");
            out.push_back(node[i].get<std::int64_t>());
        }
        return out;
    }
    if (node.is_object()) {
        const auto dtype = node.value("dtype", std::string("i32"));
        if (dtype != "i32") fail(ErrorCode::contract, where + ".dtype: expected i32, got " + dtype);
        std::size_t count = 0;
        const auto bytes = blob_bytes(node, where, sizeof(std::int32_t), &count);
        std::vector<std::int32_t> raw(count);
        std::memcpy(raw.data(), bytes.data(), bytes.size());
        out.assign(raw.begin(), raw.end());
        return out;
    }
    fail(ErrorCode::contract, where + ": expected integer array or blob");
}

json f64_blob(const double* data, std::size_t count, std::vector<std::size_t> shape) {
    std::vector<std::uint8_t> bytes(count * sizeof(double));
    if (count > 0) std::memcpy(bytes.data(), data, bytes.size());
    return json{{"dtype", "f64"}, {"shape", shape}, {"b64", base64::encode(bytes)}};
}

json i32_blob(const std::int32_t* data, std::size_t count, std::vector<std::size_t> shape) {
    std::vector<std::uint8_t> bytes(count * sizeof(std::int32_t));
    if (count > 0) std::memcpy(bytes.data(), data, bytes.size());
    return json{{"dtype", "i32"}, {"shape", shape}, {"b64", base64::encode(bytes)}};
}

const json& require(const json& node, const std::string& key, const std::string& where) {
    if (!node.is_object() || !node.contains(key))
        fail(ErrorCode::contract, (where.empty() ? key : where + "." + key) + ": missing field");
    return node[key];
}

double read_number(const json& node, const std::string& key, const std::string& where) {
    const auto& v = require(node, key, where);
    if (!v.is_number()) fail(ErrorCode::contract, (where.empty() ? key : where + "." + key) + ": expected number");
    return v.get<double>();
}

bool all_finite(const std::vector<double>& values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace motionforge::jsonutil
