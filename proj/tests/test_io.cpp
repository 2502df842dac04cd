#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "motionforge/base64.hpp"
#include "motionforge/digest.hpp"
#include "motionforge/error.hpp"
#include "motionforge/image_io.hpp"
#include "motionforge/json_util.hpp"
#include "motionforge/render.hpp"

using namespace motionforge;
using nlohmann::json;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const auto dir = fixtures::temp_dir("sha");
    write_file(dir / "f", std::string("abc"));
    CHECK(sha256_file(dir / "f") == sha256_hex(std::string_view("abc")));
    CHECK_THROWS_AS(sha256_file(dir / "missing"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("base64 vectors and round trip") {
    auto bytes = [](std::string_view s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
    CHECK(base64::encode(bytes("")) == "");
    CHECK(base64::encode(bytes("f")) == "Zg==");
    CHECK(base64::encode(bytes("fo")) == "Zm8=");
    CHECK(base64::encode(bytes("foobar")) == "Zm9vYmFy");
    CHECK(base64::decode("Zm9vYmE=") == bytes("fooba"));
    std::mt19937_64 gen(1);
    for (int n = 0; n < 40; ++n) {
        std::vector<std::uint8_t> v(n);
        for (auto& b : v) b = static_cast<std::uint8_t>(gen());
        CHECK(base64::decode(base64::encode(v)) == v);
    }
    CHECK_THROWS(base64::decode("Zm9v!"));
}

TEST_CASE("binary blobs") {
    const std::vector<double> v{1.5, -2.0, 1e-300, 3.0};
    const auto blob = jsonutil::f64_blob(v.data(), v.size(), {2, 2});
    CHECK(blob["dtype"] == "f64");
    CHECK(jsonutil::read_f64_array(blob, "x") == v);
    CHECK(jsonutil::read_f64_array(json::array({1, 2.5}), "x") == std::vector<double>{1, 2.5});
    auto bad = blob;
    bad["shape"] = {3, 2};
    CHECK_THROWS_AS(jsonutil::read_f64_array(bad, "x"), Error);
    const std::vector<std::int32_t> ints{-1, 0, 7};
    CHECK(jsonutil::read_int_array(jsonutil::i32_blob(ints.data(), 3, {3}), "i") == std::vector<std::int64_t>{-1, 0, 7});
}

TEST_CASE("json files") {
    const auto dir = fixtures::temp_dir("json");
    jsonutil::write_json_file(dir / "a.json", {{"k", 1}});
    CHECK(jsonutil::read_json_file(dir / "a.json")["k"] == 1);
    CHECK(!std::filesystem::exists(dir / "a.json.tmp"));
    try {
        jsonutil::read_json_file(dir / "nope.json");
        FAIL("expected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::input_missing);
    }
    write_file(dir / "b.json", std::string("{not json"));
    try {
        jsonutil::read_json_file(dir / "b.json");
        FAIL("expected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::contract);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("png round trip and ppm layout") {
    std::mt19937_64 gen(2);
    Image img(7, 5, Rgb{});
    for (auto& b : img.rgb) b = static_cast<std::uint8_t>(gen());
    const auto png = encode_png(img);
    CHECK(png.size() > 8);
    CHECK(png[1] == 'P');
    CHECK(decode_png(png) == img);
    CHECK(encode_png(img) == png);

    const auto ppm = encode_ppm(img);
    const std::string header = "P6\n7 5\n255\n";
    REQUIRE(ppm.size() == header.size() + img.rgb.size());
    CHECK(std::string(ppm.begin(), ppm.begin() + header.size()) == header);
    CHECK(std::equal(img.rgb.begin(), img.rgb.end(), ppm.begin() + header.size()));
    CHECK_THROWS(decode_png(std::vector<std::uint8_t>{1, 2, 3}));
}

TEST_CASE("error kinds") {
    CHECK(error_kind(ErrorCode::config) == "config");
    CHECK(error_kind(ErrorCode::input_missing) == "input-missing");
    CHECK(error_kind(ErrorCode::contract) == "contract-violation");
    CHECK(error_kind(ErrorCode::internal) == "internal");
    CHECK(static_cast<int>(ErrorCode::input_missing) == 3);
}
