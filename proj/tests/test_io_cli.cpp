#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "adaptv/image_io.hpp"
#include "adaptv/scheme.hpp"
#include "test_support.hpp"

using namespace adaptv;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Minimal structural validator for the subset of JSON Schema the report uses.
bool validate_schema(const json& schema, const json& value, std::string& err);

bool type_matches(const std::string& t, const json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

bool validate_schema(const json& schema, const json& value, std::string& err) {
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = type_matches(t.get<std::string>(), value);
        else
            for (const auto& tt : t) ok = ok || type_matches(tt.get<std::string>(), value);
        if (!ok) {
            err = "type mismatch at " + value.dump().substr(0, 40);
            return false;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& e : schema["enum"]) ok = ok || (e == value);
        if (!ok) {
            err = "enum mismatch: " + value.dump();
            return false;
        }
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& r : schema["required"])
                if (!value.contains(r.get<std::string>())) {
                    err = "missing required key " + r.get<std::string>();
                    return false;
                }
        if (schema.contains("properties"))
            for (const auto& [key, sub] : schema["properties"].items())
                if (value.contains(key) && !validate_schema(sub, value[key], err)) return false;
    }
    if (value.is_array() && schema.contains("items"))
        for (const auto& item : value)
            if (!validate_schema(schema["items"], item, err)) return false;
    return true;
}

}  // namespace

TEST_CASE("pgm byte mapping and round trip") {
    const std::string path = temp_path("adaptv_t1.pgm");
    write_bytes(path, std::string("P5\n2 2\n255\n") + '\x00' + '\x80' + '\xff' + '\x40');
    const ImageGrid img = load_image(path);
    REQUIRE(img.height == 2);
    REQUIRE(img.width == 2);
    CHECK(img.values[0] == 0.0);
    CHECK(img.values[1] == doctest::Approx(128.0 / 255.0));
    CHECK(img.values[2] == 1.0);
    CHECK(img.values[3] == doctest::Approx(64.0 / 255.0));

    const std::string path2 = temp_path("adaptv_t2.pgm");
    save_image(img, path2);
    CHECK(read_bytes(path) == read_bytes(path2));

    // load-save-load is the identity on quantized images
    const ImageGrid img2 = load_image(path2);
    CHECK(testsupport::linf_diff(img, img2) == 0.0);
}

TEST_CASE("pgm error taxonomy") {
    const std::string p6 = temp_path("adaptv_p6.ppm");
    write_bytes(p6, "P6\n2 2\n255\n............");
    CHECK_THROWS_AS(load_image(p6), UnsupportedFormatError);

    const std::string deep = temp_path("adaptv_deep.pgm");
    write_bytes(deep, "P5\n2 2\n65535\n........");
    CHECK_THROWS_AS(load_image(deep), UnsupportedBitDepthError);

    const std::string trunc = temp_path("adaptv_trunc.pgm");
    write_bytes(trunc, std::string("P5\n4 4\n255\n") + "abc");
    CHECK_THROWS_AS(load_image(trunc), TruncatedPayloadError);

    const std::string garbage = temp_path("adaptv_garbage.pgm");
    write_bytes(garbage, "hello there");
    CHECK_THROWS_AS(load_image(garbage), MalformedHeaderError);

    const std::string badw = temp_path("adaptv_badw.pgm");
    write_bytes(badw, "P5\n-3 2\n255\n..");
    CHECK_THROWS_AS(load_image(badw), MalformedHeaderError);

    CHECK_THROWS_AS(load_image(temp_path("adaptv_missing_file.pgm")), ImageIoError);
}

TEST_CASE("pgm header comments and whitespace are tolerated") {
    const std::string path = temp_path("adaptv_comment.pgm");
    write_bytes(path, std::string("P5 # magic\n# a comment line\n 2\t1 \n255\n") + '\x10' + '\x20');
    const ImageGrid img = load_image(path);
    CHECK(img.height == 1);
    CHECK(img.width == 2);
    CHECK(img.values[0] == doctest::Approx(16.0 / 255.0));
}

TEST_CASE("png round trip preserves quantized grayscale") {
    const ImageGrid img = testsupport::random_image(9, 13, 7);
    const std::string path = temp_path("adaptv_t3.png");
    save_image(img, path);
    const ImageGrid back = load_image(path);
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 13);
    // quantization error at most half a level
    CHECK(testsupport::linf_diff(img, back) <= 0.5 / 255.0 + 1e-12);

    // a png payload is sniffed even with a .pgm extension
    const std::string odd = temp_path("adaptv_t4.pgm.png");
    save_image(back, odd);
    CHECK(testsupport::linf_diff(load_image(odd), back) == 0.0);
}

TEST_CASE("noise is seeded, unbiased and has the right spread") {
    const ImageGrid base(64, 64, 0.5);
    const ImageGrid a = add_gaussian_noise(base, 0.1, 42);
    const ImageGrid b = add_gaussian_noise(base, 0.1, 42);
    CHECK(testsupport::linf_diff(a, b) == 0.0);
    const ImageGrid c = add_gaussian_noise(base, 0.1, 43);
    CHECK(testsupport::linf_diff(a, c) > 0.0);

    const ImageGrid zero = add_gaussian_noise(base, 0.0, 42);
    CHECK(testsupport::linf_diff(zero, base) == 0.0);

    // std within 1% on 512^2, mean within 5*sigma/sqrt(N) at N = 10^6
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double z = noise_sample(7, static_cast<uint64_t>(k));
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean) <= 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sd == doctest::Approx(1.0).epsilon(0.01));

    // mask scales sigma spatially
    WeightMap mask(64, 64, 1.0);
    for (int j = 32; j < 64; ++j)
        for (int i = 0; i < 64; ++i) mask.values[static_cast<size_t>(i) * 64 + j] = 0.1;
    const ImageGrid masked = add_gaussian_noise(base, 0.2, 11, &mask);
    double left = 0.0, right = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            const double d = masked.at(i, j) - 0.5;
            (j < 32 ? left : right) += d * d;
        }
    CHECK(left > 25.0 * right);
}

TEST_CASE("scheme report validates against the checked-in schema") {
    ImageGrid clean = testsupport::synthetic_scene(16, 16);
    TrainingPair pair(clean, add_gaussian_noise(clean, 0.08, 5));
    SchemeConfig cfg;
    cfg.l_max = 1;
    cfg.box.c0 = 0.05;
    cfg.bilevel.max_outer = 6;
    cfg.solver = SolverConfig::defaults(OperatorKind::tv);
    cfg.solver.max_iter = 800;
    cfg.solver.tol = 1e-6;
    const SchemeResult res = run_scheme(pair, cfg);
    const json report = json::parse(report_json(res));

    std::ifstream sf(std::string(ADAPTV_SOURCE_DIR) + "/schema/report_schema.json");
    REQUIRE(sf.good());
    const json schema = json::parse(sf);
    std::string err;
    const bool ok = validate_schema(schema, report, err);
    INFO(err);
    CHECK(ok);
}
