#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>

#include "spatialkit/depth_codec.hpp"
#include "spatialkit/sampling.hpp"

using namespace spatialkit;
using namespace spatialkit::codec;

namespace {

// Independent oracle: brute-force base-(1024, 32, 1) decomposition of a
// depth value, written without reference to the codec internals.
struct OracleChannels {
    std::uint8_t c0, c1, c2;
};

OracleChannels oracle_encode(std::uint32_t d) {
    const std::uint32_t q0 = d / 1024;
    const std::uint32_t rem = d % 1024;
    const std::uint32_t q1 = rem / 32;
    const std::uint32_t q2 = rem % 32;
    return {static_cast<std::uint8_t>(q0 * 2), static_cast<std::uint8_t>(q1 * 8),
            static_cast<std::uint8_t>(q2 * 8)};
}

DepthMap random_map(rng::Sampler& sampler, int h, int w, std::uint32_t max_value = max_depth_mm) {
    DepthMap map(h, w);
    for (auto& v : map.values) v = static_cast<std::uint32_t>(sampler.below(max_value + 1));
    return map;
}

}  // namespace

TEST_CASE("scalar three-channel encoding matches the frozen examples") {
    auto p0 = encode_three_channel(0);
    CHECK(p0.c0 == 0);
    CHECK(p0.c1 == 0);
    CHECK(p0.c2 == 0);
    CHECK_FALSE(p0.saturated);

    auto pmax = encode_three_channel(131071);
    CHECK(pmax.c0 == 254);
    CHECK(pmax.c1 == 248);
    CHECK(pmax.c2 == 248);
    CHECK_FALSE(pmax.saturated);

    auto p1500 = encode_three_channel(1500);  // 1500 = 1*1024 + 14*32 + 28
    CHECK(p1500.c0 == 2);
    CHECK(p1500.c1 == 112);
    CHECK(p1500.c2 == 224);
}

TEST_CASE("scalar encoding agrees with the base-decomposition oracle") {
    rng::Sampler sampler(2024);
    for (int i = 0; i < 20000; ++i) {
        const std::uint32_t d = static_cast<std::uint32_t>(sampler.below(max_depth_mm + 1));
        const auto got = encode_three_channel(d);
        const auto want = oracle_encode(d);
        REQUIRE(got.c0 == want.c0);
        REQUIRE(got.c1 == want.c1);
        REQUIRE(got.c2 == want.c2);
        REQUIRE(decode_three_channel(got.c0, got.c1, got.c2) == d);
    }
}

TEST_CASE("encoding saturates above the range and rejects negatives") {
    auto p = encode_three_channel(200000);
    CHECK(p.saturated);
    CHECK(decode_three_channel(p.c0, p.c1, p.c2) == max_depth_mm);
    CHECK_THROWS_AS(encode_three_channel(-1), ValidationError);

    auto u = encode_u24(200000);
    CHECK(u.value == max_depth_mm);
    CHECK(u.saturated);
    CHECK(encode_u24(0).value == 0);
    CHECK(encode_u24(1500).value == 1500);  // millimeters pass through unchanged
    CHECK_FALSE(encode_u24(1500).saturated);
    CHECK_THROWS_AS(encode_u24(-5), ValidationError);
}

TEST_CASE("rounding to the millimeter grid is nearest with ties away from zero") {
    CHECK(round_to_grid(2.4).value == 2);
    CHECK(round_to_grid(2.5).value == 3);
    CHECK(round_to_grid(0.0).value == 0);
    CHECK(round_to_grid(131071.4).value == 131071);
    CHECK(round_to_grid(1e9).saturated);
    CHECK_THROWS_AS(round_to_grid(-0.6), ValidationError);
}

TEST_CASE("decoding rejects values off the channel lattices") {
    CHECK(decode_three_channel(0, 0, 0) == 0);
    CHECK(decode_three_channel(2, 112, 224) == 1500);
    CHECK(decode_three_channel(254, 248, 248) == 131071);

    CHECK_THROWS_WITH_AS(decode_three_channel(3, 0, 0), doctest::Contains("c0"), DecodeError);
    CHECK_THROWS_WITH_AS(decode_three_channel(0, 4, 0), doctest::Contains("c1"), DecodeError);
    CHECK_THROWS_WITH_AS(decode_three_channel(0, 0, 255), doctest::Contains("c2"), DecodeError);
}

TEST_CASE("map encoding applies the scalar op pixelwise") {
    DepthMap tiny(1, 1);
    auto enc = encode_map(tiny);
    CHECK(enc.image.channels == std::vector<std::uint8_t>{0, 0, 0});

    DepthMap m(2, 2);
    m.values = {0, 1, 32, 1024};
    auto r = encode_map(m);
    CHECK(r.image.channels ==
          std::vector<std::uint8_t>{0, 0, 0, 0, 0, 8, 0, 8, 0, 2, 0, 0});
    CHECK(r.saturated_pixels == 0);
    CHECK(decode_map(r.image) == m);
}

TEST_CASE("map round-trip holds on random maps and matches the serial reference") {
    rng::Sampler sampler(7);
    for (int i = 0; i < 25; ++i) {
        const int h = sampler.range(1, 40);
        const int w = sampler.range(1, 40);
        DepthMap m = random_map(sampler, h, w);
        auto parallel = encode_map(m);
        auto reference = serial::encode_map(m);
        REQUIRE(parallel.image == reference.image);
        REQUIRE(parallel.saturated_pixels == reference.saturated_pixels);
        REQUIRE(decode_map(parallel.image) == m);
        REQUIRE(serial::decode_map(parallel.image) == m);
        REQUIRE(validate_encoded(parallel.image).empty());
    }
}

TEST_CASE("map encoding counts saturated pixels") {
    DepthMap m(1, 3);
    m.values = {max_depth_mm, max_depth_mm + 1, 400000};
    auto r = encode_map(m);
    CHECK(r.saturated_pixels == 2);
    CHECK(serial::encode_map(m).saturated_pixels == 2);
    auto decoded = decode_map(r.image);
    CHECK(decoded.values == std::vector<std::uint32_t>{max_depth_mm, max_depth_mm, max_depth_mm});
}

TEST_CASE("validate_encoded reports offending pixels in order") {
    EncodedDepthImage img(1, 1);
    CHECK(validate_encoded(img).empty());

    EncodedDepthImage bad(2, 2);
    bad.pixel(1)[0] = 3;  // odd c0
    bad.pixel(3)[1] = 12;
    auto report = validate_encoded(bad);
    REQUIRE(report.size() == 2);
    CHECK(report[0].x == 1);
    CHECK(report[0].y == 0);
    CHECK(report[0].channel == 0);
    CHECK(report[0].reason == "c0 not an even multiple of 2");
    CHECK(report[1].x == 1);
    CHECK(report[1].y == 1);
    CHECK(report[1].channel == 1);

    auto serial_report = serial::validate_encoded(bad);
    REQUIRE(serial_report.size() == report.size());
    for (std::size_t i = 0; i < report.size(); ++i) {
        CHECK(report[i].x == serial_report[i].x);
        CHECK(report[i].y == serial_report[i].y);
        CHECK(report[i].channel == serial_report[i].channel);
    }

    CHECK_THROWS_AS(decode_map(bad), DecodeError);
}

TEST_CASE("decode_map names the offending pixel") {
    EncodedDepthImage bad(3, 5);
    bad.pixel(7)[2] = 9;  // pixel (2, 1)
    CHECK_THROWS_WITH_AS(decode_map(bad), doctest::Contains("(2, 1)"), DecodeError);
}

TEST_CASE("relative depth conversion follows the inverse-depth formula") {
    RelativeDepthParams params{2000, 10000};
    CHECK(relative_to_metric(1.0, params) == doctest::Approx(2000).epsilon(1e-9));
    CHECK(relative_to_metric(0.0, params) == doctest::Approx(10000).epsilon(1e-9));
    // A = 1/2000 - 1/10000 = 4e-4, B = 1e-4; 1 / (A*0.5 + B) = 10000/3.
    CHECK(relative_to_metric(0.5, params) == doctest::Approx(3333.3333333).epsilon(1e-6));

    CHECK_THROWS_AS(relative_to_metric(-0.1, params), ValidationError);
    CHECK_THROWS_AS(relative_to_metric(1.1, params), ValidationError);
    CHECK_THROWS_AS(relative_to_metric(0.5, RelativeDepthParams{0, 10}), ValidationError);
    CHECK_THROWS_AS(relative_to_metric(0.5, RelativeDepthParams{10, 10}), ValidationError);
}

TEST_CASE("relative depth conversion is monotone, bounded and invertible") {
    rng::Sampler sampler(99);
    for (int i = 0; i < 2000; ++i) {
        RelativeDepthParams params;
        params.d_min_mm = 1.0 + sampler.unit() * 5000.0;
        params.d_max_mm = params.d_min_mm + 1.0 + sampler.unit() * 100000.0;
        double r1 = sampler.unit();
        double r2 = sampler.unit();
        if (r1 > r2) std::swap(r1, r2);
        const double d1 = relative_to_metric(r1, params);
        const double d2 = relative_to_metric(r2, params);
        REQUIRE(d1 >= params.d_min_mm - 1e-6);
        REQUIRE(d1 <= params.d_max_mm + 1e-6);
        if (r1 < r2) REQUIRE(d1 > d2);  // strictly decreasing

        // Inverse-depth recovery: feed back the relative depth of a known
        // metric value and get that value again.
        const double a = 1.0 / params.d_min_mm - 1.0 / params.d_max_mm;
        const double b = 1.0 / params.d_max_mm;
        const double metric = params.d_min_mm + sampler.unit() * (params.d_max_mm - params.d_min_mm);
        double d_r = (1.0 / metric - b) / a;
        d_r = std::min(1.0, std::max(0.0, d_r));
        REQUIRE(relative_to_metric(d_r, params) ==
                doctest::Approx(metric).epsilon(1e-9));
    }
}

TEST_CASE("inverse relative depth is not proportional to metric depth") {
    // Inverse-depth ratios only survive the conversion when the far
    // plane is infinite; any finite range breaks proportionality.
    RelativeDepthParams params{1000, 1000000};
    const double at_02 = relative_to_metric(0.2, params);
    const double at_04 = relative_to_metric(0.4, params);
    CHECK(at_04 != doctest::Approx(2.0 * at_02).epsilon(1e-3));
    CHECK(at_02 != doctest::Approx(2.0 * at_04).epsilon(1e-3));
}

TEST_CASE("SBD1 container round-trips and validates its header") {
    rng::Sampler sampler(31337);
    DepthMap m = random_map(sampler, 7, 5);
    auto bytes = write_sbd1_bytes(m);
    REQUIRE(bytes.size() == 16 + 7 * 5 * 3);
    CHECK(bytes[0] == 'S');
    CHECK(bytes[1] == 'B');
    CHECK(bytes[2] == 'D');
    CHECK(bytes[3] == '1');
    CHECK(bytes[4] == 7);   // height, little-endian
    CHECK(bytes[8] == 5);   // width
    CHECK(read_sbd1_bytes(bytes) == m);

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(read_sbd1_bytes(truncated), DecodeError);
    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(read_sbd1_bytes(corrupt), DecodeError);
}
