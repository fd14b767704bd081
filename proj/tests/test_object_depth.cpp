#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spatialkit/object_depth.hpp"
#include "spatialkit/sampling.hpp"

using namespace spatialkit;

namespace {

// Brute-force oracle: full sort, nearest-rank percentiles computed from
// first principles, long-double mean, explicit centroid search.
struct OracleDescriptor {
    std::uint32_t min_mm, max_mm, mean_mm, center_mm;
};

OracleDescriptor oracle_describe(const DepthMap& map, const ObjectMask& mask) {
    std::vector<std::uint32_t> depths;
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            if (mask.member(x, y) && map.at(x, y) > 0) {
                depths.push_back(map.at(x, y));
                pixels.push_back({x, y});
            }
    REQUIRE(!depths.empty());
    std::vector<std::uint32_t> sorted = depths;
    std::sort(sorted.begin(), sorted.end());
    auto rank = [&](double p) {
        auto r = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
        return sorted[std::max<std::size_t>(r, 1) - 1];
    };
    long double sum = 0;
    long double cx = 0, cy = 0;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        sum += depths[i];
        cx += pixels[i].first;
        cy += pixels[i].second;
    }
    cx /= static_cast<long double>(pixels.size());
    cy /= static_cast<long double>(pixels.size());
    long double best = -1;
    std::uint32_t center = 0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const long double dx = pixels[i].first - cx;
        const long double dy = pixels[i].second - cy;
        const long double dist = dx * dx + dy * dy;
        if (best < 0 || dist < best) {
            best = dist;
            center = depths[i];
        }
    }
    const long double mean = sum / static_cast<long double>(depths.size());
    return {rank(5), rank(95), static_cast<std::uint32_t>(std::llroundl(mean)), center};
}

}  // namespace

TEST_CASE("clamp_mask_to_bbox intersects and is idempotent") {
    ObjectMask mask(6, 8);
    mask.set(2, 2);
    mask.set(3, 3);
    BoundingBox covering{0, 0, 7, 5};
    CHECK(clamp_mask_to_bbox(mask, covering) == mask);

    ObjectMask full(6, 8, 1);
    BoundingBox single{3, 4, 3, 4};
    ObjectMask clamped = clamp_mask_to_bbox(full, single);
    std::size_t members = 0;
    for (auto v : clamped.membership) members += v;
    CHECK(members == 1);
    CHECK(clamped.member(3, 4));
    CHECK(clamp_mask_to_bbox(clamped, single) == clamped);

    ObjectMask corner(6, 8);
    corner.set(0, 0);
    BoundingBox elsewhere{5, 5, 7, 5};
    CHECK_THROWS_AS(clamp_mask_to_bbox(corner, elsewhere), EmptyMaskError);
}

TEST_CASE("describe_object on a constant field returns the constant") {
    DepthMap map(4, 4, 500);
    ObjectMask mask(4, 4);
    mask.set(1, 1);
    mask.set(2, 1);
    mask.set(3, 2);
    DepthDescriptor d = describe_object(map, mask);
    CHECK(d.min_mm == 500);
    CHECK(d.max_mm == 500);
    CHECK(d.mean_mm == 500);
    CHECK(d.center_mm == 500);
}

TEST_CASE("describe_object matches the hand-derived 1..100 example") {
    // 100 member pixels carrying depths 1..100: p5 = 5, p95 = 95,
    // mean 50.5 rounds to 51.
    DepthMap map(10, 10);
    ObjectMask mask(10, 10, 1);
    for (int i = 0; i < 100; ++i) map.values[i] = static_cast<std::uint32_t>(i + 1);
    DepthDescriptor d = describe_object(map, mask);
    CHECK(d.min_mm == 5);
    CHECK(d.max_mm == 95);
    CHECK(d.mean_mm == 51);
    CHECK(d.center_mm == oracle_describe(map, mask).center_mm);
}

TEST_CASE("describe_object separates two-surface objects") {
    // A cup-like field: inner surface at 800 mm, outer rim at 300 mm.
    DepthMap map(10, 10);
    ObjectMask mask(10, 10, 1);
    for (int i = 0; i < 100; ++i) map.values[i] = i < 50 ? 300 : 800;
    DepthDescriptor d = describe_object(map, mask);
    CHECK(d.min_mm == 300);
    CHECK(d.max_mm == 800);
    CHECK(d.mean_mm == 550);
}

TEST_CASE("describe_object ignores missing depth and errors when all missing") {
    DepthMap map(2, 2);
    map.values = {0, 700, 0, 900};
    ObjectMask mask(2, 2, 1);
    DepthDescriptor d = describe_object(map, mask);
    CHECK(d.min_mm == 700);
    CHECK(d.max_mm == 900);
    CHECK(d.mean_mm == 800);

    DepthMap zeros(2, 2);
    CHECK_THROWS_AS(describe_object(zeros, mask), NoValidDepthError);

    ObjectMask empty(2, 2);
    CHECK_THROWS_AS(describe_object(map, empty), EmptyMaskError);
}

TEST_CASE("describe_object equals the brute-force oracle on random instances") {
    rng::Sampler sampler(555);
    for (int trial = 0; trial < 400; ++trial) {
        const int h = sampler.range(1, 24);
        const int w = sampler.range(1, 24);
        DepthMap map(h, w);
        ObjectMask mask(h, w);
        bool any_valid = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                // ~1/4 missing depth, ~1/2 mask membership.
                const bool member = sampler.below(2) == 0;
                const std::uint32_t depth =
                    sampler.below(4) == 0 ? 0u : static_cast<std::uint32_t>(sampler.below(5000) + 1);
                map.at(x, y) = depth;
                if (member) mask.set(x, y);
                any_valid |= member && depth > 0;
            }
        }
        if (!any_valid) continue;
        DepthDescriptor got = describe_object(map, mask);
        OracleDescriptor want = oracle_describe(map, mask);
        REQUIRE(got.min_mm == want.min_mm);
        REQUIRE(got.max_mm == want.max_mm);
        REQUIRE(got.mean_mm == want.mean_mm);
        REQUIRE(got.center_mm == want.center_mm);
        REQUIRE(got.min_mm <= got.max_mm);
    }
}

TEST_CASE("depth_at_point returns raw values and checks bounds") {
    DepthMap map(1, 1, 777);
    CHECK(depth_at_point(map, 0, 0) == 777);
    CHECK_THROWS_WITH_AS(depth_at_point(map, 1, 0), doctest::Contains("(1, 0)"), OutOfBoundsError);
    CHECK_THROWS_AS(depth_at_point(map, 0, -1), OutOfBoundsError);

    DepthMap missing(1, 1, 0);
    CHECK(depth_at_point(missing, 0, 0) == 0);  // 0 = missing, caller's call
}

TEST_CASE("describe_bbox_center uses the floor midpoint") {
    DepthMap map(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) map.at(x, y) = static_cast<std::uint32_t>(100 + 10 * y + x);

    CHECK(describe_bbox_center(map, {2, 3, 2, 3}) == map.at(2, 3));
    CHECK(describe_bbox_center(map, {0, 0, 3, 3}) == map.at(1, 1));
    CHECK(describe_bbox_center(map, {0, 0, 4, 4}) == map.at(2, 2));

    DepthMap zeros(3, 3);
    CHECK_THROWS_AS(describe_bbox_center(zeros, {0, 0, 2, 2}), NoValidDepthError);
    CHECK_THROWS_AS(describe_bbox_center(map, {0, 0, 6, 6}), ValidationError);
}

TEST_CASE("compare_proximity orders depths with a tie threshold") {
    CHECK(compare_proximity(500, 800) == Proximity::closer);
    CHECK(compare_proximity(800, 500) == Proximity::further);
    CHECK(compare_proximity(500, 505, 10) == Proximity::tie);
    CHECK(compare_proximity(500, 500) == Proximity::tie);
    CHECK_THROWS_AS(compare_proximity(0, 500), NoValidDepthError);
    CHECK_THROWS_AS(compare_proximity(500, 0), NoValidDepthError);
}

TEST_CASE("compare_proximity is antisymmetric and tie-symmetric") {
    rng::Sampler sampler(808);
    for (int i = 0; i < 2000; ++i) {
        const auto a = static_cast<std::uint32_t>(sampler.below(2000) + 1);
        const auto b = static_cast<std::uint32_t>(sampler.below(2000) + 1);
        const auto thr = static_cast<std::uint32_t>(sampler.below(50));
        const Proximity fwd = compare_proximity(a, b, thr);
        const Proximity rev = compare_proximity(b, a, thr);
        if (fwd == Proximity::tie) {
            REQUIRE(rev == Proximity::tie);
        } else {
            REQUIRE(rev == (fwd == Proximity::closer ? Proximity::further : Proximity::closer));
        }
    }
}
