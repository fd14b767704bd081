#include "spatialkit/object_depth.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace spatialkit {

namespace {

void check_same_shape(const DepthMap& map, const ObjectMask& mask) {
    if (map.height != mask.height || map.width != mask.width)
        throw ValidationError("mask dimensions do not match the depth map");
}

// Nearest-rank percentile over an ascending sorted vector: value at
// 1-indexed position ceil(p/100 * n).
std::uint32_t nearest_rank(const std::vector<std::uint32_t>& sorted, int p) {
    const std::size_t n = sorted.size();
    std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100;
    if (rank < 1) rank = 1;
    return sorted[rank - 1];
}

}  // namespace

ObjectMask ObjectMask::from_bbox(int height, int width, const BoundingBox& bbox) {
    if (!bbox.valid_for(width, height))
        throw ValidationError("bounding box does not fit inside the image");
    ObjectMask mask(height, width);
    for (int y = bbox.y_min; y <= bbox.y_max; ++y)
        for (int x = bbox.x_min; x <= bbox.x_max; ++x) mask.set(x, y);
    return mask;
}

ObjectMask clamp_mask_to_bbox(const ObjectMask& mask, const BoundingBox& bbox) {
    if (!bbox.valid_for(mask.width, mask.height))
        throw ValidationError("bounding box does not fit inside the mask");
    ObjectMask out(mask.height, mask.width);
    bool any = false;
    for (int y = bbox.y_min; y <= bbox.y_max; ++y) {
        for (int x = bbox.x_min; x <= bbox.x_max; ++x) {
            if (mask.member(x, y)) {
                out.set(x, y);
                any = true;
            }
        }
    }
    if (!any) throw EmptyMaskError("mask and bounding box intersection is empty");
    return out;
}

DepthDescriptor describe_object(const DepthMap& map, const ObjectMask& mask) {
    check_same_shape(map, mask);

    std::vector<std::uint32_t> depths;
    std::uint64_t sum = 0;
    std::uint64_t sum_x = 0, sum_y = 0;
    std::size_t member_count = 0;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (!mask.member(x, y)) continue;
            ++member_count;
            const std::uint32_t d = map.at(x, y);
            if (d == 0) continue;  // missing
            depths.push_back(d);
            sum += d;
            sum_x += static_cast<std::uint64_t>(x);
            sum_y += static_cast<std::uint64_t>(y);
        }
    }
    if (member_count == 0) throw EmptyMaskError("mask has no member pixels");
    if (depths.empty()) throw NoValidDepthError("every member pixel has missing depth");

    const std::size_t n = depths.size();
    const double cx = static_cast<double>(sum_x) / static_cast<double>(n);
    const double cy = static_cast<double>(sum_y) / static_cast<double>(n);

    // Member pixel (with valid depth) nearest to the centroid; ties break
    // in row-major order, which the scan order already guarantees.
    double best = -1.0;
    std::uint32_t center = 0;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (!mask.member(x, y) || map.at(x, y) == 0) continue;
            const double ddx = x - cx, ddy = y - cy;
            const double dist = ddx * ddx + ddy * ddy;
            if (best < 0.0 || dist < best) {
                best = dist;
                center = map.at(x, y);
            }
        }
    }

    std::sort(depths.begin(), depths.end());
    DepthDescriptor desc;
    desc.min_mm = nearest_rank(depths, 5);
    desc.max_mm = nearest_rank(depths, 95);
    desc.mean_mm = static_cast<std::uint32_t>((2 * sum + n) / (2 * n));  // round half up
    desc.center_mm = center;
    return desc;
}

std::uint32_t depth_at_point(const DepthMap& map, int x, int y) {
    if (!map.in_bounds(x, y))
        throw OutOfBoundsError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                               ") is outside the " + std::to_string(map.width) + "x" +
                               std::to_string(map.height) + " map");
    return map.at(x, y);
}

std::uint32_t describe_bbox_center(const DepthMap& map, const BoundingBox& bbox) {
    if (!bbox.valid_for(map.width, map.height))
        throw ValidationError("bounding box does not fit inside the map");
    const std::uint32_t d = map.at(bbox.center_x(), bbox.center_y());
    if (d == 0)
        throw NoValidDepthError("bbox center (" + std::to_string(bbox.center_x()) + ", " +
                                std::to_string(bbox.center_y()) + ") has missing depth");
    return d;
}

Proximity compare_proximity(std::uint32_t a_mm, std::uint32_t b_mm,
                            std::uint32_t tie_threshold_mm) {
    if (a_mm == 0 || b_mm == 0) throw NoValidDepthError("cannot compare missing depth");
    const std::uint32_t diff = a_mm > b_mm ? a_mm - b_mm : b_mm - a_mm;
    if (diff <= tie_threshold_mm) return Proximity::tie;
    return a_mm < b_mm ? Proximity::closer : Proximity::further;
}

}  // namespace spatialkit
