#pragma once

#include <cstdint>
#include <vector>

#include "spatialkit/depth_map.hpp"

namespace spatialkit {

/// Inclusive pixel bounds, zero-indexed, x = column and y = row.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    bool valid_for(int width, int height) const {
        return 0 <= x_min && x_min <= x_max && x_max < width && 0 <= y_min && y_min <= y_max &&
               y_max < height;
    }
    int center_x() const { return (x_min + x_max) / 2; }
    int center_y() const { return (y_min + y_max) / 2; }

    bool operator==(const BoundingBox&) const = default;
};

/// Per-pixel membership, dimensions matching the paired DepthMap.
struct ObjectMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> membership;  // nonzero = member

    ObjectMask() = default;
    ObjectMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), membership(DepthMap::pixel_count_checked(h, w), fill) {}

    bool member(int x, int y) const {
        return membership[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool m = true) {
        membership[static_cast<std::size_t>(y) * width + x] = m ? 1 : 0;
    }

    static ObjectMask from_bbox(int height, int width, const BoundingBox& bbox);

    bool operator==(const ObjectMask&) const = default;
};

/// Four-value depth summary of an object, integer millimeters.
/// min is the nearest-rank 5th percentile of the member depths, max the
/// 95th; mean is rounded to nearest; center is the depth at the member
/// pixel closest to the member centroid.
struct DepthDescriptor {
    std::uint32_t min_mm = 0;
    std::uint32_t max_mm = 0;
    std::uint32_t mean_mm = 0;
    std::uint32_t center_mm = 0;

    bool operator==(const DepthDescriptor&) const = default;
};

/// Intersects a mask with a bbox interior. Membership outside the bbox
/// becomes false. Throws EmptyMaskError if nothing survives.
ObjectMask clamp_mask_to_bbox(const ObjectMask& mask, const BoundingBox& bbox);

/// Depth statistics over the member pixels with depth > 0 (0 = missing).
/// Percentiles use nearest-rank: the value at index ceil(p/100 * n) of
/// the ascending sort, 1-indexed. Throws NoValidDepthError when no
/// member pixel has valid depth, EmptyMaskError on an empty mask.
DepthDescriptor describe_object(const DepthMap& map, const ObjectMask& mask);

/// Raw stored value at (x, y); 0 signals missing depth.
/// Throws OutOfBoundsError naming the offending coordinate.
std::uint32_t depth_at_point(const DepthMap& map, int x, int y);

/// Bbox fallback when no mask is available: depth at the floor-midpoint
/// (floor((x_min+x_max)/2), floor((y_min+y_max)/2)).
/// Throws NoValidDepthError if that pixel has depth 0.
std::uint32_t describe_bbox_center(const DepthMap& map, const BoundingBox& bbox);

enum class Proximity { closer, further, tie };

/// Compares two resolved scalar depths (millimeters). Differences within
/// tie_threshold are a tie; otherwise the smaller depth is closer.
/// Zero (missing) depth on either side throws NoValidDepthError.
Proximity compare_proximity(std::uint32_t a_mm, std::uint32_t b_mm,
                            std::uint32_t tie_threshold_mm = 0);

}  // namespace spatialkit
