#pragma once

#include <cstdint>
#include <vector>

#include "spatialkit/errors.hpp"

namespace spatialkit {

/// Largest encodable depth: 2^17 - 1 millimeters (131.071 m).
inline constexpr std::uint32_t max_depth_mm = 131071;

/// Dense per-pixel metric depth in integer millimeters, row-major.
/// 0 is reserved for missing/invalid depth; statistics skip it.
struct DepthMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> values;

    DepthMap() = default;
    DepthMap(int h, int w, std::uint32_t fill = 0)
        : height(h), width(w), values(pixel_count_checked(h, w), fill) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    // x is the column, y the row.
    std::uint32_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint32_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

    std::size_t pixel_count() const { return values.size(); }

    static std::size_t pixel_count_checked(int h, int w) {
        if (h <= 0 || w <= 0)
            throw ValidationError("depth map dimensions must be positive");
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }

    bool operator==(const DepthMap&) const = default;
};

/// Three-channel 8-bit encoding of a DepthMap. Per pixel (c0, c1, c2):
///   c0 = (d div 1024) * 2   -- 7 bits of payload, unit 2^10 mm
///   c1 = ((d div 32) mod 32) * 8   -- 5 bits, unit 2^5 mm
///   c2 = (d mod 32) * 8   -- 5 bits, unit 2^0 mm
/// Stored row-major, 3 bytes per pixel.
struct EncodedDepthImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> channels;

    EncodedDepthImage() = default;
    EncodedDepthImage(int h, int w)
        : height(h), width(w), channels(DepthMap::pixel_count_checked(h, w) * 3, 0) {}

    std::size_t pixel_count() const { return channels.size() / 3; }

    const std::uint8_t* pixel(std::size_t i) const { return channels.data() + 3 * i; }
    std::uint8_t* pixel(std::size_t i) { return channels.data() + 3 * i; }

    bool operator==(const EncodedDepthImage&) const = default;
};

}  // namespace spatialkit
