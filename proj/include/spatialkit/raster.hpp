#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spatialkit/depth_map.hpp"

namespace spatialkit::raster {

/// 8-bit raster, row-major, `channels` of 1 (gray) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    bool operator==(const Image&) const = default;
};

// PNG, backed by zlib. The writer emits non-interlaced 8-bit gray or RGB
// with filter type 0; output bytes are deterministic for a given image.
// The reader accepts non-interlaced 8-bit gray, gray+alpha, RGB and RGBA
// (alpha is dropped) with any row filters. Anything else is rejected.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

// Binary PGM (P5), 8-bit. Used for masks.
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

/// Reads a single-channel raster by extension (.png or .pgm).
Image read_gray(const std::filesystem::path& path);

// An EncodedDepthImage maps onto an RGB raster with (R, G, B) = (c0, c1, c2).
Image to_raster(const EncodedDepthImage& img);
EncodedDepthImage from_raster(const Image& img);

}  // namespace spatialkit::raster
