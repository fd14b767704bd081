#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spatialkit/depth_map.hpp"

namespace spatialkit::codec {

/// One encoded pixel. `saturated` is set when the input exceeded
/// max_depth_mm and was clamped.
struct EncodedPixel {
    std::uint8_t c0 = 0;
    std::uint8_t c1 = 0;
    std::uint8_t c2 = 0;
    bool saturated = false;
};

struct U24Value {
    std::uint32_t value = 0;
    bool saturated = false;
};

/// Encode one depth value (millimeters) into the three-channel form.
/// Inputs above max_depth_mm clamp and set the saturation flag;
/// negative input throws ValidationError.
EncodedPixel encode_three_channel(std::int64_t d_mm);

/// Exact inverse of encode_three_channel on its range.
/// Throws DecodeError naming the offending channel if a value is not on
/// its lattice (c0 even with c0/2 <= 127, c1 and c2 multiples of 8 with
/// value/8 <= 31).
std::uint32_t decode_three_channel(std::uint8_t c0, std::uint8_t c1, std::uint8_t c2);

/// uint24 encoding is the identity on 0..max_depth_mm, clamping above.
U24Value encode_u24(std::int64_t d_mm);

/// Round a real-valued millimeter depth to the integer grid
/// (nearest, ties away from zero) and clamp into 0..max_depth_mm.
/// Negative input throws ValidationError.
U24Value round_to_grid(double d_mm);

struct EncodeMapResult {
    EncodedDepthImage image;
    std::size_t saturated_pixels = 0;
};

/// Pixelwise three-channel encoding of a whole map (OpenMP-parallel).
EncodeMapResult encode_map(const DepthMap& map);

/// Pixelwise decode; validates first and throws DecodeError with the
/// offending pixel coordinate if the image is malformed.
DepthMap decode_map(const EncodedDepthImage& img);

/// One channel-invariant violation found by validate_encoded.
struct ChannelViolation {
    int x = 0;
    int y = 0;
    int channel = 0;  // 0, 1 or 2
    std::uint8_t value = 0;
    std::string reason;
};

/// Report-only scan of an encoded image. Empty result <=> decodable.
/// Violations are listed in row-major pixel order.
std::vector<ChannelViolation> validate_encoded(const EncodedDepthImage& img);

// Serial reference implementations of the map kernels, kept for testing
// and for the serial-vs-parallel benchmark.
namespace serial {
EncodeMapResult encode_map(const DepthMap& map);
DepthMap decode_map(const EncodedDepthImage& img);
std::vector<ChannelViolation> validate_encoded(const EncodedDepthImage& img);
}  // namespace serial

/// Scene depth range for relative->metric conversion. Millimeters.
struct RelativeDepthParams {
    double d_min_mm = 0;
    double d_max_mm = 0;
};

/// Convert relative (inverse) depth d_r in [0,1] to metric millimeters:
///   A = 1/d_min - 1/d_max,  B = 1/d_max,  d = 1 / (A * d_r + B).
/// d_r = 1 maps to d_min (closest), d_r = 0 to d_max. Strictly
/// decreasing in d_r. Throws ValidationError on out-of-range d_r or
/// invalid params.
double relative_to_metric(double d_r, const RelativeDepthParams& params);

// ---------------------------------------------------------------------------
// Raw uint24 container ("SBD1"): 16-byte header (magic "SBD1", u32 height,
// u32 width, u32 reserved, little-endian) followed by row-major 3-byte
// little-endian pixels in millimeters.

std::vector<std::uint8_t> write_sbd1_bytes(const DepthMap& map);
DepthMap read_sbd1_bytes(const std::vector<std::uint8_t>& bytes);

void write_sbd1_file(const std::filesystem::path& path, const DepthMap& map);
DepthMap read_sbd1_file(const std::filesystem::path& path);

}  // namespace spatialkit::codec
