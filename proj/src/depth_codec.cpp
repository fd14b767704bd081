#include "spatialkit/depth_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace spatialkit::codec {

namespace {

constexpr std::uint32_t unit_c0 = 1024;  // 2^10 mm
constexpr std::uint32_t unit_c1 = 32;    // 2^5 mm

inline EncodedPixel encode_clamped(std::uint32_t d) {
    EncodedPixel p;
    if (d > max_depth_mm) {
        d = max_depth_mm;
        p.saturated = true;
    }
    p.c0 = static_cast<std::uint8_t>((d / unit_c0) * 2);
    p.c1 = static_cast<std::uint8_t>(((d / unit_c1) % 32) * 8);
    p.c2 = static_cast<std::uint8_t>((d % 32) * 8);
    return p;
}

inline std::uint32_t decode_unchecked(std::uint8_t c0, std::uint8_t c1, std::uint8_t c2) {
    return static_cast<std::uint32_t>(c0 / 2) * unit_c0 +
           static_cast<std::uint32_t>(c1 / 8) * unit_c1 + static_cast<std::uint32_t>(c2 / 8);
}

// Returns the reason a channel value is invalid, or nullptr if it is fine.
inline const char* channel_invalid_reason(int channel, std::uint8_t v) {
    if (channel == 0) {
        if (v % 2 != 0) return "c0 not an even multiple of 2";
        // c0/2 <= 127 holds for every uint8, nothing more to check.
        return nullptr;
    }
    if (v % 8 != 0) return channel == 1 ? "c1 not a multiple of 8" : "c2 not a multiple of 8";
    if (v / 8 > 31) return channel == 1 ? "c1 exceeds 5-bit payload" : "c2 exceeds 5-bit payload";
    return nullptr;
}

void check_pixel_count(const EncodedDepthImage& img) {
    std::size_t expected = DepthMap::pixel_count_checked(img.height, img.width) * 3;
    if (img.channels.size() != expected)
        throw ValidationError("encoded image channel buffer does not match dimensions");
}

void check_pixel_count(const DepthMap& map) {
    if (map.values.size() != DepthMap::pixel_count_checked(map.height, map.width))
        throw ValidationError("depth map value buffer does not match dimensions");
}

}  // namespace

EncodedPixel encode_three_channel(std::int64_t d_mm) {
    if (d_mm < 0) throw ValidationError("depth must be non-negative, got " + std::to_string(d_mm));
    if (d_mm > static_cast<std::int64_t>(max_depth_mm)) {
        EncodedPixel p = encode_clamped(max_depth_mm);
        p.saturated = true;
        return p;
    }
    return encode_clamped(static_cast<std::uint32_t>(d_mm));
}

std::uint32_t decode_three_channel(std::uint8_t c0, std::uint8_t c1, std::uint8_t c2) {
    const std::uint8_t values[3] = {c0, c1, c2};
    for (int ch = 0; ch < 3; ++ch) {
        if (const char* reason = channel_invalid_reason(ch, values[ch]))
            throw DecodeError(std::string("invalid channel value ") + std::to_string(values[ch]) +
                              ": " + reason);
    }
    return decode_unchecked(c0, c1, c2);
}

U24Value encode_u24(std::int64_t d_mm) {
    if (d_mm < 0) throw ValidationError("depth must be non-negative, got " + std::to_string(d_mm));
    if (d_mm > static_cast<std::int64_t>(max_depth_mm)) return {max_depth_mm, true};
    return {static_cast<std::uint32_t>(d_mm), false};
}

U24Value round_to_grid(double d_mm) {
    if (std::isnan(d_mm) || d_mm < 0)
        throw ValidationError("depth must be a non-negative number");
    double rounded = std::round(d_mm);  // ties away from zero
    if (rounded > static_cast<double>(max_depth_mm)) return {max_depth_mm, true};
    return {static_cast<std::uint32_t>(rounded), false};
}

EncodeMapResult encode_map(const DepthMap& map) {
    check_pixel_count(map);
    EncodeMapResult out;
    out.image = EncodedDepthImage(map.height, map.width);
    const std::int64_t n = static_cast<std::int64_t>(map.pixel_count());
    std::size_t saturated = 0;
#pragma omp parallel for schedule(static) reduction(+ : saturated)
    for (std::int64_t i = 0; i < n; ++i) {
        EncodedPixel p = encode_clamped(map.values[i]);
        std::uint8_t* dst = out.image.pixel(i);
        dst[0] = p.c0;
        dst[1] = p.c1;
        dst[2] = p.c2;
        if (p.saturated) saturated += 1;
    }
    out.saturated_pixels = saturated;
    return out;
}

DepthMap decode_map(const EncodedDepthImage& img) {
    auto violations = validate_encoded(img);
    if (!violations.empty()) {
        const ChannelViolation& v = violations.front();
        throw DecodeError("pixel (" + std::to_string(v.x) + ", " + std::to_string(v.y) + "): " +
                          v.reason + " (value " + std::to_string(v.value) + "; " +
                          std::to_string(violations.size()) + " violation(s) total)");
    }
    DepthMap map(img.height, img.width);
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint8_t* src = img.pixel(i);
        map.values[i] = decode_unchecked(src[0], src[1], src[2]);
    }
    return map;
}

std::vector<ChannelViolation> validate_encoded(const EncodedDepthImage& img) {
    check_pixel_count(img);
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
    std::vector<ChannelViolation> all;
#pragma omp parallel
    {
        std::vector<ChannelViolation> local;
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < n; ++i) {
            const std::uint8_t* px = img.pixel(i);
            for (int ch = 0; ch < 3; ++ch) {
                if (const char* reason = channel_invalid_reason(ch, px[ch])) {
                    local.push_back({static_cast<int>(i % img.width),
                                     static_cast<int>(i / img.width), ch, px[ch], reason});
                }
            }
        }
#pragma omp critical
        all.insert(all.end(), local.begin(), local.end());
    }
    // Static scheduling keeps each thread's chunk contiguous, but merge
    // order is arbitrary; restore row-major report order.
    std::sort(all.begin(), all.end(), [&](const ChannelViolation& a, const ChannelViolation& b) {
        auto ka = (static_cast<std::int64_t>(a.y) * img.width + a.x) * 3 + a.channel;
        auto kb = (static_cast<std::int64_t>(b.y) * img.width + b.x) * 3 + b.channel;
        return ka < kb;
    });
    return all;
}

namespace serial {

EncodeMapResult encode_map(const DepthMap& map) {
    check_pixel_count(map);
    EncodeMapResult out;
    out.image = EncodedDepthImage(map.height, map.width);
    for (std::size_t i = 0; i < map.pixel_count(); ++i) {
        EncodedPixel p = encode_clamped(map.values[i]);
        std::uint8_t* dst = out.image.pixel(i);
        dst[0] = p.c0;
        dst[1] = p.c1;
        dst[2] = p.c2;
        if (p.saturated) out.saturated_pixels += 1;
    }
    return out;
}

DepthMap decode_map(const EncodedDepthImage& img) {
    auto violations = serial::validate_encoded(img);
    if (!violations.empty()) {
        const ChannelViolation& v = violations.front();
        throw DecodeError("pixel (" + std::to_string(v.x) + ", " + std::to_string(v.y) + "): " +
                          v.reason + " (value " + std::to_string(v.value) + "; " +
                          std::to_string(violations.size()) + " violation(s) total)");
    }
    DepthMap map(img.height, img.width);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const std::uint8_t* src = img.pixel(i);
        map.values[i] = decode_unchecked(src[0], src[1], src[2]);
    }
    return map;
}

std::vector<ChannelViolation> validate_encoded(const EncodedDepthImage& img) {
    check_pixel_count(img);
    std::vector<ChannelViolation> all;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const std::uint8_t* px = img.pixel(i);
        for (int ch = 0; ch < 3; ++ch) {
            if (const char* reason = channel_invalid_reason(ch, px[ch])) {
                all.push_back({static_cast<int>(i % img.width), static_cast<int>(i / img.width),
                               ch, px[ch], reason});
            }
        }
    }
    return all;
}

}  // namespace serial

double relative_to_metric(double d_r, const RelativeDepthParams& params) {
    if (!(params.d_min_mm > 0))
        throw ValidationError("relative depth params: d_min must be > 0");
    if (!(params.d_max_mm > params.d_min_mm))
        throw ValidationError("relative depth params: d_max must be > d_min");
    if (!(d_r >= 0.0 && d_r <= 1.0))
        throw ValidationError("relative depth must lie in [0, 1]");
    const double a = 1.0 / params.d_min_mm - 1.0 / params.d_max_mm;
    const double b = 1.0 / params.d_max_mm;
    return 1.0 / (a * d_r + b);
}

// --- SBD1 container ---------------------------------------------------------

namespace {

constexpr char sbd1_magic[4] = {'S', 'B', 'D', '1'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> write_sbd1_bytes(const DepthMap& map) {
    check_pixel_count(map);
    std::vector<std::uint8_t> out;
    out.reserve(16 + map.pixel_count() * 3);
    out.insert(out.end(), sbd1_magic, sbd1_magic + 4);
    put_u32le(out, static_cast<std::uint32_t>(map.height));
    put_u32le(out, static_cast<std::uint32_t>(map.width));
    put_u32le(out, 0);  // reserved
    for (std::uint32_t d : map.values) {
        if (d > max_depth_mm)
            throw ValidationError("depth value " + std::to_string(d) + " exceeds uint24 range");
        out.push_back(static_cast<std::uint8_t>(d & 0xff));
        out.push_back(static_cast<std::uint8_t>((d >> 8) & 0xff));
        out.push_back(static_cast<std::uint8_t>((d >> 16) & 0xff));
    }
    return out;
}

DepthMap read_sbd1_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), sbd1_magic, 4) != 0)
        throw DecodeError("not an SBD1 container (bad magic or truncated header)");
    const std::uint32_t h = get_u32le(bytes.data() + 4);
    const std::uint32_t w = get_u32le(bytes.data() + 8);
    if (h == 0 || w == 0 || h > (1u << 20) || w > (1u << 20))
        throw DecodeError("SBD1 header carries implausible dimensions");
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (bytes.size() != 16 + n * 3)
        throw DecodeError("SBD1 payload size does not match header dimensions");
    DepthMap map(static_cast<int>(h), static_cast<int>(w));
    const std::uint8_t* p = bytes.data() + 16;
    for (std::size_t i = 0; i < n; ++i, p += 3) {
        std::uint32_t d = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16);
        if (d > max_depth_mm)
            throw DecodeError("SBD1 pixel " + std::to_string(i) + " exceeds the depth range");
        map.values[i] = d;
    }
    return map;
}

void write_sbd1_file(const std::filesystem::path& path, const DepthMap& map) {
    auto bytes = write_sbd1_bytes(map);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

DepthMap read_sbd1_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return read_sbd1_bytes(bytes);
}

}  // namespace spatialkit::codec
