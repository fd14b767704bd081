#include "spatialkit/raster.hpp"

#include <zlib.h>

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <utility>

#include "spatialkit/errors.hpp"

namespace spatialkit::raster {

namespace {

void check_image(const Image& img) {
    if (img.height <= 0 || img.width <= 0)
        throw ValidationError("raster dimensions must be positive");
    if (img.channels != 1 && img.channels != 3)
        throw ValidationError("raster must have 1 or 3 channels");
    if (img.data.size() != img.pixel_count() * img.channels)
        throw ValidationError("raster buffer does not match dimensions");
}

// --- PNG primitives ---------------------------------------------------------

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* payload, std::size_t len) {
    put_u32be(out, static_cast<std::uint32_t>(len));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len > 0) out.insert(out.end(), payload, payload + len);
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + len)));
    put_u32be(out, crc);
}

constexpr std::uint8_t png_signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& in) {
    uLongf bound = ::compressBound(static_cast<uLong>(in.size()));
    std::vector<std::uint8_t> out(bound);
    if (::compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()),
                    Z_DEFAULT_COMPRESSION) != Z_OK)
        throw Error(ErrorKind::internal, "zlib compression failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& in,
                                       std::size_t expected_size) {
    std::vector<std::uint8_t> out(expected_size);
    uLongf dest_len = static_cast<uLongf>(expected_size);
    int rc = ::uncompress(out.data(), &dest_len, in.data(), static_cast<uLong>(in.size()));
    if (rc != Z_OK || dest_len != expected_size)
        throw DecodeError("PNG IDAT stream is corrupt or has unexpected size");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    check_image(img);
    std::vector<std::uint8_t> out;
    out.insert(out.end(), png_signature, png_signature + 8);

    std::uint8_t ihdr[13];
    std::uint32_t w = static_cast<std::uint32_t>(img.width);
    std::uint32_t h = static_cast<std::uint32_t>(img.height);
    ihdr[0] = static_cast<std::uint8_t>(w >> 24);
    ihdr[1] = static_cast<std::uint8_t>(w >> 16);
    ihdr[2] = static_cast<std::uint8_t>(w >> 8);
    ihdr[3] = static_cast<std::uint8_t>(w);
    ihdr[4] = static_cast<std::uint8_t>(h >> 24);
    ihdr[5] = static_cast<std::uint8_t>(h >> 16);
    ihdr[6] = static_cast<std::uint8_t>(h >> 8);
    ihdr[7] = static_cast<std::uint8_t>(h);
    ihdr[8] = 8;                                      // bit depth
    ihdr[9] = img.channels == 3 ? 2 : 0;              // color type: RGB or gray
    ihdr[10] = 0;                                     // compression
    ihdr[11] = 0;                                     // filter method
    ihdr[12] = 0;                                     // no interlace
    append_chunk(out, "IHDR", ihdr, sizeof(ihdr));

    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> scanlines;
    scanlines.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        scanlines.push_back(0);  // filter type 0 on every row
        const std::uint8_t* row = img.data.data() + y * stride;
        scanlines.insert(scanlines.end(), row, row + stride);
    }
    auto compressed = zlib_deflate(scanlines);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);
    return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), png_signature, 8) != 0)
        throw DecodeError("not a PNG file");

    std::size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;

    while (pos + 8 <= bytes.size() && !saw_iend) {
        std::uint32_t len = get_u32be(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw DecodeError("PNG chunk overruns file");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DecodeError("PNG IHDR has wrong length");
            width = static_cast<int>(get_u32be(payload));
            height = static_cast<int>(get_u32be(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // Ancillary chunks are skipped.
        pos += 12 + len;
    }
    if (!saw_ihdr) throw DecodeError("PNG is missing IHDR");
    if (width <= 0 || height <= 0) throw DecodeError("PNG has invalid dimensions");
    if (bit_depth != 8) throw DecodeError("only 8-bit PNG is supported");
    if (interlace != 0) throw DecodeError("interlaced PNG is not supported");

    int src_channels;
    switch (color_type) {
        case 0: src_channels = 1; break;  // gray
        case 2: src_channels = 3; break;  // RGB
        case 4: src_channels = 2; break;  // gray + alpha
        case 6: src_channels = 4; break;  // RGBA
        default: throw DecodeError("unsupported PNG color type (palette?)");
    }

    const std::size_t stride = static_cast<std::size_t>(width) * src_channels;
    auto raw = zlib_inflate(idat, (stride + 1) * height);

    // Undo per-row filters in place (sub/up/average/paeth).
    std::vector<std::uint8_t> prev(stride, 0);
    std::vector<std::uint8_t> cur(stride);
    std::vector<std::uint8_t> pixels;
    pixels.reserve(stride * height);
    const int bpp = src_channels;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        std::uint8_t filter = src[0];
        const std::uint8_t* line = src + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
            int b = prev[i];
            int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
            int x = line[i];
            int value;
            switch (filter) {
                case 0: value = x; break;
                case 1: value = x + a; break;
                case 2: value = x + b; break;
                case 3: value = x + (a + b) / 2; break;
                case 4: value = x + paeth(a, b, c); break;
                default: throw DecodeError("PNG row uses unknown filter type");
            }
            cur[i] = static_cast<std::uint8_t>(value & 0xff);
        }
        pixels.insert(pixels.end(), cur.begin(), cur.end());
        std::swap(prev, cur);
    }

    Image img;
    img.height = height;
    img.width = width;
    img.channels = src_channels >= 3 ? 3 : 1;
    img.data.resize(img.pixel_count() * img.channels);
    if (src_channels == img.channels) {
        img.data = std::move(pixels);
    } else {
        // Drop the alpha channel.
        for (std::size_t i = 0; i < img.pixel_count(); ++i)
            for (int ch = 0; ch < img.channels; ++ch)
                img.data[i * img.channels + ch] = pixels[i * src_channels + ch];
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    auto bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    check_image(img);
    if (img.channels != 1) throw ValidationError("PGM stores single-channel images only");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

namespace {

int next_pnm_token(std::istream& in) {
    // Skips whitespace and '#' comments, then reads one int.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    in >> v;
    return v;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    f.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw DecodeError("not a binary PGM (P5) file");
    int w = next_pnm_token(f);
    int h = next_pnm_token(f);
    int maxval = next_pnm_token(f);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw DecodeError("unsupported PGM header (need positive dims and maxval 255)");
    f.get();  // single whitespace after maxval
    Image img;
    img.height = h;
    img.width = w;
    img.channels = 1;
    img.data.resize(img.pixel_count());
    f.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!f) throw DecodeError("PGM pixel payload is truncated");
    return img;
}

Image read_gray(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    Image img = ext == ".pgm" ? read_pgm(path) : read_png(path);
    if (img.channels != 1) throw ValidationError(path.string() + ": expected a single-channel raster");
    return img;
}

Image to_raster(const EncodedDepthImage& img) {
    Image out;
    out.height = img.height;
    out.width = img.width;
    out.channels = 3;
    out.data = img.channels;
    return out;
}

EncodedDepthImage from_raster(const Image& img) {
    check_image(img);
    if (img.channels != 3)
        throw ValidationError("encoded depth rasters must have exactly 3 channels");
    EncodedDepthImage out(img.height, img.width);
    out.channels = img.data;
    return out;
}

}  // namespace spatialkit::raster
