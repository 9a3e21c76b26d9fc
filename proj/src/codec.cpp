#include "dco/codec.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dco/flow.hpp"

namespace dco {

namespace {

[[noreturn]] void codec_fail(const std::string& path, const std::string& what, long offset) {
    throw CodecError(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

uint8_t quantize(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(v * 255.0f));
}

// PNM header token reader: skips whitespace and '#' comments.
int read_pnm_int(std::ifstream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) codec_fail(path, "malformed header", static_cast<long>(in.tellg()));
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 30) codec_fail(path, "header value out of range", static_cast<long>(in.tellg()));
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(value);
}

std::vector<uint8_t> read_pnm_payload(std::ifstream& in, const std::string& path, size_t n) {
    int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) codec_fail(path, "malformed header", static_cast<long>(in.tellg()));
    long payload_start = static_cast<long>(in.tellg());
    std::vector<uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        codec_fail(path, "truncated payload", payload_start + static_cast<long>(in.gcount()));
    return bytes;
}

LoadedImage read_pnm(const std::string& path, bool expect_color) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CodecError(path + ": cannot open file");
    char m0 = static_cast<char>(in.get());
    char m1 = static_cast<char>(in.get());
    const char expected = expect_color ? '6' : '5';
    if (m0 != 'P' || m1 != expected) codec_fail(path, "bad magic", 0);
    int w = read_pnm_int(in, path);
    int h = read_pnm_int(in, path);
    int maxval = read_pnm_int(in, path);
    if (w < 1 || h < 1) codec_fail(path, "degenerate dimensions", static_cast<long>(in.tellg()));
    if (maxval != 255) codec_fail(path, "unsupported bit depth (maxval must be 255)",
                                  static_cast<long>(in.tellg()));
    size_t channels = expect_color ? 3 : 1;
    std::vector<uint8_t> bytes = read_pnm_payload(in, path, static_cast<size_t>(w) * h * channels);
    if (expect_color) {
        ColorImage img(w, h);
        for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0f;
        return img;
    }
    GrayImage img(w, h);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0f;
    return img;
}

struct PngReadCtx {
    std::FILE* file = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) std::fclose(file);
    }
};

LoadedImage read_png_file(const std::string& path) {
    PngReadCtx ctx;
    ctx.file = std::fopen(path.c_str(), "rb");
    if (!ctx.file) throw CodecError(path + ": cannot open file");
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw CodecError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) codec_fail(path, "malformed PNG stream", std::ftell(ctx.file));
    png_init_io(ctx.png, ctx.file);
    png_read_info(ctx.png, ctx.info);

    png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    int depth = png_get_bit_depth(ctx.png, ctx.info);
    int color_type = png_get_color_type(ctx.png, ctx.info);
    if (depth == 16) codec_fail(path, "unsupported bit depth (only 8-bit PNG)", std::ftell(ctx.file));
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    int channels = png_get_channels(ctx.png, ctx.info);
    if (channels != 1 && channels != 3) codec_fail(path, "unsupported channel layout", std::ftell(ctx.file));
    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = bytes.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    if (channels == 1) {
        GrayImage img(static_cast<int>(w), static_cast<int>(h));
        for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0f;
        return img;
    }
    ColorImage img(static_cast<int>(w), static_cast<int>(h));
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0f;
    return img;
}

void write_png_bytes(const std::string& path, int w, int h, int channels,
                     const std::vector<uint8_t>& bytes) {
    std::FILE* file = std::fopen(path.c_str(), "wb");
    if (!file) throw CodecError(path + ": cannot open file for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) {
        std::fclose(file);
        throw CodecError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(file);
        throw CodecError(path + ": PNG encode failed");
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * w * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
}

float byteswap_float(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    bits = __builtin_bswap32(bits);
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr float kFloTag = 202021.25f;

} // namespace

ImageFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "pgm") return ImageFormat::Pgm;
    if (ext == "ppm") return ImageFormat::Ppm;
    if (ext == "png") return ImageFormat::Png;
    throw InputError(path + ": unrecognized image extension '" + ext + "'");
}

LoadedImage read_image(const std::string& path, ImageFormat format) {
    switch (format) {
        case ImageFormat::Pgm: return read_pnm(path, false);
        case ImageFormat::Ppm: return read_pnm(path, true);
        case ImageFormat::Png: return read_png_file(path);
    }
    throw InputError(path + ": bad image format enum");
}

LoadedImage read_image(const std::string& path) {
    return read_image(path, format_from_path(path));
}

GrayImage read_gray(const std::string& path) {
    LoadedImage img = read_image(path);
    if (auto* g = std::get_if<GrayImage>(&img)) return std::move(*g);
    return to_gray(std::get<ColorImage>(img));
}

ColorImage read_color(const std::string& path) {
    LoadedImage img = read_image(path);
    if (auto* c = std::get_if<ColorImage>(&img)) return std::move(*c);
    return to_color(std::get<GrayImage>(img));
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CodecError(path + ": cannot open file for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.data[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CodecError(path + ": write failed");
}

void write_ppm(const ColorImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CodecError(path + ": cannot open file for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.data[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CodecError(path + ": write failed");
}

void write_png(const GrayImage& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.data[i]);
    write_png_bytes(path, img.width, img.height, 1, bytes);
}

void write_png(const ColorImage& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.data[i]);
    write_png_bytes(path, img.width, img.height, 3, bytes);
}

void write_mask_pgm(const BinaryMask& mask, const std::string& path) {
    GrayImage img(mask.width, mask.height);
    for (size_t i = 0; i < mask.data.size(); ++i) img.data[i] = mask.data[i] ? 1.0f : 0.0f;
    write_pgm(img, path);
}

BinaryMask read_mask_pgm(const std::string& path) {
    GrayImage img = std::get<GrayImage>(read_pnm(path, false));
    BinaryMask mask(img.width, img.height);
    for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = img.data[i] >= 0.5f ? 1 : 0;
    return mask;
}

FloatMap read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CodecError(path + ": cannot open file");
    std::string magic;
    in >> magic;
    if (magic != "Pf") codec_fail(path, "bad magic (expected 'Pf')", 0);
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w < 1 || h < 1) codec_fail(path, "malformed header", static_cast<long>(in.tellg()));
    if (scale == 0.0) codec_fail(path, "zero scale", static_cast<long>(in.tellg()));
    int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) codec_fail(path, "malformed header", static_cast<long>(in.tellg()));
    long payload_start = static_cast<long>(in.tellg());

    std::vector<float> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (static_cast<size_t>(in.gcount()) != raw.size() * 4)
        codec_fail(path, "truncated payload", payload_start + static_cast<long>(in.gcount()));

    const bool file_little = scale < 0.0;
    const bool host_little = std::endian::native == std::endian::little;
    if (file_little != host_little)
        for (float& v : raw) v = byteswap_float(v);

    // PFM rows run bottom-up; ours run top-down.
    FloatMap map(w, h);
    for (int y = 0; y < h; ++y) {
        const float* src = raw.data() + static_cast<size_t>(h - 1 - y) * w;
        for (int x = 0; x < w; ++x) {
            float v = src[x];
            map.at(x, y) = std::isfinite(v) ? v : FloatMap::kNoData;
        }
    }
    return map;
}

void write_pfm(const FloatMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CodecError(path + ": cannot open file for writing");
    out << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
    const bool host_little = std::endian::native == std::endian::little;
    std::vector<float> row(map.width);
    for (int y = map.height - 1; y >= 0; --y) {
        for (int x = 0; x < map.width; ++x) {
            float v = map.at(x, y);
            row[x] = FloatMap::is_valid(v) ? v : std::numeric_limits<float>::infinity();
            if (!host_little) row[x] = byteswap_float(row[x]);
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw CodecError(path + ": write failed");
}

FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CodecError(path + ": cannot open file");
    float tag = 0.0f;
    int32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&tag), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in) codec_fail(path, "truncated header", static_cast<long>(in.tellg()));
    if (std::endian::native == std::endian::big) {
        tag = byteswap_float(tag);
        w = static_cast<int32_t>(__builtin_bswap32(static_cast<uint32_t>(w)));
        h = static_cast<int32_t>(__builtin_bswap32(static_cast<uint32_t>(h)));
    }
    if (tag != kFloTag) codec_fail(path, "bad magic tag", 0);
    if (w < 1 || h < 1 || w > 99999 || h > 99999) codec_fail(path, "implausible dimensions", 4);

    std::vector<float> raw(static_cast<size_t>(w) * h * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (static_cast<size_t>(in.gcount()) != raw.size() * 4)
        codec_fail(path, "truncated payload", 12 + static_cast<long>(in.gcount()));
    if (std::endian::native == std::endian::big)
        for (float& v : raw) v = byteswap_float(v);

    FlowField flow(w, h);
    for (size_t i = 0; i < flow.u.size(); ++i) {
        flow.u[i] = raw[2 * i];
        flow.v[i] = raw[2 * i + 1];
    }
    return flow;
}

void write_flo(const FlowField& flow, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CodecError(path + ": cannot open file for writing");
    float tag = kFloTag;
    int32_t w = flow.width, h = flow.height;
    std::vector<float> raw(static_cast<size_t>(w) * h * 2);
    for (size_t i = 0; i < flow.u.size(); ++i) {
        raw[2 * i] = flow.u[i];
        raw[2 * i + 1] = flow.v[i];
    }
    if (std::endian::native == std::endian::big) {
        tag = byteswap_float(tag);
        w = static_cast<int32_t>(__builtin_bswap32(static_cast<uint32_t>(w)));
        h = static_cast<int32_t>(__builtin_bswap32(static_cast<uint32_t>(h)));
        for (float& v : raw) v = byteswap_float(v);
    }
    out.write(reinterpret_cast<const char*>(&tag), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (!out) throw CodecError(path + ": write failed");
}

ColorImage render_false_color(const FloatMap& map) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (float v : map.data) {
        if (!FloatMap::is_valid(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ColorImage out(map.width, map.height);
    if (lo > hi) return out; // nothing valid: all black
    float span = hi > lo ? hi - lo : 1.0f;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            float v = map.at(x, y);
            if (!FloatMap::is_valid(v)) continue;
            float t = (v - lo) / span;
            // compact jet-style ramp
            out.at(x, y, 0) = std::clamp(1.5f - std::abs(4.0f * t - 3.0f), 0.0f, 1.0f);
            out.at(x, y, 1) = std::clamp(1.5f - std::abs(4.0f * t - 2.0f), 0.0f, 1.0f);
            out.at(x, y, 2) = std::clamp(1.5f - std::abs(4.0f * t - 1.0f), 0.0f, 1.0f);
        }
    }
    return out;
}

} // namespace dco
