#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "dco/error.hpp"

namespace dco {

/// Single-channel raster, luminance in [0,1], row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }

    /// Clamped lookup (border replication).
    float at_clamped(int x, int y) const {
        if (x < 0) x = 0;
        if (y < 0) y = 0;
        if (x >= width) x = width - 1;
        if (y >= height) y = height - 1;
        return at(x, y);
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Interleaved RGB raster, channel values in [0,1], row-major.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<float> data; // 3 * width * height

    ColorImage() = default;
    ColorImage(int w, int h, float r = 0.0f, float g = 0.0f, float b = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3) {
        for (size_t i = 0; i < data.size(); i += 3) {
            data[i] = r;
            data[i + 1] = g;
            data[i + 2] = b;
        }
    }

    float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Scalar per-pixel map with an explicit invalid-pixel sentinel.
/// The sentinel is non-finite and never participates in arithmetic;
/// use is_valid()/valid_at() before touching a value.
struct FloatMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    static constexpr float kNoData = std::numeric_limits<float>::quiet_NaN();

    FloatMap() = default;
    FloatMap(int w, int h, float fill = kNoData)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    static bool is_valid(float v) { return std::isfinite(v); }

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool valid_at(int x, int y) const { return is_valid(at(x, y)); }

    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Binary per-pixel mask (0 or 1). Backs both depth-contour masks and
/// occlusion masks.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }

    size_t count_set() const {
        size_t n = 0;
        for (uint8_t v : data) n += v != 0;
        return n;
    }
};

/// Rec. 601 luma conversion.
GrayImage to_gray(const ColorImage& img);

/// Channel replication.
ColorImage to_color(const GrayImage& img);

/// Bilinear sample with border clamp.
float sample_bilinear(const GrayImage& img, float x, float y);

} // namespace dco
