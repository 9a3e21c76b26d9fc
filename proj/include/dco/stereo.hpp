#pragma once

#include <cstdint>
#include <vector>

#include "dco/config.hpp"
#include "dco/image.hpp"

namespace dco {

/// Per-pixel cross-support arm lengths. Arms never reach past the image
/// border and are capped at cross_arm_l1.
struct CrossWindowField {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> left, right, up, down;

    CrossWindowField() = default;
    CrossWindowField(int w, int h)
        : width(w), height(h),
          left(static_cast<size_t>(w) * h, 0), right(static_cast<size_t>(w) * h, 0),
          up(static_cast<size_t>(w) * h, 0), down(static_cast<size_t>(w) * h, 0) {}

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }

    /// Shortest of the four arms at a pixel.
    int min_arm(int x, int y) const {
        size_t i = idx(x, y);
        int m = left[i];
        if (right[i] < m) m = right[i];
        if (up[i] < m) m = up[i];
        if (down[i] < m) m = down[i];
        return m;
    }
};

/// Census bit strings, one 64-bit word per pixel. Bit k (counting from the
/// most recently shifted-in neighbor backwards) is 1 iff the k-th neighbor
/// in row-major order, center excluded, is darker than the center.
struct CensusMap {
    int width = 0;
    int height = 0;
    int bits = 0; // window_w * window_h - 1
    std::vector<uint64_t> data;

    uint64_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

/// Matching cost per (pixel, disparity), each value in [0,2].
struct CostVolume {
    int width = 0;
    int height = 0;
    int d_min = 0;
    int d_max = 0;
    std::vector<float> cost;

    int num_disparities() const { return d_max - d_min + 1; }
    size_t idx(int x, int y, int d) const {
        return (static_cast<size_t>(y) * width + x) * num_disparities() + (d - d_min);
    }
    float at(int x, int y, int d) const { return cost[idx(x, y, d)]; }
    float& at(int x, int y, int d) { return cost[idx(x, y, d)]; }
};

/// Quarter-scale disparities; invalid pixels carry the nodata sentinel.
struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<float> disparity;

    DisparityMap() = default;
    DisparityMap(int w, int h)
        : width(w), height(h), disparity(static_cast<size_t>(w) * h, FloatMap::kNoData) {}

    float& at(int x, int y) { return disparity[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return disparity[static_cast<size_t>(y) * width + x]; }
    bool valid_at(int x, int y) const { return FloatMap::is_valid(at(x, y)); }
};

/// Full-resolution metric depth with at most one valid pixel per 2x2 block.
using SparseDepthMap = FloatMap;

/// Grows the four arms under the color/distance double-threshold rule, then
/// applies the morphological smoothing pass (3x3 median per arm channel,
/// clamped back to the color-valid reach).
CrossWindowField build_cross_windows(const GrayImage& img, const PipelineConfig& cfg);

/// Census transform over an odd window; coordinates clamp at the border.
CensusMap census_transform(const GrayImage& img, int window_w, int window_h);

int hamming_distance(uint64_t a, uint64_t b);

/// AD-census fused matching cost. The AD operand is the luminance difference
/// rescaled to the 0-255 range the regularizers are calibrated for.
/// Out-of-range right coordinates cost the maximum of 2.
CostVolume compute_cost_volume(const GrayImage& left, const GrayImage& right,
                               const CrossWindowField& windows, const PipelineConfig& cfg);

/// The adaptive AD/census mixing weight for a given shortest arm length.
double adaptive_alpha(int l_min, const PipelineConfig& cfg);

/// Mean cost over the cross-window filter region (the union of horizontal
/// arms of every pixel on the vertical arm).
CostVolume aggregate_costs(const CostVolume& vol, const CrossWindowField& windows);

/// Winner-takes-all over [d_min, d_max]; ties break toward smaller d.
DisparityMap select_disparity_wta(const CostVolume& vol);

/// Iterated mode filter over the cross-window region. A valid pixel whose
/// region (>= 4 valid members) has mode frequency 1 is an outlier and turns
/// nodata; nodata pixels stay nodata.
DisparityMap refine_disparity_histogram(const DisparityMap& disp, const CrossWindowField& windows,
                                        int iterations);

/// Doubles quarter-scale disparities, converts Z = f*B/d, and writes each
/// depth at (2u, 2v) of a full_width x full_height map, leaving the other
/// three pixels of every block nodata.
SparseDepthMap disparity_to_sparse_depth(const DisparityMap& disp, const PipelineConfig& cfg,
                                         int full_width, int full_height);

} // namespace dco
