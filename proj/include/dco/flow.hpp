#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "dco/config.hpp"
#include "dco/image.hpp"

namespace dco {

/// Dense per-pixel displacement field (quarter scale in the pipeline).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u, v;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          u(static_cast<size_t>(w) * h, 0.0f), v(static_cast<size_t>(w) * h, 0.0f) {}

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    float u_at(int x, int y) const { return u[idx(x, y)]; }
    float v_at(int x, int y) const { return v[idx(x, y)]; }
};

/// Three consecutive frames centered on the middle one.
struct KeyframeWindow {
    GrayImage past, middle, future;
};

/// Capacity-three sliding frame buffer. Each push past the second returns
/// the window centered on the second-newest frame.
class KeyframeBuffer {
public:
    /// Dimension mismatch with buffered frames is an input error.
    std::optional<KeyframeWindow> push_frame(GrayImage frame);

    size_t size() const { return frames_.size(); }
    void clear() { frames_.clear(); }

private:
    std::deque<GrayImage> frames_;
};

/// Patch-based inverse-search optical flow, coarse-to-fine. 8x8 patches on
/// a 4 px stride, 12 gradient-descent iterations per patch, pyramid down to
/// a 16 px minimum dimension. No variational refinement.
FlowField compute_flow(const GrayImage& from, const GrayImage& to, const PipelineConfig& cfg);

} // namespace dco
