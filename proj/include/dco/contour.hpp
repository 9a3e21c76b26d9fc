#pragma once

#include "dco/config.hpp"
#include "dco/flow.hpp"
#include "dco/image.hpp"

namespace dco {

/// Per-pixel polar decomposition of a flow field.
struct PolarFlowField {
    int width = 0;
    int height = 0;
    std::vector<float> theta; // (-pi, pi]
    std::vector<float> r;     // >= 0

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    float r_at(int x, int y) const { return r[idx(x, y)]; }
    float theta_at(int x, int y) const { return theta[idx(x, y)]; }
};

/// Nonnegative gradient amplitudes at quarter scale.
using AmplitudeMap = FloatMap;

/// Full-resolution binary depth-contour mask.
using EdgeMask = BinaryMask;

/// Full-resolution normalized intensity-gradient map in [0,1].
using IntensityGradientMap = FloatMap;

/// r = sqrt(u^2+v^2), theta = atan2(v,u) with (0,0) mapping to theta 0.
PolarFlowField flow_to_polar(const FlowField& flow);

/// Forward differences of r along both axes (backward on the last row and
/// column); the amplitude is the larger absolute change.
AmplitudeMap gradient_amplitude(const PolarFlowField& polar);

/// Projection-confidence selection between the two directional amplitudes.
/// Each field samples itself k px fore and aft along its own unit flow
/// vector; the field with the larger projected growth wins the pixel, ties
/// take the pixelwise max. Flow magnitudes under 1e-3 contribute r = 0.
AmplitudeMap fuse_amplitudes(const FlowField& flow_past, const FlowField& flow_future,
                             const AmplitudeMap& m_past, const AmplitudeMap& m_future,
                             const PipelineConfig& cfg);

/// Mean over the window clamped to the image (true mean of the covered
/// pixels, so constants are preserved at the border).
AmplitudeMap box_filter(const AmplitudeMap& amp, int radius);

/// Division by the global max; an all-zero map passes through.
AmplitudeMap normalize_amplitude(const AmplitudeMap& amp);

/// Separable Gaussian blur over a 5-tap kernel.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

struct ContourResult {
    EdgeMask edges;            // full resolution
    IntensityGradientMap m_i;  // pre-NMS normalized gradient magnitude
};

/// Full Canny chain gated by the depth filter: blur, Sobel, normalized
/// magnitude (returned as m_i), non-maximum suppression, the depth gate
/// m_fuse(m(p)) >= t_depth applied before hysteresis, then dual-threshold
/// hysteresis over 8-connectivity. m_fuse_norm lives at quarter scale and
/// is addressed through m(p) = (u/2, v/2).
ContourResult extract_depth_contours(const GrayImage& gray_full, const AmplitudeMap& m_fuse_norm,
                                     const PipelineConfig& cfg);

/// Same chain on an already blurred frame (lets the caller time the blur
/// separately).
ContourResult extract_depth_contours_prefiltered(const GrayImage& blurred_full,
                                                 const AmplitudeMap& m_fuse_norm,
                                                 const PipelineConfig& cfg);

} // namespace dco
