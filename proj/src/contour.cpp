#include "dco/contour.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace dco {

PolarFlowField flow_to_polar(const FlowField& flow) {
    PolarFlowField polar;
    polar.width = flow.width;
    polar.height = flow.height;
    polar.r.resize(flow.u.size());
    polar.theta.resize(flow.u.size());
    for (size_t i = 0; i < flow.u.size(); ++i) {
        float u = flow.u[i], v = flow.v[i];
        polar.r[i] = std::hypot(u, v);
        float theta = std::atan2(v, u);
        if (theta <= -static_cast<float>(std::numbers::pi))
            theta = static_cast<float>(std::numbers::pi); // keep theta in (-pi, pi]
        polar.theta[i] = theta;
    }
    return polar;
}

AmplitudeMap gradient_amplitude(const PolarFlowField& polar) {
    const int w = polar.width, h = polar.height;
    AmplitudeMap amp(w, h, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float r = polar.r_at(x, y);
            // forward differences, falling back to backward on the last row/column
            float gu = x + 1 < w ? polar.r_at(x + 1, y) - r
                                 : (w > 1 ? r - polar.r_at(x - 1, y) : 0.0f);
            float gv = y + 1 < h ? polar.r_at(x, y + 1) - r
                                 : (h > 1 ? r - polar.r_at(x, y - 1) : 0.0f);
            amp.at(x, y) = std::max(std::abs(gu), std::abs(gv));
        }
    }
    return amp;
}

namespace {

float sample_component(const std::vector<float>& data, int w, int h, float x, float y) {
    x = std::clamp(x, 0.0f, static_cast<float>(w - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(h - 1));
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    float fx = x - static_cast<float>(x0);
    float fy = y - static_cast<float>(y0);
    float top = data[static_cast<size_t>(y0) * w + x0] * (1 - fx) +
                data[static_cast<size_t>(y0) * w + x1] * fx;
    float bot = data[static_cast<size_t>(y1) * w + x0] * (1 - fx) +
                data[static_cast<size_t>(y1) * w + x1] * fx;
    return top * (1 - fy) + bot * fy;
}

// Projected flow growth along the pixel's own motion direction: the flow k px
// ahead minus the flow k px behind, both projected onto the unit vector.
// Degenerate (near-zero) flow reports 0.
double projection_confidence(const FlowField& field, int x, int y, double k) {
    float u = field.u_at(x, y);
    float v = field.v_at(x, y);
    double mag = std::hypot(static_cast<double>(u), static_cast<double>(v));
    if (mag < 1e-3) return 0.0;
    double ex = u / mag, ey = v / mag;
    float bx = static_cast<float>(x - k * ex), by = static_cast<float>(y - k * ey);
    float fx = static_cast<float>(x + k * ex), fy = static_cast<float>(y + k * ey);
    double f0 = sample_component(field.u, field.width, field.height, bx, by) * ex +
                sample_component(field.v, field.width, field.height, bx, by) * ey;
    double f1 = sample_component(field.u, field.width, field.height, fx, fy) * ex +
                sample_component(field.v, field.width, field.height, fx, fy) * ey;
    return f1 - f0;
}

} // namespace

AmplitudeMap fuse_amplitudes(const FlowField& flow_past, const FlowField& flow_future,
                             const AmplitudeMap& m_past, const AmplitudeMap& m_future,
                             const PipelineConfig& cfg) {
    const int w = m_past.width, h = m_past.height;
    if (flow_past.width != w || flow_past.height != h || flow_future.width != w ||
        flow_future.height != h || m_future.width != w || m_future.height != h)
        throw InputError("fuse_amplitudes: input dimensions differ");

    AmplitudeMap fused(w, h, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double r_past = projection_confidence(flow_past, x, y, cfg.confidence_offset_k);
            double r_future = projection_confidence(flow_future, x, y, cfg.confidence_offset_k);
            float mp = m_past.at(x, y);
            float mf = m_future.at(x, y);
            if (r_past > r_future)
                fused.at(x, y) = mp;
            else if (r_future > r_past)
                fused.at(x, y) = mf;
            else
                fused.at(x, y) = std::max(mp, mf);
        }
    }
    return fused;
}

AmplitudeMap box_filter(const AmplitudeMap& amp, int radius) {
    if (radius < 1) throw InputError("box_filter: radius must be >= 1");
    const int w = amp.width, h = amp.height;
    // summed-area table; the window clamps to the image and divides by the
    // covered pixel count, so constants pass through at the border
    std::vector<double> sat(static_cast<size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += amp.at(x, y);
            sat[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] =
                sat[static_cast<size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    AmplitudeMap out(w, h, 0.0f);
    for (int y = 0; y < h; ++y) {
        int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            double sum = sat[static_cast<size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
                         sat[static_cast<size_t>(y0) * (w + 1) + (x1 + 1)] -
                         sat[static_cast<size_t>(y1 + 1) * (w + 1) + x0] +
                         sat[static_cast<size_t>(y0) * (w + 1) + x0];
            int count = (y1 - y0 + 1) * (x1 - x0 + 1);
            out.at(x, y) = static_cast<float>(sum / count);
        }
    }
    return out;
}

AmplitudeMap normalize_amplitude(const AmplitudeMap& amp) {
    float peak = 0.0f;
    for (float v : amp.data)
        if (FloatMap::is_valid(v)) peak = std::max(peak, v);
    AmplitudeMap out = amp;
    if (peak <= 0.0f) return out;
    for (float& v : out.data)
        if (FloatMap::is_valid(v)) v /= peak;
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) throw InputError("gaussian_blur: sigma must be positive");
    // 5-tap separable kernel
    double k[5];
    double norm = 0.0;
    for (int i = -2; i <= 2; ++i) {
        k[i + 2] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        norm += k[i + 2];
    }
    for (double& v : k) v /= norm;

    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * img.at_clamped(x + i, y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at_clamped(x, y + i);
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

ContourResult extract_depth_contours_prefiltered(const GrayImage& blurred_full,
                                                 const AmplitudeMap& m_fuse_norm,
                                                 const PipelineConfig& cfg) {
    const int w = blurred_full.width, h = blurred_full.height;
    const int qw = m_fuse_norm.width, qh = m_fuse_norm.height;

    std::vector<float> gx(static_cast<size_t>(w) * h), gy(gx.size()), mag(gx.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float tl = blurred_full.at_clamped(x - 1, y - 1), t = blurred_full.at_clamped(x, y - 1),
                  tr = blurred_full.at_clamped(x + 1, y - 1);
            float l = blurred_full.at_clamped(x - 1, y), r = blurred_full.at_clamped(x + 1, y);
            float bl = blurred_full.at_clamped(x - 1, y + 1), b = blurred_full.at_clamped(x, y + 1),
                  br = blurred_full.at_clamped(x + 1, y + 1);
            size_t i = static_cast<size_t>(y) * w + x;
            gx[i] = (tr + 2 * r + br) - (tl + 2 * l + bl);
            gy[i] = (bl + 2 * b + br) - (tl + 2 * t + tr);
            mag[i] = std::hypot(gx[i], gy[i]);
        }
    }
    float peak = 0.0f;
    for (float v : mag) peak = std::max(peak, v);
    if (peak > 0.0f)
        for (float& v : mag) v /= peak;

    IntensityGradientMap m_i(w, h, 0.0f);
    std::copy(mag.begin(), mag.end(), m_i.data.begin());

    // non-maximum suppression along the quantized gradient direction;
    // exact ties keep the pixel
    auto mag_at = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return mag[static_cast<size_t>(y) * w + x];
    };
    std::vector<uint8_t> survives(mag.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            if (mag[i] <= 0.0f) continue;
            double angle = std::atan2(gy[i], gx[i]);
            if (angle < 0) angle += std::numbers::pi;
            double deg = angle * 180.0 / std::numbers::pi;
            float n1, n2;
            if (deg < 22.5 || deg >= 157.5) {
                n1 = mag_at(x + 1, y);
                n2 = mag_at(x - 1, y);
            } else if (deg < 67.5) {
                n1 = mag_at(x + 1, y + 1);
                n2 = mag_at(x - 1, y - 1);
            } else if (deg < 112.5) {
                n1 = mag_at(x, y + 1);
                n2 = mag_at(x, y - 1);
            } else {
                n1 = mag_at(x - 1, y + 1);
                n2 = mag_at(x + 1, y - 1);
            }
            survives[i] = mag[i] >= n1 && mag[i] >= n2;
        }
    }

    // depth gate before hysteresis: quarter-scale confidence must reach t_depth
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            if (!survives[i]) continue;
            int mx = std::min(x / 2, qw - 1);
            int my = std::min(y / 2, qh - 1);
            float conf = m_fuse_norm.at(mx, my);
            if (!FloatMap::is_valid(conf) || conf < cfg.t_depth) survives[i] = 0;
        }
    }

    // dual-threshold hysteresis, 8-connected flood from strong pixels
    EdgeMask edges(w, h, 0);
    std::queue<std::pair<int, int>> seeds;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            if (survives[i] && mag[i] > cfg.t_high) {
                edges.at(x, y) = 1;
                seeds.emplace(x, y);
            }
        }
    }
    while (!seeds.empty()) {
        auto [x, y] = seeds.front();
        seeds.pop();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int qx = x + dx, qy = y + dy;
                if (!edges.in_bounds(qx, qy) || edges.at(qx, qy)) continue;
                size_t qi = static_cast<size_t>(qy) * w + qx;
                if (survives[qi] && mag[qi] >= cfg.t_low) {
                    edges.at(qx, qy) = 1;
                    seeds.emplace(qx, qy);
                }
            }
        }
    }
    return {std::move(edges), std::move(m_i)};
}

ContourResult extract_depth_contours(const GrayImage& gray_full, const AmplitudeMap& m_fuse_norm,
                                     const PipelineConfig& cfg) {
    return extract_depth_contours_prefiltered(gaussian_blur(gray_full, cfg.gauss_sigma),
                                              m_fuse_norm, cfg);
}

} // namespace dco
