#include "dco/flow.hpp"

#include <algorithm>
#include <cmath>

#include "dco/pyramid.hpp"

namespace dco {

std::optional<KeyframeWindow> KeyframeBuffer::push_frame(GrayImage frame) {
    if (!frames_.empty() &&
        (frame.width != frames_.front().width || frame.height != frames_.front().height))
        throw InputError("push_frame: frame dimensions differ from buffered frames");
    frames_.push_back(std::move(frame));
    if (frames_.size() > 3) frames_.pop_front();
    if (frames_.size() < 3) return std::nullopt;
    return KeyframeWindow{frames_[0], frames_[1], frames_[2]};
}

namespace {

constexpr int kPatchSize = 8;
constexpr int kPatchStride = 4;
constexpr int kSearchIterations = 12;
constexpr int kMinLevelDim = 16;

// Patch start positions on a stride grid, with the final position pinned so
// the last patch touches the image edge.
std::vector<int> patch_positions(int extent) {
    std::vector<int> positions;
    int last = extent - kPatchSize;
    for (int p = 0; p <= last; p += kPatchStride) positions.push_back(p);
    if (positions.empty() || positions.back() != last) positions.push_back(std::max(last, 0));
    return positions;
}

// Bilinear upsample of a flow field to the given dimensions, displacement
// vectors doubled for the finer scale.
FlowField upsample_flow(const FlowField& coarse, int fine_w, int fine_h) {
    FlowField fine(fine_w, fine_h);
    for (int y = 0; y < fine_h; ++y) {
        float sy = std::clamp((y + 0.5f) * 0.5f - 0.5f, 0.0f, static_cast<float>(coarse.height - 1));
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, coarse.height - 1);
        float fy = sy - static_cast<float>(y0);
        for (int x = 0; x < fine_w; ++x) {
            float sx =
                std::clamp((x + 0.5f) * 0.5f - 0.5f, 0.0f, static_cast<float>(coarse.width - 1));
            int x0 = static_cast<int>(sx);
            int x1 = std::min(x0 + 1, coarse.width - 1);
            float fx = sx - static_cast<float>(x0);
            auto lerp2 = [&](const std::vector<float>& c) {
                float top = c[coarse.idx(x0, y0)] * (1 - fx) + c[coarse.idx(x1, y0)] * fx;
                float bot = c[coarse.idx(x0, y1)] * (1 - fx) + c[coarse.idx(x1, y1)] * fx;
                return top * (1 - fy) + bot * fy;
            };
            fine.u[fine.idx(x, y)] = 2.0f * lerp2(coarse.u);
            fine.v[fine.idx(x, y)] = 2.0f * lerp2(coarse.v);
        }
    }
    return fine;
}

struct PatchResult {
    float du = 0.0f, dv = 0.0f;
    float weight = 0.0f;
};

// Translational inverse search for one patch: template gradients and Hessian
// are fixed, each iteration samples the target at the current displacement
// and composes the increment inversely.
PatchResult search_patch(const GrayImage& from, const GrayImage& to, int px, int py, float seed_u,
                         float seed_v) {
    float t[kPatchSize * kPatchSize];
    float gx[kPatchSize * kPatchSize];
    float gy[kPatchSize * kPatchSize];
    double h00 = 1e-6, h01 = 0.0, h11 = 1e-6;
    int n = 0;
    for (int dy = 0; dy < kPatchSize; ++dy) {
        for (int dx = 0; dx < kPatchSize; ++dx, ++n) {
            int x = px + dx, y = py + dy;
            t[n] = from.at(x, y);
            gx[n] = 0.5f * (from.at_clamped(x + 1, y) - from.at_clamped(x - 1, y));
            gy[n] = 0.5f * (from.at_clamped(x, y + 1) - from.at_clamped(x, y - 1));
            h00 += static_cast<double>(gx[n]) * gx[n];
            h01 += static_cast<double>(gx[n]) * gy[n];
            h11 += static_cast<double>(gy[n]) * gy[n];
        }
    }
    const double det = h00 * h11 - h01 * h01;
    const double inv00 = h11 / det, inv01 = -h01 / det, inv11 = h00 / det;

    float u = seed_u, v = seed_v;
    double mse = 0.0;
    for (int iter = 0; iter < kSearchIterations; ++iter) {
        double bu = 0.0, bv = 0.0, sse = 0.0;
        n = 0;
        for (int dy = 0; dy < kPatchSize; ++dy) {
            for (int dx = 0; dx < kPatchSize; ++dx, ++n) {
                float r = sample_bilinear(to, px + dx + u, py + dy + v) - t[n];
                bu += static_cast<double>(gx[n]) * r;
                bv += static_cast<double>(gy[n]) * r;
                sse += static_cast<double>(r) * r;
            }
        }
        mse = sse / (kPatchSize * kPatchSize);
        double step_u = inv00 * bu + inv01 * bv;
        double step_v = inv01 * bu + inv11 * bv;
        u -= static_cast<float>(step_u);
        v -= static_cast<float>(step_v);
        if (!std::isfinite(u) || !std::isfinite(v)) {
            u = seed_u;
            v = seed_v;
            break;
        }
        u = std::clamp(u, static_cast<float>(-to.width), static_cast<float>(to.width));
        v = std::clamp(v, static_cast<float>(-to.height), static_cast<float>(to.height));
        if (step_u * step_u + step_v * step_v < 1e-6) break;
    }
    return {u, v, static_cast<float>(1.0 / (mse + 1e-2))};
}

FlowField estimate_level(const GrayImage& from, const GrayImage& to, const FlowField& init) {
    const int w = from.width, h = from.height;
    std::vector<double> acc_u(static_cast<size_t>(w) * h, 0.0);
    std::vector<double> acc_v(static_cast<size_t>(w) * h, 0.0);
    std::vector<double> acc_w(static_cast<size_t>(w) * h, 0.0);

    const std::vector<int> xs = patch_positions(w);
    const std::vector<int> ys = patch_positions(h);
    for (int py : ys) {
        for (int px : xs) {
            int cx = std::min(px + kPatchSize / 2, w - 1);
            int cy = std::min(py + kPatchSize / 2, h - 1);
            PatchResult r =
                search_patch(from, to, px, py, init.u_at(cx, cy), init.v_at(cx, cy));
            for (int dy = 0; dy < kPatchSize && py + dy < h; ++dy) {
                size_t row = static_cast<size_t>(py + dy) * w;
                for (int dx = 0; dx < kPatchSize && px + dx < w; ++dx) {
                    size_t i = row + px + dx;
                    acc_u[i] += static_cast<double>(r.weight) * r.du;
                    acc_v[i] += static_cast<double>(r.weight) * r.dv;
                    acc_w[i] += r.weight;
                }
            }
        }
    }

    FlowField field(w, h);
    for (size_t i = 0; i < acc_w.size(); ++i) {
        if (acc_w[i] > 0.0) {
            field.u[i] = static_cast<float>(acc_u[i] / acc_w[i]);
            field.v[i] = static_cast<float>(acc_v[i] / acc_w[i]);
        }
    }
    // With the pinned last patch every pixel is covered; tiny images fall
    // back to the nearest covered pixel.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = field.idx(x, y);
            if (acc_w[i] > 0.0) continue;
            for (int radius = 1; radius < std::max(w, h); ++radius) {
                bool found = false;
                for (int dy = -radius; dy <= radius && !found; ++dy) {
                    for (int dx = -radius; dx <= radius && !found; ++dx) {
                        int qx = x + dx, qy = y + dy;
                        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                        size_t q = field.idx(qx, qy);
                        if (acc_w[q] > 0.0) {
                            field.u[i] = field.u[q];
                            field.v[i] = field.v[q];
                            found = true;
                        }
                    }
                }
                if (found) break;
            }
        }
    }
    return field;
}

} // namespace

FlowField compute_flow(const GrayImage& from, const GrayImage& to, const PipelineConfig& cfg) {
    (void)cfg;
    if (from.width != to.width || from.height != to.height)
        throw InputError("compute_flow: frame dimensions differ");
    if (from.width < kPatchSize || from.height < kPatchSize)
        throw InputError("compute_flow: frames smaller than the patch size");

    int levels = 1;
    while (std::min(from.width, from.height) / (1 << levels) >= kMinLevelDim) ++levels;

    const std::vector<GrayImage> pyr_from = build_pyramid(from, levels);
    const std::vector<GrayImage> pyr_to = build_pyramid(to, levels);

    FlowField field(pyr_from.back().width, pyr_from.back().height);
    for (int level = levels - 1; level >= 0; --level) {
        if (level != levels - 1)
            field = upsample_flow(field, pyr_from[level].width, pyr_from[level].height);
        field = estimate_level(pyr_from[level], pyr_to[level], field);
    }
    return field;
}

} // namespace dco
