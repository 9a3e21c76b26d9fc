#include "dco/stereo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dco {

namespace {

// Maximal color-valid arm reach from (x,y) along (dx,dy): every pixel on the
// arm stays within cross_color_tau of the center, tightening to
// cross_color_tau2 beyond cross_arm_l2, capped at cross_arm_l1 and the border.
int grow_arm(const GrayImage& img, int x, int y, int dx, int dy, const PipelineConfig& cfg) {
    const float center = img.at(x, y);
    int length = 0;
    for (int l = 1; l <= cfg.cross_arm_l1; ++l) {
        int qx = x + l * dx;
        int qy = y + l * dy;
        if (!img.in_bounds(qx, qy)) break;
        double tau = l <= cfg.cross_arm_l2 ? cfg.cross_color_tau : cfg.cross_color_tau2;
        if (std::abs(img.at(qx, qy) - center) >= tau) break;
        length = l;
    }
    return length;
}

// 3x3 median with replicated borders, then clamped to the raw color-valid
// reach so smoothing never extends an arm across a color break or the border.
void smooth_arm_channel(std::vector<uint8_t>& arms, int width, int height) {
    std::vector<uint8_t> raw = arms;
    uint8_t window[9];
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                int yy = std::clamp(y + dy, 0, height - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = std::clamp(x + dx, 0, width - 1);
                    window[n++] = raw[static_cast<size_t>(yy) * width + xx];
                }
            }
            std::nth_element(window, window + 4, window + 9);
            size_t i = static_cast<size_t>(y) * width + x;
            arms[i] = std::min(window[4], raw[i]);
        }
    }
}

} // namespace

CrossWindowField build_cross_windows(const GrayImage& img, const PipelineConfig& cfg) {
    CrossWindowField field(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            size_t i = field.idx(x, y);
            field.left[i] = static_cast<uint8_t>(grow_arm(img, x, y, -1, 0, cfg));
            field.right[i] = static_cast<uint8_t>(grow_arm(img, x, y, 1, 0, cfg));
            field.up[i] = static_cast<uint8_t>(grow_arm(img, x, y, 0, -1, cfg));
            field.down[i] = static_cast<uint8_t>(grow_arm(img, x, y, 0, 1, cfg));
        }
    }
    smooth_arm_channel(field.left, field.width, field.height);
    smooth_arm_channel(field.right, field.width, field.height);
    smooth_arm_channel(field.up, field.width, field.height);
    smooth_arm_channel(field.down, field.width, field.height);
    return field;
}

CensusMap census_transform(const GrayImage& img, int window_w, int window_h) {
    if (window_w % 2 == 0 || window_h % 2 == 0)
        throw ConfigError("census_transform: window dimensions must be odd");
    if (window_w * window_h - 1 > 64)
        throw ConfigError("census_transform: window exceeds 64 comparison bits");
    CensusMap map;
    map.width = img.width;
    map.height = img.height;
    map.bits = window_w * window_h - 1;
    map.data.resize(img.pixel_count());
    const int rw = window_w / 2;
    const int rh = window_h / 2;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float center = img.at(x, y);
            uint64_t bits = 0;
            for (int dy = -rh; dy <= rh; ++dy) {
                for (int dx = -rw; dx <= rw; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    bits = (bits << 1) | (img.at_clamped(x + dx, y + dy) < center ? 1u : 0u);
                }
            }
            map.data[static_cast<size_t>(y) * img.width + x] = bits;
        }
    }
    return map;
}

int hamming_distance(uint64_t a, uint64_t b) {
    return static_cast<int>(std::popcount(a ^ b));
}

double adaptive_alpha(int l_min, const PipelineConfig& cfg) {
    return 1.0 - std::exp(-cfg.gamma_l / (static_cast<double>(l_min) + cfg.epsilon));
}

CostVolume compute_cost_volume(const GrayImage& left, const GrayImage& right,
                               const CrossWindowField& windows, const PipelineConfig& cfg) {
    if (left.width != right.width || left.height != right.height)
        throw InputError("compute_cost_volume: left/right dimensions differ");
    if (windows.width != left.width || windows.height != left.height)
        throw InputError("compute_cost_volume: cross windows built on different dimensions");
    cfg.validate();

    const CensusMap census_l = census_transform(left, cfg.census_window_w, cfg.census_window_h);
    const CensusMap census_r = census_transform(right, cfg.census_window_w, cfg.census_window_h);

    CostVolume vol;
    vol.width = left.width;
    vol.height = left.height;
    vol.d_min = cfg.d_min;
    vol.d_max = cfg.d_max;
    vol.cost.resize(left.pixel_count() * static_cast<size_t>(vol.num_disparities()));

    // exp(-h/lambda_census) has only bits+1 possible inputs; precompute.
    std::vector<double> census_term(static_cast<size_t>(census_l.bits) + 1);
    for (size_t h = 0; h < census_term.size(); ++h)
        census_term[h] = 1.0 - std::exp(-static_cast<double>(h) / cfg.lambda_census);

    for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
            const double alpha = adaptive_alpha(windows.min_arm(x, y), cfg);
            const float lum = left.at(x, y);
            const uint64_t cl = census_l.at(x, y);
            float* dst = &vol.cost[vol.idx(x, y, vol.d_min)];
            for (int d = vol.d_min; d <= vol.d_max; ++d) {
                int qx = x - d;
                if (qx < 0) {
                    dst[d - vol.d_min] = 2.0f;
                    continue;
                }
                double c_ad = std::abs(lum - right.at(qx, y)) * 255.0;
                double ad_term = 1.0 - std::exp(-c_ad / cfg.lambda_ad);
                int h = hamming_distance(cl, census_r.at(qx, y));
                dst[d - vol.d_min] =
                    static_cast<float>(alpha * ad_term + (1.0 - alpha) * census_term[h]);
            }
        }
    }
    return vol;
}

CostVolume aggregate_costs(const CostVolume& vol, const CrossWindowField& windows) {
    if (windows.width != vol.width || windows.height != vol.height)
        throw InputError("aggregate_costs: cross windows built on different dimensions");
    const int w = vol.width, h = vol.height, nd = vol.num_disparities();

    // Region member count is disparity-independent: horizontal span per pixel,
    // then the sum of spans along the vertical arm.
    std::vector<int> span(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = windows.idx(x, y);
            span[i] = windows.left[i] + windows.right[i] + 1;
        }
    std::vector<double> col_prefix(static_cast<size_t>(h) + 1);
    std::vector<int> region_size(static_cast<size_t>(w) * h);
    for (int x = 0; x < w; ++x) {
        col_prefix[0] = 0.0;
        for (int y = 0; y < h; ++y)
            col_prefix[y + 1] = col_prefix[y] + span[static_cast<size_t>(y) * w + x];
        for (int y = 0; y < h; ++y) {
            size_t i = windows.idx(x, y);
            int y0 = y - windows.up[i];
            int y1 = y + windows.down[i];
            region_size[i] = static_cast<int>(col_prefix[y1 + 1] - col_prefix[y0]);
        }
    }

    CostVolume out = vol;
    std::vector<double> slice(static_cast<size_t>(w) * h);
    std::vector<double> hsum(static_cast<size_t>(w) * h);
    std::vector<double> row_prefix(static_cast<size_t>(w) + 1);

    for (int d = vol.d_min; d <= vol.d_max; ++d) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                slice[static_cast<size_t>(y) * w + x] =
                    vol.cost[(static_cast<size_t>(y) * w + x) * nd + (d - vol.d_min)];

        // Sum along each pixel's own horizontal arms.
        for (int y = 0; y < h; ++y) {
            row_prefix[0] = 0.0;
            const double* src = &slice[static_cast<size_t>(y) * w];
            for (int x = 0; x < w; ++x) row_prefix[x + 1] = row_prefix[x] + src[x];
            for (int x = 0; x < w; ++x) {
                size_t i = windows.idx(x, y);
                int x0 = x - windows.left[i];
                int x1 = x + windows.right[i];
                hsum[i] = row_prefix[x1 + 1] - row_prefix[x0];
            }
        }
        // Then along the center pixel's vertical arm.
        for (int x = 0; x < w; ++x) {
            col_prefix[0] = 0.0;
            for (int y = 0; y < h; ++y)
                col_prefix[y + 1] = col_prefix[y] + hsum[static_cast<size_t>(y) * w + x];
            for (int y = 0; y < h; ++y) {
                size_t i = windows.idx(x, y);
                int y0 = y - windows.up[i];
                int y1 = y + windows.down[i];
                double total = col_prefix[y1 + 1] - col_prefix[y0];
                out.cost[(static_cast<size_t>(y) * w + x) * nd + (d - vol.d_min)] =
                    static_cast<float>(total / region_size[i]);
            }
        }
    }
    return out;
}

DisparityMap select_disparity_wta(const CostVolume& vol) {
    DisparityMap disp(vol.width, vol.height);
    const int nd = vol.num_disparities();
    for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
            const float* costs = &vol.cost[(static_cast<size_t>(y) * vol.width + x) * nd];
            int best = 0;
            float best_cost = costs[0];
            for (int k = 1; k < nd; ++k) {
                if (costs[k] < best_cost) {
                    best_cost = costs[k];
                    best = k;
                }
            }
            disp.at(x, y) = static_cast<float>(vol.d_min + best);
        }
    }
    return disp;
}

DisparityMap refine_disparity_histogram(const DisparityMap& disp, const CrossWindowField& windows,
                                        int iterations) {
    if (windows.width != disp.width || windows.height != disp.height)
        throw InputError("refine_disparity_histogram: cross windows built on different dimensions");
    DisparityMap current = disp;

    // counting histogram over the integer disparity range of the field
    int bin_max = 0;
    for (float v : disp.disparity)
        if (FloatMap::is_valid(v)) bin_max = std::max(bin_max, static_cast<int>(std::lround(v)));
    std::vector<int> counts(static_cast<size_t>(bin_max) + 1, 0);

    for (int iter = 0; iter < iterations; ++iter) {
        DisparityMap next = current;
        for (int y = 0; y < disp.height; ++y) {
            for (int x = 0; x < disp.width; ++x) {
                if (!current.valid_at(x, y)) continue; // removed outliers stay removed
                size_t i = windows.idx(x, y);
                int region_size = 0;
                int lo = bin_max, hi = 0;
                for (int r = -windows.up[i]; r <= windows.down[i]; ++r) {
                    int vy = y + r;
                    size_t vi = windows.idx(x, vy);
                    for (int c = -windows.left[vi]; c <= windows.right[vi]; ++c) {
                        float v = current.at(x + c, vy);
                        if (!FloatMap::is_valid(v)) continue;
                        int bin = static_cast<int>(std::lround(v));
                        ++counts[bin];
                        ++region_size;
                        lo = std::min(lo, bin);
                        hi = std::max(hi, bin);
                    }
                }
                // ties break toward the smaller disparity
                int mode = lo, mode_count = 0;
                for (int bin = lo; bin <= hi; ++bin) {
                    if (counts[bin] > mode_count) {
                        mode_count = counts[bin];
                        mode = bin;
                    }
                }
                for (int r = -windows.up[i]; r <= windows.down[i]; ++r) {
                    int vy = y + r;
                    size_t vi = windows.idx(x, vy);
                    for (int c = -windows.left[vi]; c <= windows.right[vi]; ++c) {
                        float v = current.at(x + c, vy);
                        if (FloatMap::is_valid(v)) --counts[static_cast<int>(std::lround(v))];
                    }
                }
                if (mode_count == 1 && region_size >= 4) {
                    next.at(x, y) = FloatMap::kNoData; // no consensus: outlier
                } else {
                    next.at(x, y) = static_cast<float>(mode);
                }
            }
        }
        current = std::move(next);
    }
    return current;
}

SparseDepthMap disparity_to_sparse_depth(const DisparityMap& disp, const PipelineConfig& cfg,
                                         int full_width, int full_height) {
    if (full_width < disp.width * 2 || full_height < disp.height * 2)
        throw InputError("disparity_to_sparse_depth: full dimensions too small for the quarter map");
    SparseDepthMap depth(full_width, full_height);
    for (int y = 0; y < disp.height; ++y) {
        for (int x = 0; x < disp.width; ++x) {
            if (!disp.valid_at(x, y)) continue;
            double d_full = 2.0 * disp.at(x, y);
            if (d_full <= 0.0) continue; // point at infinity
            depth.at(2 * x, 2 * y) = static_cast<float>(cfg.focal_px * cfg.baseline_m / d_full);
        }
    }
    return depth;
}

} // namespace dco
