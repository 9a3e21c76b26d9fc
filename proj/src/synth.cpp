#include "dco/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dco/codec.hpp"

namespace dco {

float hash_noise(int x, int y, uint64_t seed) {
    // splitmix64 finalizer over the packed coordinates; platform-independent
    uint64_t k = seed + static_cast<uint64_t>(static_cast<uint32_t>(x)) * 0x9E3779B97F4A7C15ull +
                 static_cast<uint64_t>(static_cast<uint32_t>(y)) * 0xC2B2AE3D27D4EB4Full;
    k = (k ^ (k >> 30)) * 0xBF58476D1CE4E5B9ull;
    k = (k ^ (k >> 27)) * 0x94D049BB133111EBull;
    k = k ^ (k >> 31);
    return static_cast<float>(k >> 40) / static_cast<float>(1 << 24);
}

namespace {

// Value noise on a wrapped lattice of the given cell size.
float value_noise(int x, int y, int cell, int period_x, int period_y, uint64_t seed) {
    int nx = std::max(1, period_x / cell);
    int ny = std::max(1, period_y / cell);
    int gx = x / cell, gy = y / cell;
    float fx = static_cast<float>(x - gx * cell) / static_cast<float>(cell);
    float fy = static_cast<float>(y - gy * cell) / static_cast<float>(cell);
    // smoothstep fade
    fx = fx * fx * (3.0f - 2.0f * fx);
    fy = fy * fy * (3.0f - 2.0f * fy);
    auto corner = [&](int cxg, int cyg) {
        return hash_noise(((cxg % nx) + nx) % nx, ((cyg % ny) + ny) % ny, seed);
    };
    float top = corner(gx, gy) * (1 - fx) + corner(gx + 1, gy) * fx;
    float bot = corner(gx, gy + 1) * (1 - fx) + corner(gx + 1, gy + 1) * fx;
    return top * (1 - fy) + bot * fy - 0.5f;
}

// Band-limited texture around a base level, wrapped with the given period.
GrayImage make_texture(int w, int h, int period_x, int period_y, float base, uint64_t seed) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float v = base + 0.22f * value_noise(x, y, 8, period_x, period_y, seed) +
                      0.12f * value_noise(x, y, 4, period_x, period_y, seed ^ 0x51u) +
                      0.06f * (hash_noise(x % period_x, y % period_y, seed ^ 0xA7u) - 0.5f);
            img.at(x, y) = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return img;
}

float wrapped_sample(const GrayImage& tex, double x, int y) {
    // bilinear in x with horizontal wrap; y is integral in every caller
    double fx = x - std::floor(x);
    int x0 = static_cast<int>(std::floor(x)) % tex.width;
    if (x0 < 0) x0 += tex.width;
    int x1 = (x0 + 1) % tex.width;
    int yy = ((y % tex.height) + tex.height) % tex.height;
    return tex.at(x0, yy) * static_cast<float>(1.0 - fx) + tex.at(x1, yy) * static_cast<float>(fx);
}

} // namespace

SynthFrame render_synth_frame(const SceneSpec& spec, int index) {
    if (spec.z_fg >= spec.z_bg)
        throw InputError("synth: foreground must be nearer than the background (z_fg < z_bg)");
    if (spec.width < 16 || spec.height < 16 || spec.width % 8 != 0 || spec.height % 8 != 0)
        throw InputError("synth: dimensions must be multiples of 8 and at least 16");
    if (spec.square_size < 4) throw InputError("synth: square too small");

    const double d_fg = spec.focal_px * spec.baseline_m / spec.z_fg;
    const double d_bg = spec.focal_px * spec.baseline_m / spec.z_bg;

    auto square_pos = [&](int i) {
        return std::pair<int, int>{
            static_cast<int>(std::lround(spec.square_x0 + i * spec.shift_x)),
            static_cast<int>(std::lround(spec.square_y0 + i * spec.shift_y))};
    };
    auto [sx, sy] = square_pos(index);
    if (sx < 0 || sy < 0 || sx + spec.square_size > spec.width ||
        sy + spec.square_size > spec.height)
        throw InputError("synth: the square leaves the frame at index " + std::to_string(index));

    const GrayImage bg = make_texture(spec.width, spec.height, spec.width, spec.height, 0.62f,
                                      spec.seed ^ 0xB66Bull);
    const GrayImage fg = make_texture(spec.square_size, spec.square_size, spec.square_size,
                                      spec.square_size, 0.34f, spec.seed ^ 0xF00Dull);

    SynthFrame frame;
    frame.left = GrayImage(spec.width, spec.height);
    frame.right = GrayImage(spec.width, spec.height);
    frame.gt_depth = FloatMap(spec.width, spec.height);
    frame.gt_boundary = BinaryMask(spec.width, spec.height, 0);
    frame.gt_flow = FlowField(spec.width, spec.height);

    const int size = spec.square_size;
    const double right_sq_x = sx - d_fg; // square's left edge in the right view

    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const bool in_square =
                x >= sx && x < sx + size && y >= sy && y < sy + size;
            frame.left.at(x, y) = in_square ? fg.at(x - sx, y - sy) : bg.at(x, y);
            frame.gt_depth.at(x, y) = static_cast<float>(in_square ? spec.z_fg : spec.z_bg);

            // right view: the square sits d_fg to the left, the background d_bg
            const double fg_u = x - right_sq_x;
            if (fg_u >= 0.0 && fg_u < size && y >= sy && y < sy + size) {
                frame.right.at(x, y) =
                    wrapped_sample(fg, std::min(fg_u, static_cast<double>(size - 1)), y - sy);
            } else {
                frame.right.at(x, y) = wrapped_sample(bg, x + d_bg, y);
            }
        }
    }

    // perimeter ring of the covered rectangle
    for (int y = sy; y < sy + size; ++y)
        for (int x = sx; x < sx + size; ++x)
            if (x == sx || x == sx + size - 1 || y == sy || y == sy + size - 1)
                frame.gt_boundary.at(x, y) = 1;

    auto [nx, ny] = square_pos(index + 1);
    const float du = static_cast<float>(nx - sx), dv = static_cast<float>(ny - sy);
    for (int y = sy; y < sy + size; ++y)
        for (int x = sx; x < sx + size; ++x) {
            frame.gt_flow.u[frame.gt_flow.idx(x, y)] = du;
            frame.gt_flow.v[frame.gt_flow.idx(x, y)] = dv;
        }
    return frame;
}

std::string synth_scene(const SceneSpec& spec, const std::string& out_dir) {
    if (spec.frame_count < 1) throw InputError("synth: frame_count must be >= 1");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    char name[64];
    std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
    std::ofstream manifest(manifest_path);
    if (!manifest) throw InputError("synth: cannot write " + manifest_path);

    for (int i = 0; i < spec.frame_count; ++i) {
        SynthFrame frame = render_synth_frame(spec, i);
        std::snprintf(name, sizeof(name), "left_%03d.pgm", i);
        std::string left_name = name;
        write_pgm(frame.left, (fs::path(out_dir) / left_name).string());
        std::snprintf(name, sizeof(name), "right_%03d.pgm", i);
        std::string right_name = name;
        write_pgm(frame.right, (fs::path(out_dir) / right_name).string());
        std::snprintf(name, sizeof(name), "gt_depth_%03d.pfm", i);
        write_pfm(frame.gt_depth, (fs::path(out_dir) / name).string());
        std::snprintf(name, sizeof(name), "gt_boundary_%03d.pgm", i);
        write_mask_pgm(frame.gt_boundary, (fs::path(out_dir) / name).string());
        std::snprintf(name, sizeof(name), "gt_flow_%03d.flo", i);
        write_flo(frame.gt_flow, (fs::path(out_dir) / name).string());
        manifest << i << '\t' << left_name << '\t' << right_name << '\n';
    }
    return manifest_path;
}

} // namespace dco
