#pragma once

#include <cstdint>
#include <string>

#include "dco/flow.hpp"
#include "dco/image.hpp"

namespace dco {

/// Parameters of the generated scene: a textured square at z_fg sliding over
/// a textured static background plane at z_bg, imaged by a rectified pair.
struct SceneSpec {
    int width = 320;
    int height = 192;
    int frame_count = 5;
    double z_fg = 1.0;       // meters, must be nearer than z_bg
    double z_bg = 2.0;
    double focal_px = 400.0;
    double baseline_m = 0.12;
    int square_size = 80;    // full-resolution pixels
    double square_x0 = 96.0; // top-left at frame 0
    double square_y0 = 56.0;
    double shift_x = 4.0;    // per-frame motion, full-resolution pixels
    double shift_y = 0.0;
    uint64_t seed = 1234;
};

/// Everything known analytically about one frame of the scene.
struct SynthFrame {
    GrayImage left, right;
    FloatMap gt_depth;       // full resolution, left view
    BinaryMask gt_boundary;  // the square's perimeter pixels
    FlowField gt_flow;       // motion toward the next frame, full resolution
};

/// Deterministic, platform-independent texture hash in [0,1).
float hash_noise(int x, int y, uint64_t seed);

/// Renders frame `index` of the scene. z_fg >= z_bg is an invalid scene.
SynthFrame render_synth_frame(const SceneSpec& spec, int index);

/// Writes left/right PGMs, ground-truth PFMs/.flo/masks, and a manifest for
/// the whole sequence; returns the manifest path.
std::string synth_scene(const SceneSpec& spec, const std::string& out_dir);

} // namespace dco
