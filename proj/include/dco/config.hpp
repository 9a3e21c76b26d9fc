#pragma once

#include <string>

#include "dco/error.hpp"

namespace dco {

/// Pipeline parameters. Everything is overridable through a key=value
/// config file; the defaults are a known-good operating point.
struct PipelineConfig {
    // Stereo matching cost
    double lambda_ad = 10.00;     // AD measure regularizer
    double lambda_census = 40.00; // census measure regularizer
    double gamma_l = 1.00;        // edge control for the adaptive weight
    double epsilon = 0.80;        // arm-length correction

    // Contour thresholds (on magnitudes normalized to [0,1])
    double t_high = 0.06;
    double t_low = 0.03;
    double t_depth = 0.03;

    // Quadratic objective balance
    double lambda_d = 0.80;  // data term
    double lambda_s = 1.20;  // smoothness term
    double lambda_s2 = 0.02; // stability term

    // Disparity search range, quarter-scale pixels
    int d_min = 0;
    int d_max = 64;

    // Stereo rig intrinsics at FULL resolution
    double focal_px = 400.0;
    double baseline_m = 0.12;

    // Census window (odd dims, w*h-1 <= 64 bits)
    int census_window_w = 9;
    int census_window_h = 7;

    // Cross-support window arm construction
    double cross_color_tau = 20.0 / 255.0;
    double cross_color_tau2 = 6.0 / 255.0;
    int cross_arm_l1 = 17;
    int cross_arm_l2 = 8;

    // Contour confidence shaping
    int box_radius = 5;
    double gauss_sigma = 1.4;
    double confidence_offset_k = 2.0;

    // Disparity refinement
    int hist_iterations = 2;

    // Dense solve
    double solver_tol = 1e-5;
    int solver_max_iter = 400;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

/// Parses a key=value file, one parameter per line, '#' comments.
/// Unknown keys and malformed lines are input errors; the returned config
/// has been validated.
PipelineConfig load_config(const std::string& path);

/// Writes every parameter as key=value, one per line.
void save_config(const PipelineConfig& cfg, const std::string& path);

} // namespace dco
