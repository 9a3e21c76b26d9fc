#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dco/config.hpp"

namespace dco {

/// One line of a sequence manifest: tab-separated
/// `index left_path right_path [pose16]`, pose row-major.
struct FrameRecord {
    int index = 0;
    std::string left_path;
    std::string right_path;
    std::optional<std::array<double, 16>> pose;
};

/// Indices must be strictly increasing. Relative paths resolve against the
/// manifest's directory.
std::vector<FrameRecord> load_manifest(const std::string& path);

/// Per-frame stage durations in milliseconds. The frame total is measured
/// independently; `other` absorbs total minus the sum of the named stages.
struct StageTimings {
    double adaptive_filter_area = 0.0;
    double initial_parallax = 0.0;
    double parallax_optimisation = 0.0;
    double sparse_map = 0.0;
    double bidirectional_flow = 0.0;
    double amplitude = 0.0;
    double fusion = 0.0;
    double box_filter = 0.0;
    double normalisation = 0.0;
    double gaussian_filtering = 0.0;
    double depth_contour = 0.0;
    double densification = 0.0;
    double rendering = 0.0;
    double other = 0.0;
    double total = 0.0;

    static const std::vector<std::string>& stage_names(); // the 14 stages, other last
    std::vector<double> stage_values() const;             // same order
};

struct RunOptions {
    std::string config_path;  // empty -> built-in defaults
    std::string manifest_path;
    std::string output_dir;
    std::string debug_dir;    // empty -> no debug dumps
    std::string mesh_path;    // empty -> no virtual object, composite = real frame
};

struct FrameResult {
    int index = 0;
    bool composited = false;       // frame was the middle of a full window
    bool densify_skipped = false;  // unsolvable; previous dense map reused
    StageTimings timings;
    double densify_objective = 0.0;
    int densify_iterations = 0;
};

struct RunSummary {
    int frames_total = 0;
    int composited = 0;
    int densify_failures = 0;
    std::vector<FrameResult> frames;
    std::string timings_csv_path;
};

/// Runs the whole pipeline over a manifest: quarter-scale downsampling,
/// stereo sparse depth, keyframe-window flow, contour extraction, dense
/// solve seeded with the previous frame's dense map, then render and
/// composite. Writes composite_NNNN.ppm, mask_NNNN.pgm, dense_NNNN.pfm and
/// timings.csv under output_dir. Frames that never become the middle of a
/// window emit the real frame unmodified. Throws UnsolvableFrameError only
/// when every processed frame failed to densify.
RunSummary run_pipeline(const RunOptions& opts);

struct BenchRow {
    std::string stage;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

struct BenchReport {
    int repetitions = 0;
    std::vector<BenchRow> rows; // one per stage, StageTimings order
    BenchRow total;             // frame total
};

/// Repeats the pipeline `repetitions` times after one unmeasured warm-up
/// run and aggregates the per-frame stage means.
BenchReport bench(const RunOptions& opts, int repetitions);

void write_bench_csv(const BenchReport& report, const std::string& path);
std::string format_bench_report(const BenchReport& report);

} // namespace dco
