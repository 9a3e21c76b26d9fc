#include "dco/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dco/codec.hpp"
#include "dco/contour.hpp"
#include "dco/densify.hpp"
#include "dco/flow.hpp"
#include "dco/occlude.hpp"
#include "dco/pyramid.hpp"
#include "dco/stereo.hpp"

namespace dco {

namespace fs = std::filesystem;

std::vector<FrameRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("manifest: cannot open " + path);
    const fs::path base = fs::path(path).parent_path();

    std::vector<FrameRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        FrameRecord rec;
        std::string left, right;
        if (!(ss >> rec.index >> left >> right))
            throw InputError("manifest: malformed line " + std::to_string(line_no) + " in " + path);
        rec.left_path = (base / left).string();
        rec.right_path = (base / right).string();
        std::array<double, 16> pose{};
        int count = 0;
        double v;
        while (count < 16 && ss >> v) pose[count++] = v;
        if (count == 16)
            rec.pose = pose;
        else if (count != 0)
            throw InputError("manifest: pose needs 16 values at line " + std::to_string(line_no));
        if (!records.empty() && rec.index <= records.back().index)
            throw InputError("manifest: frame indices must be strictly increasing");
        records.push_back(std::move(rec));
    }
    return records;
}

const std::vector<std::string>& StageTimings::stage_names() {
    static const std::vector<std::string> names = {
        "adaptive filter area construction",
        "initial parallax",
        "parallax optimisation",
        "sparse map",
        "bidirectional optical flow",
        "amplitude",
        "fusion",
        "box filter",
        "normalisation",
        "Gaussian filtering",
        "depth contour extraction",
        "densification",
        "rendering",
        "other",
    };
    return names;
}

std::vector<double> StageTimings::stage_values() const {
    return {adaptive_filter_area, initial_parallax, parallax_optimisation, sparse_map,
            bidirectional_flow,   amplitude,        fusion,                box_filter,
            normalisation,        gaussian_filtering, depth_contour,       densification,
            rendering,            other};
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct FrameData {
    FrameRecord record;
    ColorImage real;    // full-resolution left view
    GrayImage gray;     // full-resolution luminance
    GrayImage left_q;   // quarter scale
    GrayImage right_q;
};

std::string numbered(const std::string& stem, int index, const std::string& ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem.c_str(), index, ext.c_str());
    return buf;
}

} // namespace

RunSummary run_pipeline(const RunOptions& opts) {
    PipelineConfig cfg = opts.config_path.empty() ? PipelineConfig{} : load_config(opts.config_path);
    cfg.validate();

    std::vector<FrameRecord> records = load_manifest(opts.manifest_path);
    if (records.size() < 3)
        throw InputError("pipeline: manifest must list at least 3 frames (keyframe window)");

    std::optional<TriangleMesh> mesh;
    if (!opts.mesh_path.empty()) mesh = load_obj(opts.mesh_path);

    fs::create_directories(opts.output_dir);
    if (!opts.debug_dir.empty()) fs::create_directories(opts.debug_dir);

    RunSummary summary;
    summary.frames_total = static_cast<int>(records.size());
    summary.timings_csv_path = (fs::path(opts.output_dir) / "timings.csv").string();

    std::ofstream csv(summary.timings_csv_path);
    csv << "frame";
    for (const auto& name : StageTimings::stage_names()) csv << ',' << name;
    csv << ",frame total,densify objective,densify iterations\n";

    KeyframeBuffer window;
    std::deque<FrameData> recent;
    std::optional<FloatMap> previous_dense;
    std::vector<uint8_t> composited(records.size(), 0);

    for (size_t fi = 0; fi < records.size(); ++fi) {
        const FrameRecord& rec = records[fi];
        FrameData data;
        data.record = rec;
        try {
            data.real = read_color(rec.left_path);
            data.gray = read_gray(rec.left_path);
            GrayImage right_gray = read_gray(rec.right_path);
            data.left_q = downsample_half(data.gray);
            data.right_q = downsample_half(right_gray);
        } catch (const CodecError& e) {
            throw InputError("pipeline: frame " + std::to_string(rec.index) + ": " + e.what());
        }
        if (!recent.empty() &&
            (data.real.width != recent.front().real.width ||
             data.real.height != recent.front().real.height))
            throw InputError("pipeline: frame " + std::to_string(rec.index) +
                             " has mismatched dimensions");

        recent.push_back(std::move(data));
        if (recent.size() > 3) recent.pop_front();

        std::optional<KeyframeWindow> win = window.push_frame(recent.back().left_q);
        if (!win) continue;

        // the window centers on the second-newest frame
        const FrameData& middle = recent[recent.size() - 2];
        const int full_w = middle.real.width, full_h = middle.real.height;

        FrameResult result;
        result.index = middle.record.index;
        result.composited = true;
        StageTimings& t = result.timings;
        const auto frame_start = Clock::now();

        auto timed = [](double& slot, auto&& fn) {
            const auto start = Clock::now();
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                slot += ms_since(start);
            } else {
                auto value = fn();
                slot += ms_since(start);
                return value;
            }
        };

        // --- stereo on the middle pair
        CrossWindowField cross = timed(t.adaptive_filter_area,
                                       [&] { return build_cross_windows(middle.left_q, cfg); });
        DisparityMap disp = timed(t.initial_parallax, [&] {
            CostVolume vol = compute_cost_volume(middle.left_q, middle.right_q, cross, cfg);
            CostVolume agg = aggregate_costs(vol, cross);
            return select_disparity_wta(agg);
        });
        disp = timed(t.parallax_optimisation,
                     [&] { return refine_disparity_histogram(disp, cross, cfg.hist_iterations); });
        SparseDepthMap sparse = timed(t.sparse_map, [&] {
            return disparity_to_sparse_depth(disp, cfg, full_w, full_h);
        });

        // --- bidirectional flow around the middle frame
        FlowField flow_past, flow_future;
        timed(t.bidirectional_flow, [&] {
            flow_past = compute_flow(win->middle, win->past, cfg);
            flow_future = compute_flow(win->middle, win->future, cfg);
        });
        AmplitudeMap m_past, m_future;
        timed(t.amplitude, [&] {
            m_past = gradient_amplitude(flow_to_polar(flow_past));
            m_future = gradient_amplitude(flow_to_polar(flow_future));
        });
        AmplitudeMap fused = timed(t.fusion, [&] {
            return fuse_amplitudes(flow_past, flow_future, m_past, m_future, cfg);
        });
        AmplitudeMap fused_raw_dbg, boxed_dbg;
        if (!opts.debug_dir.empty()) fused_raw_dbg = fused;
        fused = timed(t.box_filter, [&] { return box_filter(fused, cfg.box_radius); });
        if (!opts.debug_dir.empty()) boxed_dbg = fused;
        fused = timed(t.normalisation, [&] { return normalize_amplitude(fused); });

        // --- contour extraction at full resolution
        GrayImage blurred = timed(t.gaussian_filtering,
                                  [&] { return gaussian_blur(middle.gray, cfg.gauss_sigma); });
        ContourResult contours = timed(t.depth_contour, [&] {
            return extract_depth_contours_prefiltered(blurred, fused, cfg);
        });

        // --- densification seeded with the previous frame's dense map
        FloatMap dense;
        timed(t.densification, [&] {
            try {
                ConstraintSystem sys =
                    assemble_system(sparse, contours.edges, fused, contours.m_i,
                                    previous_dense ? &*previous_dense : nullptr, cfg);
                SolveStats stats;
                dense = solve_dense_depth(sys, cfg, &stats);
                result.densify_objective = stats.objective_final;
                result.densify_iterations = stats.iterations;
                previous_dense = dense;
            } catch (const UnsolvableFrameError& e) {
                std::cerr << "warning: frame " << middle.record.index << ": " << e.what()
                          << "; compositing against the previous dense map\n";
                result.densify_skipped = true;
                ++summary.densify_failures;
                dense = previous_dense ? *previous_dense : FloatMap(full_w, full_h);
            }
        });

        // --- render the virtual layer and composite
        CompositeResult comp;
        timed(t.rendering, [&] {
            if (mesh) {
                TriangleMesh posed = middle.record.pose ? transform_mesh(*mesh, *middle.record.pose)
                                                        : *mesh;
                VirtualLayer layer = render_virtual(posed, cfg.focal_px, full_w / 2.0,
                                                    full_h / 2.0, full_w, full_h);
                comp = composite(middle.real, dense, layer);
            } else {
                comp.color = middle.real;
                comp.mask = OcclusionMask(full_w, full_h, 0);
            }
        });

        t.total = ms_since(frame_start);
        double stage_sum = 0.0;
        for (double v : t.stage_values()) stage_sum += v;
        t.other = std::max(t.total - stage_sum, 0.0);

        const int idx = middle.record.index;
        write_ppm(comp.color, (fs::path(opts.output_dir) / numbered("composite", idx, "ppm")).string());
        write_mask_pgm(comp.mask, (fs::path(opts.output_dir) / numbered("mask", idx, "pgm")).string());
        write_pfm(dense, (fs::path(opts.output_dir) / numbered("dense", idx, "pfm")).string());

        if (!opts.debug_dir.empty()) {
            const fs::path dbg = opts.debug_dir;
            FloatMap disp_map(disp.width, disp.height);
            disp_map.data.assign(disp.disparity.begin(), disp.disparity.end());
            write_pfm(disp_map, (dbg / numbered("disparity", idx, "pfm")).string());
            write_ppm(render_false_color(disp_map), (dbg / numbered("disparity", idx, "ppm")).string());
            write_pfm(sparse, (dbg / numbered("sparse", idx, "pfm")).string());
            write_ppm(render_false_color(sparse), (dbg / numbered("sparse", idx, "ppm")).string());
            write_flo(flow_past, (dbg / numbered("flow_past", idx, "flo")).string());
            write_flo(flow_future, (dbg / numbered("flow_future", idx, "flo")).string());
            write_ppm(render_false_color(m_past), (dbg / numbered("m_past", idx, "ppm")).string());
            write_ppm(render_false_color(m_future),
                      (dbg / numbered("m_future", idx, "ppm")).string());
            write_ppm(render_false_color(fused_raw_dbg),
                      (dbg / numbered("m_fuse_raw", idx, "ppm")).string());
            write_ppm(render_false_color(boxed_dbg),
                      (dbg / numbered("m_fuse_boxed", idx, "ppm")).string());
            write_pfm(fused, (dbg / numbered("m_fuse", idx, "pfm")).string());
            write_ppm(render_false_color(fused), (dbg / numbered("m_fuse", idx, "ppm")).string());
            write_pfm(contours.m_i, (dbg / numbered("m_i", idx, "pfm")).string());
            write_mask_pgm(contours.edges, (dbg / numbered("edges", idx, "pgm")).string());
            write_ppm(render_false_color(dense), (dbg / numbered("dense", idx, "ppm")).string());
        }

        csv << idx;
        for (double v : t.stage_values()) csv << ',' << v;
        csv << ',' << t.total << ',' << result.densify_objective << ','
            << result.densify_iterations << '\n';

        composited[fi - 1] = 1;
        ++summary.composited;
        summary.frames.push_back(std::move(result));
    }

    // frames that never became a window's middle pass through unmodified
    for (size_t fi = 0; fi < records.size(); ++fi) {
        if (composited[fi]) continue;
        ColorImage real = read_color(records[fi].left_path);
        write_ppm(real,
                  (fs::path(opts.output_dir) / numbered("composite", records[fi].index, "ppm")).string());
        FrameResult result;
        result.index = records[fi].index;
        result.composited = false;
        summary.frames.push_back(std::move(result));
    }
    std::sort(summary.frames.begin(), summary.frames.end(),
              [](const FrameResult& a, const FrameResult& b) { return a.index < b.index; });

    if (summary.composited > 0 && summary.densify_failures == summary.composited)
        throw UnsolvableFrameError("pipeline: every frame failed to densify");
    return summary;
}

BenchReport bench(const RunOptions& opts, int repetitions) {
    if (repetitions < 1) throw InputError("bench: repetitions must be >= 1");
    run_pipeline(opts); // warm-up, excluded from statistics

    const auto& names = StageTimings::stage_names();
    std::vector<std::vector<double>> samples(names.size());
    std::vector<double> totals;

    for (int rep = 0; rep < repetitions; ++rep) {
        RunSummary summary = run_pipeline(opts);
        std::vector<double> sums(names.size(), 0.0);
        double total_sum = 0.0;
        int frames = 0;
        for (const FrameResult& frame : summary.frames) {
            if (!frame.composited) continue;
            std::vector<double> values = frame.timings.stage_values();
            for (size_t i = 0; i < values.size(); ++i) sums[i] += values[i];
            total_sum += frame.timings.total;
            ++frames;
        }
        if (frames == 0) throw InputError("bench: no composited frames to measure");
        for (size_t i = 0; i < sums.size(); ++i) samples[i].push_back(sums[i] / frames);
        totals.push_back(total_sum / frames);
    }

    auto summarize = [](const std::string& stage, const std::vector<double>& xs) {
        BenchRow row;
        row.stage = stage;
        row.min_ms = *std::min_element(xs.begin(), xs.end());
        row.max_ms = *std::max_element(xs.begin(), xs.end());
        double sum = 0.0;
        for (double v : xs) sum += v;
        row.mean_ms = sum / static_cast<double>(xs.size());
        return row;
    };

    BenchReport report;
    report.repetitions = repetitions;
    for (size_t i = 0; i < names.size(); ++i) report.rows.push_back(summarize(names[i], samples[i]));
    report.total = summarize("frame processing", totals);
    return report;
}

void write_bench_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("bench: cannot write " + path);
    out << "stage,mean_ms,min_ms,max_ms\n";
    for (const BenchRow& row : report.rows)
        out << row.stage << ',' << row.mean_ms << ',' << row.min_ms << ',' << row.max_ms << '\n';
    out << report.total.stage << ',' << report.total.mean_ms << ',' << report.total.min_ms << ','
        << report.total.max_ms << '\n';
}

std::string format_bench_report(const BenchReport& report) {
    std::ostringstream out;
    out << "repetitions: " << report.repetitions << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-36s %10s %10s %10s\n", "stage", "mean(ms)", "min(ms)",
                  "max(ms)");
    out << line;
    auto print = [&](const BenchRow& row) {
        std::snprintf(line, sizeof(line), "%-36s %10.2f %10.2f %10.2f\n", row.stage.c_str(),
                      row.mean_ms, row.min_ms, row.max_ms);
        out << line;
    };
    for (const BenchRow& row : report.rows) print(row);
    print(report.total);
    return out.str();
}

} // namespace dco
