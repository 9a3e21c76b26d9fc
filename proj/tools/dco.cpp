#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "dco/codec.hpp"
#include "dco/contour.hpp"
#include "dco/densify.hpp"
#include "dco/flow.hpp"
#include "dco/occlude.hpp"
#include "dco/pipeline.hpp"
#include "dco/pyramid.hpp"
#include "dco/stereo.hpp"
#include "dco/synth.hpp"

namespace fs = std::filesystem;

namespace {

dco::PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? dco::PipelineConfig{} : dco::load_config(path);
}

int run_cli(CLI::App& app, int argc, char** argv) {
    std::string config_path, manifest_path, out_dir, debug_dir, mesh_path;

    auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full pipeline over a sequence");
    pipeline_cmd->add_option("--config", config_path, "key=value config file");
    pipeline_cmd->add_option("--manifest", manifest_path, "sequence manifest")->required();
    pipeline_cmd->add_option("--out", out_dir, "output directory")->required();
    pipeline_cmd->add_option("--debug-dir", debug_dir, "dump per-stage debug artifacts here");
    pipeline_cmd->add_option("--mesh", mesh_path, "OBJ virtual object");

    std::string left_path, right_path;
    auto* stereo_cmd = app.add_subcommand("stereo", "sparse depth from one rectified pair");
    stereo_cmd->add_option("--config", config_path, "key=value config file");
    stereo_cmd->add_option("--left", left_path, "left image")->required();
    stereo_cmd->add_option("--right", right_path, "right image")->required();
    stereo_cmd->add_option("--out", out_dir, "output directory")->required();
    stereo_cmd->add_option("--debug-dir", debug_dir, "dump false-color renderings here");

    std::string from_path, to_path, out_file;
    auto* flow_cmd = app.add_subcommand("flow", "optical flow between two frames");
    flow_cmd->add_option("--config", config_path, "key=value config file");
    flow_cmd->add_option("--from", from_path, "source frame")->required();
    flow_cmd->add_option("--to", to_path, "target frame")->required();
    flow_cmd->add_option("--out", out_file, "output .flo")->required();

    std::string past_path, middle_path, future_path;
    auto* contour_cmd = app.add_subcommand("contour", "depth contours from a 3-frame window");
    contour_cmd->add_option("--config", config_path, "key=value config file");
    contour_cmd->add_option("--past", past_path, "past frame")->required();
    contour_cmd->add_option("--middle", middle_path, "middle frame")->required();
    contour_cmd->add_option("--future", future_path, "future frame")->required();
    contour_cmd->add_option("--out", out_dir, "output directory")->required();

    std::string sparse_path, edges_path, mfuse_path, mi_path, pre_path;
    auto* densify_cmd = app.add_subcommand("densify", "dense depth from serialized intermediates");
    densify_cmd->add_option("--config", config_path, "key=value config file");
    densify_cmd->add_option("--sparse", sparse_path, "sparse depth PFM")->required();
    densify_cmd->add_option("--edges", edges_path, "depth-contour mask PGM")->required();
    densify_cmd->add_option("--mfuse", mfuse_path, "normalized fused amplitude PFM")->required();
    densify_cmd->add_option("--mi", mi_path, "intensity gradient PFM")->required();
    densify_cmd->add_option("--pre", pre_path, "previous dense depth PFM");
    densify_cmd->add_option("--out", out_file, "output dense PFM")->required();

    std::string real_path, dense_path;
    std::vector<double> pose_values;
    auto* composite_cmd = app.add_subcommand("composite", "depth-test a virtual object over a frame");
    composite_cmd->add_option("--config", config_path, "key=value config file");
    composite_cmd->add_option("--real", real_path, "real frame")->required();
    composite_cmd->add_option("--dense", dense_path, "dense depth PFM")->required();
    composite_cmd->add_option("--mesh", mesh_path, "OBJ virtual object")->required();
    composite_cmd->add_option("--pose", pose_values, "row-major 4x4 rigid transform")
        ->expected(16);
    composite_cmd->add_option("--out", out_dir, "output directory")->required();

    dco::SceneSpec scene;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic ground-truth sequence");
    synth_cmd->add_option("--width", scene.width);
    synth_cmd->add_option("--height", scene.height);
    synth_cmd->add_option("--frames", scene.frame_count);
    synth_cmd->add_option("--z-fg", scene.z_fg);
    synth_cmd->add_option("--z-bg", scene.z_bg);
    synth_cmd->add_option("--focal", scene.focal_px);
    synth_cmd->add_option("--baseline", scene.baseline_m);
    synth_cmd->add_option("--square-size", scene.square_size);
    synth_cmd->add_option("--square-x", scene.square_x0);
    synth_cmd->add_option("--square-y", scene.square_y0);
    synth_cmd->add_option("--shift-x", scene.shift_x);
    synth_cmd->add_option("--shift-y", scene.shift_y);
    synth_cmd->add_option("--seed", scene.seed);
    synth_cmd->add_option("--out", out_dir, "output directory")->required();

    int repetitions = 3;
    auto* bench_cmd = app.add_subcommand("bench", "staged timing statistics over repeated runs");
    bench_cmd->add_option("--config", config_path, "key=value config file");
    bench_cmd->add_option("--manifest", manifest_path, "sequence manifest")->required();
    bench_cmd->add_option("--out", out_dir, "output directory")->required();
    bench_cmd->add_option("--mesh", mesh_path, "OBJ virtual object");
    bench_cmd->add_option("--repetitions", repetitions, "measured repetitions after warm-up");

    app.require_subcommand(1);
    app.parse(argc, argv);

    if (pipeline_cmd->parsed()) {
        dco::RunOptions opts{config_path, manifest_path, out_dir, debug_dir, mesh_path};
        dco::RunSummary summary = dco::run_pipeline(opts);
        std::cout << "composited " << summary.composited << " of " << summary.frames_total
                  << " frames; timings: " << summary.timings_csv_path << "\n";
    } else if (stereo_cmd->parsed()) {
        dco::PipelineConfig cfg = config_or_default(config_path);
        dco::GrayImage left = dco::read_gray(left_path);
        dco::GrayImage right = dco::read_gray(right_path);
        dco::GrayImage left_q = dco::downsample_half(left);
        dco::GrayImage right_q = dco::downsample_half(right);
        dco::CrossWindowField cross = dco::build_cross_windows(left_q, cfg);
        dco::CostVolume vol = dco::compute_cost_volume(left_q, right_q, cross, cfg);
        dco::DisparityMap disp = dco::select_disparity_wta(dco::aggregate_costs(vol, cross));
        disp = dco::refine_disparity_histogram(disp, cross, cfg.hist_iterations);
        dco::SparseDepthMap sparse =
            dco::disparity_to_sparse_depth(disp, cfg, left.width, left.height);
        fs::create_directories(out_dir);
        dco::FloatMap disp_map(disp.width, disp.height);
        disp_map.data.assign(disp.disparity.begin(), disp.disparity.end());
        dco::write_pfm(disp_map, (fs::path(out_dir) / "disparity.pfm").string());
        dco::write_pfm(sparse, (fs::path(out_dir) / "sparse.pfm").string());
        if (!debug_dir.empty()) {
            fs::create_directories(debug_dir);
            dco::write_ppm(dco::render_false_color(disp_map),
                           (fs::path(debug_dir) / "disparity.ppm").string());
            dco::write_ppm(dco::render_false_color(sparse),
                           (fs::path(debug_dir) / "sparse.ppm").string());
        }
    } else if (flow_cmd->parsed()) {
        dco::PipelineConfig cfg = config_or_default(config_path);
        dco::FlowField field =
            dco::compute_flow(dco::read_gray(from_path), dco::read_gray(to_path), cfg);
        dco::write_flo(field, out_file);
    } else if (contour_cmd->parsed()) {
        dco::PipelineConfig cfg = config_or_default(config_path);
        dco::GrayImage middle = dco::read_gray(middle_path);
        dco::GrayImage past_q = dco::downsample_half(dco::read_gray(past_path));
        dco::GrayImage middle_q = dco::downsample_half(middle);
        dco::GrayImage future_q = dco::downsample_half(dco::read_gray(future_path));
        dco::FlowField flow_past = dco::compute_flow(middle_q, past_q, cfg);
        dco::FlowField flow_future = dco::compute_flow(middle_q, future_q, cfg);
        dco::AmplitudeMap m_past = dco::gradient_amplitude(dco::flow_to_polar(flow_past));
        dco::AmplitudeMap m_future = dco::gradient_amplitude(dco::flow_to_polar(flow_future));
        dco::AmplitudeMap fused =
            dco::fuse_amplitudes(flow_past, flow_future, m_past, m_future, cfg);
        fused = dco::normalize_amplitude(dco::box_filter(fused, cfg.box_radius));
        dco::ContourResult result = dco::extract_depth_contours(middle, fused, cfg);
        fs::create_directories(out_dir);
        dco::write_mask_pgm(result.edges, (fs::path(out_dir) / "edges.pgm").string());
        dco::write_pfm(result.m_i, (fs::path(out_dir) / "m_i.pfm").string());
        dco::write_pfm(fused, (fs::path(out_dir) / "m_fuse.pfm").string());
    } else if (densify_cmd->parsed()) {
        dco::PipelineConfig cfg = config_or_default(config_path);
        dco::FloatMap sparse = dco::read_pfm(sparse_path);
        dco::BinaryMask edges = dco::read_mask_pgm(edges_path);
        dco::FloatMap mfuse = dco::read_pfm(mfuse_path);
        dco::FloatMap mi = dco::read_pfm(mi_path);
        dco::FloatMap pre;
        if (!pre_path.empty()) pre = dco::read_pfm(pre_path);
        dco::ConstraintSystem sys = dco::assemble_system(
            sparse, edges, mfuse, mi, pre_path.empty() ? nullptr : &pre, cfg);
        dco::SolveStats stats;
        dco::DenseDepthMap dense = dco::solve_dense_depth(sys, cfg, &stats);
        dco::write_pfm(dense, out_file);
        std::cout << "iterations=" << stats.iterations
                  << " relative_residual=" << stats.relative_residual
                  << " objective=" << stats.objective_final << "\n";
    } else if (composite_cmd->parsed()) {
        dco::PipelineConfig cfg = config_or_default(config_path);
        dco::ColorImage real = dco::read_color(real_path);
        dco::FloatMap dense = dco::read_pfm(dense_path);
        dco::TriangleMesh mesh = dco::load_obj(mesh_path);
        if (!pose_values.empty()) {
            std::array<double, 16> pose{};
            std::copy(pose_values.begin(), pose_values.end(), pose.begin());
            mesh = dco::transform_mesh(mesh, pose);
        }
        dco::VirtualLayer layer = dco::render_virtual(mesh, cfg.focal_px, real.width / 2.0,
                                                      real.height / 2.0, real.width, real.height);
        dco::CompositeResult comp = dco::composite(real, dense, layer);
        fs::create_directories(out_dir);
        dco::write_ppm(comp.color, (fs::path(out_dir) / "composite.ppm").string());
        dco::write_mask_pgm(comp.mask, (fs::path(out_dir) / "mask.pgm").string());
    } else if (synth_cmd->parsed()) {
        std::cout << dco::synth_scene(scene, out_dir) << "\n";
    } else if (bench_cmd->parsed()) {
        dco::RunOptions opts{config_path, manifest_path, out_dir, "", mesh_path};
        dco::BenchReport report = dco::bench(opts, repetitions);
        dco::write_bench_csv(report, (fs::path(out_dir) / "bench.csv").string());
        std::cout << dco::format_bench_report(report);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"depth-contour occlusion pipeline for rectified binocular sequences"};
    try {
        return run_cli(app, argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const dco::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const dco::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const dco::CodecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const dco::UnsolvableFrameError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
