#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dco/codec.hpp"
#include "dco/occlude.hpp"
#include "dco/pipeline.hpp"
#include "dco/synth.hpp"
#include "test_util.hpp"

using namespace dco;
namespace fs = std::filesystem;

namespace {

// Compact scene so whole-pipeline tests stay fast.
SceneSpec small_scene(int frames) {
    SceneSpec spec;
    spec.width = 160;
    spec.height = 96;
    spec.frame_count = frames;
    spec.z_fg = 1.0;
    spec.z_bg = 2.0;
    spec.focal_px = 200.0; // disparities 24 / 12 full-res
    spec.baseline_m = 0.12;
    spec.square_size = 48;
    spec.square_x0 = 48.0;
    spec.square_y0 = 24.0;
    spec.shift_x = 2.0;
    spec.shift_y = 0.0;
    spec.seed = 99;
    return spec;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string write_scene_config(const std::string& dir, const SceneSpec& spec) {
    PipelineConfig cfg;
    cfg.focal_px = spec.focal_px;
    cfg.baseline_m = spec.baseline_m;
    std::string path = dir + "/scene.cfg";
    save_config(cfg, path);
    return path;
}

} // namespace

TEST_CASE("synth scene carries analytically exact disparities and ground truth") {
    SceneSpec spec; // defaults: 400 * 0.12 / {1, 2} -> disparities 48 / 24
    SynthFrame frame = render_synth_frame(spec, 0);

    // background pixels match the left view shifted by 24 px
    int checked = 0;
    for (int y = 2; y < spec.height - 2; ++y) {
        for (int x = 0; x + 24 < spec.width; ++x) {
            bool near_square_left = x + 24 >= spec.square_x0 - 1 &&
                                    x + 24 <= spec.square_x0 + spec.square_size &&
                                    y >= spec.square_y0 - 1 &&
                                    y <= spec.square_y0 + spec.square_size;
            bool near_square_right = x >= spec.square_x0 - 49 - 1 &&
                                     x <= spec.square_x0 - 48 + spec.square_size + 1 &&
                                     y >= spec.square_y0 - 1 &&
                                     y <= spec.square_y0 + spec.square_size;
            if (near_square_left || near_square_right) continue;
            CHECK(frame.right.at(x, y) == frame.left.at(x + 24, y));
            ++checked;
        }
    }
    CHECK(checked > 1000);

    // the square appears 48 px to the left in the right view
    int sx = 96, sy = 56; // defaults
    for (int y = sy + 2; y < sy + 10; ++y)
        for (int x = sx + 2; x < sx + 10; ++x)
            CHECK(frame.right.at(x - 48, y) == frame.left.at(x, y));

    // depth ground truth is two-valued
    CHECK(frame.gt_depth.at(sx + 5, sy + 5) == 1.0f);
    CHECK(frame.gt_depth.at(5, 5) == 2.0f);

    // flow ground truth on the square equals the per-frame shift
    CHECK(frame.gt_flow.u_at(sx + 5, sy + 5) == 4.0f);
    CHECK(frame.gt_flow.v_at(sx + 5, sy + 5) == 0.0f);
    CHECK(frame.gt_flow.u_at(5, 5) == 0.0f);

    // boundary mask is exactly the perimeter ring
    size_t expected = 4 * (static_cast<size_t>(spec.square_size) - 1);
    CHECK(frame.gt_boundary.count_set() == expected);
    CHECK(frame.gt_boundary.at(sx, sy) == 1);
    CHECK(frame.gt_boundary.at(sx + 1, sy + 1) == 0);
}

TEST_CASE("invalid scenes are rejected") {
    SceneSpec bad;
    bad.z_fg = 3.0;
    bad.z_bg = 2.0;
    CHECK_THROWS_AS(render_synth_frame(bad, 0), InputError);

    SceneSpec escape = small_scene(3);
    escape.square_x0 = 150.0;
    CHECK_THROWS_AS(render_synth_frame(escape, 0), InputError);
}

TEST_CASE("manifest parsing: indices, poses, errors") {
    std::string dir = testutil::make_temp_dir("manifest");
    {
        std::ofstream out(dir + "/m.tsv");
        out << "0\tl0.pgm\tr0.pgm\n";
        out << "1\tl1.pgm\tr1.pgm\t1 0 0 0 0 1 0 0 0 0 1 0.5 0 0 0 1\n";
    }
    auto records = load_manifest(dir + "/m.tsv");
    REQUIRE(records.size() == 2);
    CHECK(records[0].index == 0);
    CHECK_FALSE(records[0].pose.has_value());
    CHECK(records[1].pose.has_value());
    CHECK((*records[1].pose)[11] == 0.5);
    CHECK(records[0].left_path == (fs::path(dir) / "l0.pgm").string());

    {
        std::ofstream out(dir + "/bad.tsv");
        out << "1\ta\tb\n0\tc\td\n";
    }
    CHECK_THROWS_AS(load_manifest(dir + "/bad.tsv"), InputError);

    {
        std::ofstream out(dir + "/pose.tsv");
        out << "0\ta\tb\t1 2 3\n";
    }
    CHECK_THROWS_AS(load_manifest(dir + "/pose.tsv"), InputError);
}

TEST_CASE("window arithmetic: n frames yield n-2 composites") {
    std::string scene_dir = testutil::make_temp_dir("pipe3");
    std::string manifest = synth_scene(small_scene(3), scene_dir);
    RunOptions opts;
    opts.manifest_path = manifest;
    opts.output_dir = scene_dir + "/out";
    RunSummary summary = run_pipeline(opts);
    CHECK(summary.frames_total == 3);
    CHECK(summary.composited == 1);
    CHECK(fs::exists(scene_dir + "/out/composite_0001.ppm")); // the middle frame
    CHECK(fs::exists(scene_dir + "/out/mask_0001.pgm"));
    CHECK(fs::exists(scene_dir + "/out/dense_0001.pfm"));
    CHECK(fs::exists(scene_dir + "/out/composite_0000.ppm")); // passthrough frames
    CHECK(fs::exists(scene_dir + "/out/composite_0002.ppm"));
    CHECK(fs::exists(summary.timings_csv_path));

    std::string scene10 = testutil::make_temp_dir("pipe10");
    std::string manifest10 = synth_scene(small_scene(10), scene10);
    RunOptions opts10;
    opts10.manifest_path = manifest10;
    opts10.output_dir = scene10 + "/out";
    RunSummary summary10 = run_pipeline(opts10);
    CHECK(summary10.composited == 8);

    RunOptions opts_short = opts;
    std::string two = testutil::make_temp_dir("pipe2");
    opts_short.manifest_path = synth_scene(small_scene(2), two);
    opts_short.output_dir = two + "/out";
    CHECK_THROWS_AS(run_pipeline(opts_short), InputError);
}

TEST_CASE("without a mesh every composite is the unmodified real frame") {
    std::string scene_dir = testutil::make_temp_dir("nomesh");
    SceneSpec spec = small_scene(3);
    std::string manifest = synth_scene(spec, scene_dir);
    RunOptions opts;
    opts.manifest_path = manifest;
    opts.output_dir = scene_dir + "/out";
    run_pipeline(opts);

    for (int i = 0; i < 3; ++i) {
        char left[32], comp[32];
        std::snprintf(left, sizeof(left), "left_%03d.pgm", i);
        std::snprintf(comp, sizeof(comp), "composite_%04d.ppm", i);
        ColorImage real = read_color((fs::path(scene_dir) / left).string());
        std::string reference = scene_dir + "/ref.ppm";
        write_ppm(real, reference);
        CHECK(read_bytes(reference) == read_bytes((fs::path(scene_dir) / "out" / comp).string()));
        // and the mask stays empty on composited frames
        if (i == 1) {
            BinaryMask mask = read_mask_pgm(scene_dir + "/out/mask_0001.pgm");
            CHECK(mask.count_set() == 0);
        }
    }
}

TEST_CASE("two runs are bit-identical") {
    std::string scene_dir = testutil::make_temp_dir("det");
    SceneSpec spec = small_scene(4);
    std::string manifest = synth_scene(spec, scene_dir);

    TriangleMesh cube = make_cube_mesh(0.0f, 0.0f, 1.5f, 0.3f);
    save_obj(cube, scene_dir + "/cube.obj");

    RunOptions opts;
    opts.config_path = write_scene_config(scene_dir, spec);
    opts.manifest_path = manifest;
    opts.mesh_path = scene_dir + "/cube.obj";

    opts.output_dir = scene_dir + "/run1";
    run_pipeline(opts);
    opts.output_dir = scene_dir + "/run2";
    run_pipeline(opts);

    for (const char* name : {"composite_0001.ppm", "composite_0002.ppm", "mask_0001.pgm",
                             "mask_0002.pgm", "dense_0001.pfm", "dense_0002.pfm"}) {
        CAPTURE(name);
        std::string a = read_bytes(scene_dir + "/run1/" + name);
        std::string b = read_bytes(scene_dir + "/run2/" + name);
        REQUIRE(!a.empty());
        CHECK(a == b);
    }
}

TEST_CASE("a cube straddling the scene depths is occluded along the analytic boundary") {
    std::string dir = testutil::make_temp_dir("cube");
    SceneSpec spec = small_scene(3);
    spec.square_x0 = 34.0; // frame 1 square: x in [36, 84), y in [24, 72)
    std::string manifest = synth_scene(spec, dir);

    // cube between z_fg=1 and z_bg=2; front face at z=1.35
    const double cz = 1.5, side = 0.3, zf = cz - side / 2;
    TriangleMesh cube = make_cube_mesh(0.0f, 0.0f, static_cast<float>(cz),
                                       static_cast<float>(side));
    save_obj(cube, dir + "/cube.obj");

    RunOptions opts;
    opts.config_path = write_scene_config(dir, spec);
    opts.manifest_path = manifest;
    opts.mesh_path = dir + "/cube.obj";
    opts.output_dir = dir + "/out";
    run_pipeline(opts);
    BinaryMask mask = read_mask_pgm(dir + "/out/mask_0001.pgm");

    // analytic mask: the front-face footprint where the true scene is the
    // farther background; over the nearer square the cube is discarded
    const double cx = spec.width / 2.0, cy = spec.height / 2.0;
    const double half = spec.focal_px * (side / 2) / zf;
    const int sq_right = 36 + spec.square_size;
    BinaryMask want(spec.width, spec.height, 0);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            bool in_footprint = std::abs(x + 0.5 - cx) < half && std::abs(y + 0.5 - cy) < half;
            bool over_bg = x >= sq_right; // square rows fully cover the footprint rows
            want.at(x, y) = in_footprint && over_bg ? 1 : 0;
        }
    REQUIRE(want.count_set() > 200);

    auto boundary_of = [](const BinaryMask& m) {
        BinaryMask edge(m.width, m.height, 0);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                if (!m.at(x, y)) continue;
                bool border = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1;
                if (!border && m.at(x - 1, y) && m.at(x + 1, y) && m.at(x, y - 1) &&
                    m.at(x, y + 1))
                    continue;
                edge.at(x, y) = 1;
            }
        return edge;
    };
    BinaryMask want_edge = boundary_of(want);
    BinaryMask got_edge = boundary_of(mask);

    size_t total = 0, matched = 0;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            if (!want_edge.at(x, y)) continue;
            ++total;
            bool hit = false;
            for (int dy = -2; dy <= 2 && !hit; ++dy)
                for (int dx = -2; dx <= 2 && !hit; ++dx) {
                    int qx = x + dx, qy = y + dy;
                    if (qx >= 0 && qy >= 0 && qx < spec.width && qy < spec.height &&
                        got_edge.at(qx, qy))
                        hit = true;
                }
            matched += hit;
        }
    REQUIRE(total > 100);
    CHECK(static_cast<double>(matched) / static_cast<double>(total) >= 0.90);
}

TEST_CASE("a manifest pose moves the virtual object") {
    std::string dir = testutil::make_temp_dir("pose");
    SceneSpec spec = small_scene(3);
    std::string manifest = synth_scene(spec, dir);

    TriangleMesh cube = make_cube_mesh(0.0f, 0.0f, 1.5f, 0.3f);
    save_obj(cube, dir + "/cube.obj");

    // rewrite the manifest with a translation on every frame
    {
        auto records = load_manifest(manifest);
        std::ofstream out(dir + "/posed.tsv");
        for (const auto& rec : records)
            out << rec.index << '\t' << fs::path(rec.left_path).filename().string() << '\t'
                << fs::path(rec.right_path).filename().string()
                << "\t1 0 0 0.15 0 1 0 0 0 0 1 0 0 0 0 1\n";
    }

    RunOptions opts;
    opts.config_path = write_scene_config(dir, spec);
    opts.mesh_path = dir + "/cube.obj";
    opts.manifest_path = manifest;
    opts.output_dir = dir + "/identity";
    run_pipeline(opts);
    opts.manifest_path = dir + "/posed.tsv";
    opts.output_dir = dir + "/posed";
    run_pipeline(opts);

    BinaryMask identity = read_mask_pgm(dir + "/identity/mask_0001.pgm");
    BinaryMask posed = read_mask_pgm(dir + "/posed/mask_0001.pgm");
    REQUIRE(identity.count_set() > 0);
    REQUIRE(posed.count_set() > 0);

    // +0.15 m in x at z=1.5 and f=200 -> the footprint shifts right ~20 px
    int id_min = identity.width, posed_min = posed.width;
    for (int y = 0; y < identity.height; ++y)
        for (int x = 0; x < identity.width; ++x) {
            if (identity.at(x, y)) id_min = std::min(id_min, x);
            if (posed.at(x, y)) posed_min = std::min(posed_min, x);
        }
    CHECK(posed_min > id_min + 10);
}

TEST_CASE("untextured frames cannot densify and the whole run fails cleanly") {
    std::string dir = testutil::make_temp_dir("flat");
    GrayImage flat(64, 32, 0.5f);
    for (int i = 0; i < 3; ++i) {
        char l[32], r[32];
        std::snprintf(l, sizeof(l), "left_%03d.pgm", i);
        std::snprintf(r, sizeof(r), "right_%03d.pgm", i);
        write_pgm(flat, (fs::path(dir) / l).string());
        write_pgm(flat, (fs::path(dir) / r).string());
    }
    std::ofstream manifest(dir + "/m.tsv");
    manifest << "0\tleft_000.pgm\tright_000.pgm\n1\tleft_001.pgm\tright_001.pgm\n"
             << "2\tleft_002.pgm\tright_002.pgm\n";
    manifest.close();

    RunOptions opts;
    opts.manifest_path = dir + "/m.tsv";
    opts.output_dir = dir + "/out";
    CHECK_THROWS_AS(run_pipeline(opts), UnsolvableFrameError);
}

TEST_CASE("odd frame dimensions run end to end") {
    std::string dir = testutil::make_temp_dir("odd");
    testutil::Rng rng(77);
    for (int i = 0; i < 3; ++i) {
        GrayImage frame = testutil::random_gray(33, 22, rng);
        char l[32], r[32];
        std::snprintf(l, sizeof(l), "left_%03d.pgm", i);
        std::snprintf(r, sizeof(r), "right_%03d.pgm", i);
        write_pgm(frame, (fs::path(dir) / l).string());
        write_pgm(frame, (fs::path(dir) / r).string()); // zero disparity everywhere
    }
    std::ofstream manifest(dir + "/m.tsv");
    for (int i = 0; i < 3; ++i)
        manifest << i << "\tleft_00" << i << ".pgm\tright_00" << i << ".pgm\n";
    manifest.close();

    RunOptions opts;
    opts.manifest_path = dir + "/m.tsv";
    opts.output_dir = dir + "/out";
    // identical left/right means disparity 0 everywhere: no depth anchors,
    // so the lone composited frame fails to densify and the run reports it
    CHECK_THROWS_AS(run_pipeline(opts), UnsolvableFrameError);

    // with a disparate pair the same dimensions must run through
    testutil::Rng rng2(78);
    GrayImage left = testutil::random_gray(33, 22, rng2);
    GrayImage right(33, 22);
    for (int y = 0; y < 22; ++y)
        for (int x = 0; x < 33; ++x) right.at(x, y) = left.at((x + 4) % 33, y);
    for (int i = 0; i < 3; ++i) {
        char l[32], r[32];
        std::snprintf(l, sizeof(l), "l2_%03d.pgm", i);
        std::snprintf(r, sizeof(r), "r2_%03d.pgm", i);
        write_pgm(left, (fs::path(dir) / l).string());
        write_pgm(right, (fs::path(dir) / r).string());
    }
    std::ofstream manifest2(dir + "/m2.tsv");
    for (int i = 0; i < 3; ++i) manifest2 << i << "\tl2_00" << i << ".pgm\tr2_00" << i << ".pgm\n";
    manifest2.close();
    opts.manifest_path = dir + "/m2.tsv";
    opts.output_dir = dir + "/out2";
    RunSummary summary = run_pipeline(opts);
    CHECK(summary.composited == 1);
    FloatMap dense = read_pfm(dir + "/out2/dense_0001.pfm");
    CHECK(dense.width == 33);
    CHECK(dense.height == 22);
}

TEST_CASE("missing frame files abort with the frame index") {
    std::string dir = testutil::make_temp_dir("missing");
    std::ofstream manifest(dir + "/m.tsv");
    manifest << "7\tnope.pgm\tnope.pgm\n8\tnope.pgm\tnope.pgm\n9\tnope.pgm\tnope.pgm\n";
    manifest.close();
    RunOptions opts;
    opts.manifest_path = dir + "/m.tsv";
    opts.output_dir = dir + "/out";
    CHECK_THROWS_WITH_AS(run_pipeline(opts), doctest::Contains("frame 7"), InputError);
}

TEST_CASE("stage timing schema and accounting identity") {
    const auto& names = StageTimings::stage_names();
    REQUIRE(names.size() == 14);
    CHECK(names.front() == "adaptive filter area construction");
    CHECK(names[4] == "bidirectional optical flow");
    CHECK(names[9] == "Gaussian filtering");
    CHECK(names.back() == "other");

    StageTimings t;
    t.adaptive_filter_area = 1.5;
    t.densification = 2.5;
    t.total = 5.0;
    t.other = t.total - (1.5 + 2.5);
    double sum = 0.0;
    for (double v : t.stage_values()) sum += v;
    CHECK(sum == doctest::Approx(t.total).epsilon(1e-12));
    CHECK(t.stage_values().size() == names.size());
}

TEST_CASE("bench aggregates stage statistics over repetitions") {
    std::string scene_dir = testutil::make_temp_dir("bench");
    std::string manifest = synth_scene(small_scene(3), scene_dir);
    RunOptions opts;
    opts.manifest_path = manifest;
    opts.output_dir = scene_dir + "/out";

    BenchReport report = bench(opts, 1);
    CHECK(report.repetitions == 1);
    REQUIRE(report.rows.size() == StageTimings::stage_names().size());
    for (size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].stage == StageTimings::stage_names()[i]);
        CHECK(report.rows[i].mean_ms == report.rows[i].min_ms); // single sample
        CHECK(report.rows[i].mean_ms == report.rows[i].max_ms);
        CHECK(report.rows[i].mean_ms >= 0.0);
    }
    CHECK(report.total.mean_ms > 0.0);

    // frame total equals stage sum + other (identity in every sample)
    double sum = 0.0;
    for (const auto& row : report.rows) sum += row.mean_ms;
    CHECK(sum == doctest::Approx(report.total.mean_ms).epsilon(1e-9));

    write_bench_csv(report, scene_dir + "/bench.csv");
    CHECK(fs::exists(scene_dir + "/bench.csv"));
    std::string text = format_bench_report(report);
    CHECK(text.find("densification") != std::string::npos);
}
