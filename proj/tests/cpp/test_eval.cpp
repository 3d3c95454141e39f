#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "rstv/eval.hpp"
#include "rstv/synth.hpp"

using namespace rstv;
namespace fs = std::filesystem;

namespace {

Pose3D pose_rows(std::initializer_list<std::array<double, 3>> rows) {
    Mat3Xd m(static_cast<int>(rows.size()), 3);
    int i = 0;
    for (const auto& r : rows) {
        m(i, 0) = r[0];
        m(i, 1) = r[1];
        m(i, 2) = r[2];
        ++i;
    }
    return Pose3D{m};
}

// Two-joint chain for PCP corner cases.
SkeletonSpec tiny_skeleton() {
    SkeletonSpec s;
    s.joint_count = 3;
    s.joint_names = {"root", "a", "b"};
    s.parent = {0, 0, 1};
    s.limbs = {{0, 1}, {1, 2}};
    return s;
}

PipelineConfig small_pipeline() {
    PipelineConfig cfg;
    cfg.window = 8;
    cfg.patch_size = 32;
    cfg.comp.patch_size = 32;
    cfg.hog.spatial_levels = {2, 4};
    cfg.fit.embed_dim = 96;
    cfg.fit.out_embed_dim = 48;
    cfg.fit.dn.hidden = 8;
    cfg.fit.dn.epochs = 3;
    cfg.fit.pre_image.steps = 15;
    cfg.jitter = 4.0;
    cfg.validate();
    return cfg;
}

SynthConfig small_synth(int frames) {
    SynthConfig sc;
    sc.image_h = sc.image_w = 96;
    sc.n_frames = frames;
    sc.box_size = 60;
    sc.seed = 3;
    return sc;
}

}  // namespace

TEST_CASE("mpjpe averages joint distances") {
    Pose3D gt = pose_rows({{0, 0, 0}, {0, 0, 0}});
    Pose3D pred = pose_rows({{3, 4, 0}, {0, 0, 5}});
    CHECK(mpjpe(pred, gt) == 5.0);
    Pose3D pred2 = pose_rows({{3, 4, 0}, {0, 0, 0}});
    CHECK(mpjpe(pred2, gt) == 2.5);
    CHECK(mpjpe(gt, gt) == 0.0);
    Pose3D wrong = pose_rows({{0, 0, 0}});
    CHECK_THROWS(mpjpe(wrong, gt));
}

TEST_CASE("pcp includes the boundary and skips degenerate limbs") {
    SkeletonSpec skel = tiny_skeleton();
    Pose3D gt = pose_rows({{0, 0, 0}, {100, 0, 0}, {100, 100, 0}});
    // First limb length 100: alpha 0.5 allows endpoint error exactly 50.
    Pose3D at_boundary = pose_rows({{0, 50, 0}, {100, 50, 0}, {100, 150, 0}});
    PcpResult r = pcp(at_boundary, gt, skel, 0.5);
    REQUIRE(r.limb_status.size() == 2);
    CHECK(r.limb_status[0] == 1);
    CHECK(r.limb_status[1] == 1);
    CHECK(r.overall == 1.0);

    Pose3D just_over = pose_rows({{0, 50.0001, 0}, {100, 50.0001, 0}, {100, 150.0001, 0}});
    PcpResult r2 = pcp(just_over, gt, skel, 0.5);
    CHECK(r2.limb_status[0] == 0);
    CHECK(r2.overall == 0.0);

    // One good endpoint is not enough.
    Pose3D half = pose_rows({{0, 0, 0}, {100, 80, 0}, {100, 100, 0}});
    PcpResult r3 = pcp(half, gt, skel, 0.5);
    CHECK(r3.limb_status[0] == 0);
    CHECK(r3.limb_status[1] == 0);  // endpoint a off by 80 > 50

    Pose3D degenerate_gt = pose_rows({{0, 0, 0}, {0, 0, 0}, {0, 100, 0}});
    PcpResult r4 = pcp(gt, degenerate_gt, skel, 0.5);
    CHECK(r4.limb_status[0] == -1);
    CHECK(r4.skipped == 1);
}

TEST_CASE("evaluate scores every centered block and reports exclusions") {
    const int n = 48;
    auto g = gen_sequence(small_synth(n));
    PipelineConfig cfg = small_pipeline();
    cfg.fit.kind = "krr";
    auto X = sequence_descriptors(g.frames, *g.manifest.boxes, cfg.hog, cfg.window,
                                  cfg.patch_size);
    auto blocks = extract_blocks(n, cfg.window);
    Eigen::MatrixXd Y(blocks.size(), 17 * 3);
    for (size_t i = 0; i < blocks.size(); ++i) {
        Y.row(i) =
            root_relativize((*g.manifest.poses)[blocks[i].center].coords, 0).flatten().transpose();
    }
    PoseModel model = fit_pose_model(X, Y, cfg.fit);

    EvalReport rep = evaluate(model, g.frames, *g.manifest.boxes, *g.manifest.poses, cfg, true,
                              &*g.manifest.skeleton);
    CHECK(rep.window == 8);
    CHECK(rep.centers.size() == blocks.size());
    CHECK(rep.per_frame.size() == blocks.size());
    CHECK(rep.excluded == n - static_cast<int>(blocks.size()));
    CHECK(rep.mean >= 0.0);
    CHECK(std::isfinite(rep.mean));
    CHECK(std::isfinite(rep.stddev));
    // Trained on itself: errors should sit well under the body scale.
    CHECK(rep.mean < 200.0);
    REQUIRE(rep.pcp.has_value());
    CHECK(rep.pcp->per_limb.size() == g.manifest.skeleton->limbs.size());
    CHECK(rep.pcp->overall >= 0.0);
    CHECK(rep.pcp->overall <= 1.0);

    // Mean and stddev recompute from the per frame numbers.
    double m = 0;
    for (double v : rep.per_frame) m += v;
    m /= rep.per_frame.size();
    CHECK(rep.mean == doctest::Approx(m).epsilon(1e-12));
    double var = 0;
    for (double v : rep.per_frame) var += (v - m) * (v - m);
    CHECK(rep.stddev == doctest::Approx(std::sqrt(var / rep.per_frame.size())).epsilon(1e-9));
}

TEST_CASE("threaded descriptor extraction matches serial") {
    auto g = gen_sequence(small_synth(48));
    PipelineConfig cfg = small_pipeline();
    auto serial = sequence_descriptors(g.frames, *g.manifest.boxes, cfg.hog, cfg.window,
                                       cfg.patch_size, 1);
    auto threaded = sequence_descriptors(g.frames, *g.manifest.boxes, cfg.hog, cfg.window,
                                         cfg.patch_size, 4);
    CHECK((serial - threaded).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("motion ablation produces four rows and prefers compensation") {
    auto g = gen_sequence(small_synth(48));
    PipelineConfig cfg = small_pipeline();
    cfg.fit.dn.epochs = 6;
    CentroidShiftRegressor coarse(32), fine(32);
    auto rows = ablate_motion(g.manifest, g.frames, coarse, fine, cfg);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variant == "STV");
    CHECK(rows[0].regressor == "krr");
    CHECK(rows[1].variant == "STV");
    CHECK(rows[1].regressor == "dn");
    CHECK(rows[2].variant == "RSTV");
    CHECK(rows[3].variant == "RSTV");
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.mpjpe));
        CHECK(r.mpjpe > 0.0);
    }
}

TEST_CASE("window sweep returns one sorted row per window") {
    auto g = gen_sequence(small_synth(48));
    PipelineConfig cfg = small_pipeline();
    auto rows = sweep_window(g.manifest, g.frames, {8, 4}, cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].window == 4);
    CHECK(rows[1].window == 8);
    for (const auto& r : rows) CHECK(std::isfinite(r.mpjpe));
    CHECK_THROWS(sweep_window(g.manifest, g.frames, {7}, cfg));
}

TEST_CASE("report writers emit parseable files") {
    EvalReport rep;
    rep.window = 8;
    rep.centers = {4, 5};
    rep.per_frame = {10.0, 12.5};
    rep.mean = 11.25;
    rep.stddev = 1.25;
    rep.excluded = 7;
    PcpAggregate agg;
    agg.per_limb = {1.0, 0.5};
    agg.overall = 0.75;
    rep.pcp = agg;

    auto dir = fs::temp_directory_path();
    auto csv_path = (dir / "rstv_eval.csv").string();
    auto json_path = (dir / "rstv_eval.json").string();
    write_eval_csv(csv_path, rep);
    PipelineConfig cfg;
    write_eval_json(json_path, rep, dump_pipeline_config(cfg), config_hash(cfg));

    std::ifstream csv(csv_path);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "center,mpjpe_mm");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "4,10.00");

    std::ifstream js(json_path);
    nlohmann::json j = nlohmann::json::parse(js);
    CHECK(j["window"] == 8);
    CHECK(j["excluded"] == 7);
    CHECK(j["mean_mm"] == doctest::Approx(11.25));
    CHECK(j["config_hash"] == hash_hex(config_hash(cfg)));
    CHECK(j["config"]["window"] == 24);
    CHECK(j["pcp"]["overall"] == doctest::Approx(0.75));
    fs::remove(csv_path);
    fs::remove(json_path);

    std::vector<AblationRow> ab{{"STV", "krr", 20.0}, {"RSTV", "krr", 10.0}};
    auto ab_path = (dir / "rstv_ab.csv").string();
    write_ablation_csv(ab_path, ab);
    std::ifstream abf(ab_path);
    std::getline(abf, header);
    CHECK(header == "variant,regressor,mpjpe_mm");
    std::getline(abf, line);
    CHECK(line == "STV,krr,20.00");
    fs::remove(ab_path);

    std::vector<SweepRow> sw{{4, 30.0}, {24, 15.5}};
    auto sw_path = (dir / "rstv_sw.csv").string();
    write_sweep_csv(sw_path, sw);
    std::ifstream swf(sw_path);
    std::getline(swf, header);
    CHECK(header == "window,mpjpe_mm");
    std::getline(swf, line);
    CHECK(line == "4,30.00");
    fs::remove(sw_path);
}
