#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "rstv/manifest.hpp"
#include "rstv/synth.hpp"
#include "rstv/types.hpp"

using namespace rstv;
namespace fs = std::filesystem;

namespace {

SynthConfig small_cfg(uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.image_h = cfg.image_w = 96;
    cfg.n_frames = 48;
    cfg.box_size = 60;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
    auto a = gen_sequence(small_cfg(7));
    auto b = gen_sequence(small_cfg(7));
    auto c = gen_sequence(small_cfg(8));
    REQUIRE(a.frames.size() == 48);
    bool same = true, differs = false;
    for (size_t i = 0; i < a.frames.size(); ++i) {
        if (a.frames[i] != b.frames[i]) same = false;
        if (a.frames[i] != c.frames[i]) differs = true;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("manifest carries poses boxes and skeleton") {
    auto g = gen_sequence(small_cfg());
    const auto& m = g.manifest;
    REQUIRE(m.poses.has_value());
    REQUIRE(m.boxes.has_value());
    REQUIRE(m.skeleton.has_value());
    CHECK(m.size() == 48);
    CHECK(m.poses->size() == 48);
    CHECK(m.boxes->size() == 48);
    CHECK(m.fps == doctest::Approx(50.0));
    m.skeleton->validate();
    for (const auto& p : *m.poses) {
        CHECK(p.joints() == m.skeleton->joint_count);
        CHECK(p.coords.allFinite());
    }
}

TEST_CASE("subject stays inside its box") {
    auto g = gen_sequence(small_cfg());
    // Signal concentrates inside the ground-truth box: compare mean absolute
    // intensity inside vs outside.
    for (int t = 0; t < g.manifest.size(); t += 7) {
        const ImageD& img = g.frames[t];
        const auto& box = (*g.manifest.boxes)[t];
        double in_sum = 0, out_sum = 0;
        int in_n = 0, out_n = 0;
        for (int r = 0; r < img.rows(); ++r) {
            for (int c = 0; c < img.cols(); ++c) {
                const bool inside = std::abs(c + 0.5 - box.center_u) <= box.width / 2.0 &&
                                    std::abs(r + 0.5 - box.center_v) <= box.height / 2.0;
                (inside ? in_sum : out_sum) += std::abs(img(r, c));
                (inside ? in_n : out_n)++;
            }
        }
        CHECK(in_sum / in_n > 3.0 * out_sum / out_n);
    }
}

TEST_CASE("poses move and repeat with the gait period") {
    SynthConfig cfg = small_cfg();
    cfg.n_frames = 90;
    cfg.gait_period = 40.0;
    auto g = gen_sequence(cfg);
    const auto& poses = *g.manifest.poses;
    // Nonconstant.
    CHECK((poses[0].coords - poses[10].coords).cwiseAbs().maxCoeff() > 1.0);
    // Root-relative articulation repeats after one period even while the
    // subject drifts across the image.
    Pose3D a = root_relativize(poses[5].coords, 0);
    Pose3D b = root_relativize(poses[45].coords, 0);
    CHECK((a.coords - b.coords).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("directory round trip preserves the sequence") {
    fs::path dir = fs::temp_directory_path() / "rstv_synth_rt";
    fs::remove_all(dir);
    SequenceManifest m = gen_sequence_to_dir(small_cfg(), dir.string());
    CHECK(m.size() == 48);
    SequenceManifest loaded = load_manifest((dir / "manifest.json").string());
    REQUIRE(loaded.size() == m.size());
    REQUIRE(loaded.boxes.has_value());
    REQUIRE(loaded.poses.has_value());
    for (int i = 0; i < m.size(); ++i) {
        CHECK((*loaded.boxes)[i].center_u == doctest::Approx((*m.boxes)[i].center_u));
        CHECK((*loaded.poses)[i].coords.isApprox((*m.poses)[i].coords, 1e-9));
    }
    auto mem = gen_sequence(small_cfg());
    auto frames = load_frames(loaded);
    REQUIRE(frames.size() == mem.frames.size());
    // Files quantize to 8 bits.
    for (size_t i = 0; i < frames.size(); ++i) {
        CHECK((frames[i] - mem.frames[i]).cwiseAbs().maxCoeff() < 1.0 / 255.0 + 1e-9);
    }
    fs::remove_all(dir);
}

TEST_CASE("jitter displaces boxes inside the bound and records offsets") {
    auto g = gen_sequence(small_cfg());
    JitterResult jr = jitter_boxes(g.manifest, {6.0, 3.0, 11});
    REQUIRE(jr.offsets.size() == static_cast<size_t>(g.manifest.size()));
    double max_u = 0, max_v = 0, mean_u = 0;
    for (int i = 0; i < g.manifest.size(); ++i) {
        auto [du, dv] = jr.offsets[i];
        max_u = std::max(max_u, std::abs(du));
        max_v = std::max(max_v, std::abs(dv));
        mean_u += du / g.manifest.size();
        const auto& orig = (*g.manifest.boxes)[i];
        const auto& moved = (*jr.manifest.boxes)[i];
        CHECK(moved.center_u == doctest::Approx(orig.center_u + du));
        CHECK(moved.center_v == doctest::Approx(orig.center_v + dv));
        CHECK(moved.width == orig.width);
    }
    CHECK(max_u <= 6.0);
    CHECK(max_v <= 3.0);
    CHECK(max_u > 3.0);   // the bound is actually explored
    CHECK(std::abs(mean_u) < 2.0);

    JitterResult again = jitter_boxes(g.manifest, {6.0, 3.0, 11});
    CHECK(again.offsets == jr.offsets);
}
