// Command-line front end: one binary, one subcommand per pipeline stage.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rstv/eval.hpp"
#include "rstv/features.hpp"
#include "rstv/hog3d.hpp"
#include "rstv/kernels.hpp"
#include "rstv/manifest.hpp"
#include "rstv/motioncomp.hpp"
#include "rstv/patch.hpp"
#include "rstv/pipeline.hpp"
#include "rstv/regress.hpp"
#include "rstv/rng.hpp"
#include "rstv/synth.hpp"
#include "rstv/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

// Frame paths are manifest-relative; saving elsewhere must pin them down.
rstv::SequenceManifest resolved_copy(const rstv::SequenceManifest& m, const std::string& out_path) {
    rstv::SequenceManifest copy = m;
    fs::path out_dir = fs::path(out_path).parent_path();
    if (out_dir.empty()) out_dir = ".";  // bare filename lands in the cwd
    fs::path base_dir = m.base_dir.empty() ? fs::path(".") : fs::path(m.base_dir);
    if (fs::weakly_canonical(fs::absolute(out_dir)) !=
        fs::weakly_canonical(fs::absolute(base_dir))) {
        for (int i = 0; i < m.size(); ++i) {
            copy.frame_paths[i] = fs::absolute(rstv::frame_path(m, i)).string();
        }
    }
    return copy;
}

Eigen::MatrixXd pose_targets(const rstv::SequenceManifest& m, const std::vector<int>& centers) {
    if (!m.poses) throw std::runtime_error("manifest has no poses");
    const auto& poses = *m.poses;
    if (centers.empty()) throw std::runtime_error("no block centers");
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(centers.size()),
                      poses[centers[0]].joints() * 3);
    for (size_t i = 0; i < centers.size(); ++i) {
        const int c = centers[i];
        if (c < 0 || c >= m.size()) throw std::runtime_error("center outside sequence");
        Y.row(i) = rstv::root_relativize(poses[c].coords, 0).flatten().transpose();
    }
    return Y;
}

int run_selftest(const rstv::PipelineConfig& cfg) {
    int failures = 0;
    auto check = [&failures](bool ok, const char* name) {
        std::cout << (ok ? "ok - " : "FAIL - ") << name << "\n";
        if (!ok) ++failures;
    };

    {
        auto blocks = rstv::extract_blocks(50, 24);
        check(blocks.size() == 27 && blocks.front().center == 11 && blocks.back().center == 37,
              "block extraction covers 27 centers in 50 frames at T=24");
    }
    {
        rstv::Hog3DConfig hog;
        check(hog.descriptor_length(24) == 5040, "default descriptor length is 5040");
    }
    {
        rstv::Pose3D a = rstv::Pose3D::unflatten(Eigen::VectorXd::Zero(6));
        rstv::Pose3D b = a;
        b.coords.row(1) << 3.0, 0.0, 4.0;
        check(rstv::mpjpe(a, b) == 2.5, "mpjpe hand case 2.5");
    }
    {
        Eigen::VectorXd x(2), y(2);
        x << 1, 0;
        y << 0, 1;
        check(rstv::chi2_distance(x, y) == 2.0, "chi-square distance hand case");
        check(std::abs(rstv::exp_chi2_kernel(x, y, 0.5) - std::exp(-1.0)) < 1e-15,
              "exponential chi-square kernel hand case");
    }
    {
        Eigen::MatrixXd phi(1, 1), y(1, 1);
        phi << 1.0;
        y << 2.0;
        check(std::abs(rstv::ridge_fit(phi, y, 1.0)(0, 0) - 1.0) < 1e-12,
              "one-dimensional ridge solution");
    }
    {
        const auto& axes = rstv::orientation_axes(10);
        auto [bin, mag] = rstv::quantize_orientation(Eigen::Vector3d(2, 0, 0), 10);
        check(axes.size() == 10 && bin == 0 && mag == 2.0, "gradient along first axis hits bin 0");
    }
    {
        rstv::SynthConfig sc;
        sc.n_frames = 48;
        sc.seed = cfg.seed;
        auto g1 = rstv::gen_sequence(sc);
        auto g2 = rstv::gen_sequence(sc);
        bool same = g1.frames.size() == g2.frames.size();
        for (size_t i = 0; same && i < g1.frames.size(); ++i) {
            same = g1.frames[i] == g2.frames[i];
        }
        check(same, "synthetic generation is seed deterministic");

        auto jit = rstv::jitter_boxes(g1.manifest, {4.0, 4.0, cfg.seed});
        bool recovered = true;
        for (int i = 0; i < g1.manifest.size() && recovered; ++i) {
            const auto& orig = (*g1.manifest.boxes)[i];
            const auto& moved = (*jit.manifest.boxes)[i];
            recovered = std::abs(moved.center_u - jit.offsets[i].first - orig.center_u) < 1e-12 &&
                        std::abs(moved.center_v - jit.offsets[i].second - orig.center_v) < 1e-12;
        }
        check(recovered, "jitter offsets recover original boxes");
    }
    {
        rstv::ImageD img = rstv::ImageD::Zero(8, 8);
        img(3, 4) = 1.0;
        rstv::BoundingBox box{4.0, 4.0, 8, 8};
        rstv::ImageD crop = rstv::crop_patch(img, box, 8, 8);
        check((crop - img).cwiseAbs().maxCoeff() == 0.0, "identity crop is exact");
    }
    {
        rstv::Mat3Xd coords(2, 3);
        coords << 5, 5, 5, 5, 5, 5;
        rstv::Pose3D p = rstv::root_relativize(coords, 0);
        check(p.coords.cwiseAbs().maxCoeff() == 0.0, "constant pose root-relativizes to zero");
    }
    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pose-from-volume toolkit: synthetic sequences, motion-compensated "
                 "volumes, 3D gradient descriptors and kernel/network regressors"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    uint64_t seed = 0;
    int threads = 0;
    bool paper_dims = false;
    std::string out_dir;
    app.add_option("--config", config_path, "Pipeline config JSON");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed override");
    app.add_option("--threads", threads, "Worker thread override");
    app.add_flag("--paper-dims", paper_dims, "Full-scale embedding and layer dims");
    app.add_option("--out", out_dir, "Default output directory");

    // synth-gen
    auto* gen = app.add_subcommand("synth-gen", "Render a synthetic walking sequence");
    rstv::SynthConfig synth;
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--frames", synth.n_frames, "Frame count");
    gen->add_option("--image-size", synth.image_h, "Square frame side in px");
    gen->add_option("--amplitude", synth.gait_amplitude, "Gait amplitude, radians");
    gen->add_option("--period", synth.gait_period, "Gait period, frames");
    gen->add_option("--drift-u", synth.drift_u, "Horizontal drift, px/frame");
    gen->add_option("--drift-v", synth.drift_v, "Vertical drift, px/frame");
    gen->add_option("--noise", synth.noise_sigma, "Pixel noise sigma");
    gen->add_option("--box-size", synth.box_size, "Ground-truth box side, px");
    gen->add_option("--fps", synth.fps, "Frame rate");

    // jitter
    auto* jit = app.add_subcommand("jitter", "Displace manifest boxes by uniform shifts");
    std::string jit_manifest, jit_out, jit_offsets;
    double jit_max_u = -1.0, jit_max_v = -1.0;
    jit->add_option("--manifest", jit_manifest, "Input manifest")->required();
    jit->add_option("--out", jit_out, "Output manifest path")->required();
    jit->add_option("--max-u", jit_max_u, "Max horizontal shift (default: config jitter)");
    jit->add_option("--max-v", jit_max_v, "Max vertical shift (default: config jitter)");
    jit->add_option("--offsets", jit_offsets, "Also write applied offsets as JSON");

    // train-shift
    auto* tsh = app.add_subcommand("train-shift", "Train a coarse or fine shift regressor");
    std::string tsh_manifest, tsh_kind, tsh_out;
    double tsh_range = -1.0;
    int tsh_per_frame = 4;
    rstv::ShiftTrainConfig tsh_cfg;
    tsh->add_option("--manifest", tsh_manifest, "Manifest with ground-truth boxes")->required();
    tsh->add_option("--kind", tsh_kind, "coarse or fine")->required();
    tsh->add_option("--out", tsh_out, "Model output path")->required();
    tsh->add_option("--range", tsh_range, "Shift range in px (default from config)");
    tsh->add_option("--n-per-frame", tsh_per_frame, "Samples per frame");
    tsh->add_option("--epochs", tsh_cfg.epochs, "Training epochs");
    tsh->add_option("--batch", tsh_cfg.batch, "Minibatch size");
    tsh->add_option("--lr", tsh_cfg.lr, "ADAM learning rate");

    // compensate
    auto* comp = app.add_subcommand("compensate", "Refine box track with shift regressors");
    std::string comp_manifest, comp_coarse, comp_fine, comp_out;
    comp->add_option("--manifest", comp_manifest, "Input manifest (first box seeds the track)")
        ->required();
    comp->add_option("--coarse", comp_coarse, "Coarse regressor model")->required();
    comp->add_option("--fine", comp_fine, "Fine regressor model")->required();
    comp->add_option("--out", comp_out, "Output manifest with refined boxes")->required();

    // features
    auto* feat = app.add_subcommand("features", "Descriptors for every temporal block");
    std::string feat_manifest, feat_out;
    feat->add_option("--manifest", feat_manifest, "Manifest with per-frame boxes")->required();
    feat->add_option("--out", feat_out, "Feature file output path")->required();

    // train
    auto* train = app.add_subcommand("train", "Fit a pose regressor on a feature file");
    std::string train_features, train_manifest, train_kind, train_out;
    train->add_option("--features", train_features, "Feature file")->required();
    train->add_option("--manifest", train_manifest, "Manifest with ground-truth poses")
        ->required();
    train->add_option("--kind", train_kind, "krr, kde or dn (default from config)");
    train->add_option("--out", train_out, "Model output path")->required();

    // predict
    auto* pred = app.add_subcommand("predict", "Predict poses for a feature file");
    std::string pred_model, pred_features, pred_out;
    pred->add_option("--model", pred_model, "Pose model path")->required();
    pred->add_option("--features", pred_features, "Feature file")->required();
    pred->add_option("--out", pred_out, "Predictions JSON path")->required();

    // eval
    auto* evalc = app.add_subcommand("eval", "Score a model against ground truth");
    std::string eval_model, eval_manifest, eval_prefix;
    bool eval_pcp = false;
    double eval_alpha = 0.5;
    evalc->add_option("--model", eval_model, "Pose model path")->required();
    evalc->add_option("--manifest", eval_manifest, "Manifest with boxes and poses")->required();
    evalc->add_option("--out-prefix", eval_prefix, "Report path prefix")->required();
    evalc->add_flag("--pcp", eval_pcp, "Also score PCP");
    evalc->add_option("--alpha", eval_alpha, "PCP threshold fraction");

    // ablate-motion
    auto* abl = app.add_subcommand("ablate-motion", "Compare compensated vs raw volumes");
    std::string abl_manifest, abl_coarse, abl_fine, abl_prefix;
    abl->add_option("--manifest", abl_manifest, "Manifest with boxes and poses")->required();
    abl->add_option("--coarse", abl_coarse, "Coarse regressor model")->required();
    abl->add_option("--fine", abl_fine, "Fine regressor model")->required();
    abl->add_option("--out-prefix", abl_prefix, "Report path prefix")->required();

    // sweep-window
    auto* swp = app.add_subcommand("sweep-window", "Score across temporal window sizes");
    std::string swp_manifest, swp_prefix;
    std::vector<int> swp_windows{4, 12, 24};
    swp->add_option("--manifest", swp_manifest, "Manifest with boxes and poses")->required();
    swp->add_option("--windows", swp_windows, "Window sizes to score");
    swp->add_option("--out-prefix", swp_prefix, "Report path prefix")->required();

    // selftest
    auto* self = app.add_subcommand("selftest", "Fast embedded invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        rstv::PipelineConfig cfg;
        if (!config_path.empty()) cfg = rstv::load_pipeline_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.seed = seed;
            cfg.fit.seed = seed;
        }
        if (threads > 0) cfg.threads = threads;
        if (paper_dims) cfg = cfg.paper_dims();
        cfg.validate();

        if (*gen) {
            synth.image_w = synth.image_h;
            if (seed_opt->count() > 0) synth.seed = seed;
            synth.validate();
            rstv::SequenceManifest m = rstv::gen_sequence_to_dir(synth, gen_out);
            std::cout << "wrote " << m.size() << " frames to " << gen_out << "\n";
        } else if (*jit) {
            rstv::SequenceManifest m = rstv::load_manifest(jit_manifest);
            rstv::JitterConfig jc{jit_max_u >= 0 ? jit_max_u : cfg.jitter,
                                  jit_max_v >= 0 ? jit_max_v : cfg.jitter,
                                  rstv::Rng::mix(cfg.seed, 41)};
            rstv::JitterResult jr = rstv::jitter_boxes(m, jc);
            rstv::SequenceManifest out = resolved_copy(m, jit_out);
            out.boxes = jr.manifest.boxes;
            rstv::save_manifest(jit_out, out);
            if (!jit_offsets.empty()) {
                json j = json::array();
                for (auto [du, dv] : jr.offsets) j.push_back({du, dv});
                std::ofstream f(jit_offsets);
                if (!f) throw std::runtime_error("cannot write " + jit_offsets);
                f << j.dump(2) << "\n";
            }
            std::cout << "wrote jittered manifest " << jit_out << "\n";
        } else if (*tsh) {
            if (tsh_kind != "coarse" && tsh_kind != "fine") {
                throw CLI::ValidationError("--kind", "must be coarse or fine");
            }
            const bool is_coarse = tsh_kind == "coarse";
            const double range =
                tsh_range > 0 ? tsh_range : (is_coarse ? cfg.comp.coarse_range : cfg.comp.fine_range);
            rstv::SequenceManifest m = rstv::load_manifest(tsh_manifest);
            auto samples = rstv::make_shift_training_set(
                m, range, tsh_per_frame, rstv::Rng::mix(cfg.seed, is_coarse ? 53 : 54),
                cfg.patch_size);
            rstv::CnnShiftRegressor reg = rstv::train_shift_regressor(
                samples, tsh_kind, rstv::Rng::mix(cfg.seed, is_coarse ? 51 : 52), tsh_cfg);
            rstv::save_shift_regressor(tsh_out, reg);
            std::cout << "trained " << tsh_kind << " regressor on " << samples.size()
                      << " patches, range " << fmt2(range) << " px, saved to " << tsh_out << "\n";
        } else if (*comp) {
            rstv::SequenceManifest m = rstv::load_manifest(comp_manifest);
            if (!m.boxes || m.boxes->empty()) {
                throw std::runtime_error("manifest has no boxes to seed the track");
            }
            rstv::CnnShiftRegressor coarse_reg = rstv::load_shift_regressor(comp_coarse);
            rstv::CnnShiftRegressor fine_reg = rstv::load_shift_regressor(comp_fine);
            std::vector<rstv::ImageD> frames = rstv::load_frames(m);
            std::vector<rstv::BoundingBox> refined =
                rstv::compensate(frames, (*m.boxes)[0], cfg.comp, coarse_reg, fine_reg);
            rstv::SequenceManifest out = resolved_copy(m, comp_out);
            out.boxes = std::move(refined);
            rstv::save_manifest(comp_out, out);
            std::cout << "wrote refined manifest " << comp_out << "\n";
        } else if (*feat) {
            rstv::SequenceManifest m = rstv::load_manifest(feat_manifest);
            if (!m.boxes) throw std::runtime_error("manifest has no boxes");
            std::vector<rstv::ImageD> frames = rstv::load_frames(m);
            rstv::FeatureFile f;
            f.rows = rstv::sequence_descriptors(frames, *m.boxes, cfg.hog, cfg.window,
                                                cfg.patch_size, cfg.threads);
            for (const auto& b : rstv::extract_blocks(m.size(), cfg.window)) {
                f.centers.push_back(b.center);
            }
            f.window = cfg.window;
            f.config_json = rstv::dump_pipeline_config(cfg);
            f.config_hash = rstv::config_hash(cfg);
            rstv::save_features(feat_out, f);
            std::cout << "wrote " << f.rows.rows() << " descriptors of dim " << f.rows.cols()
                      << " to " << feat_out << "\n";
        } else if (*train) {
            rstv::FeatureFile f = rstv::load_features(train_features);
            rstv::SequenceManifest m = rstv::load_manifest(train_manifest);
            Eigen::MatrixXd Y = pose_targets(m, f.centers);
            rstv::FitConfig fc = cfg.fit;
            if (!train_kind.empty()) fc.kind = train_kind;
            rstv::PoseModel model = rstv::fit_pose_model(f.rows, Y, fc);
            model.save(train_out);
            std::cout << "fitted " << fc.kind << " model on " << f.rows.rows()
                      << " blocks, saved to " << train_out << "\n";
        } else if (*pred) {
            rstv::PoseModel model = rstv::PoseModel::load(pred_model);
            rstv::FeatureFile f = rstv::load_features(pred_features);
            std::vector<rstv::Pose3D> poses = model.predict_rows(f.rows);
            json j;
            j["centers"] = f.centers;
            json arr = json::array();
            for (const auto& p : poses) {
                const Eigen::VectorXd v = p.flatten();
                arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
            }
            j["poses"] = std::move(arr);
            std::ofstream out(pred_out);
            if (!out) throw std::runtime_error("cannot write " + pred_out);
            out << j.dump(2) << "\n";
            std::cout << "wrote " << poses.size() << " poses to " << pred_out << "\n";
        } else if (*evalc) {
            rstv::PoseModel model = rstv::PoseModel::load(eval_model);
            rstv::SequenceManifest m = rstv::load_manifest(eval_manifest);
            if (!m.boxes) throw std::runtime_error("manifest has no boxes");
            if (!m.poses) throw std::runtime_error("manifest has no poses");
            std::vector<rstv::ImageD> frames = rstv::load_frames(m);
            rstv::SkeletonSpec skel = m.skeleton ? *m.skeleton : rstv::SkeletonSpec::default17();
            rstv::EvalReport rep = rstv::evaluate(model, frames, *m.boxes, *m.poses, cfg,
                                                  eval_pcp, &skel, eval_alpha);
            const std::string tag = rstv::hash_hex(rstv::config_hash(cfg));
            const std::string csv = eval_prefix + "-eval-" + tag + ".csv";
            const std::string js = eval_prefix + "-eval-" + tag + ".json";
            rstv::write_eval_csv(csv, rep);
            rstv::write_eval_json(js, rep, rstv::dump_pipeline_config(cfg),
                                  rstv::config_hash(cfg));
            std::cout << "mean_mpjpe_mm=" << fmt2(rep.mean) << " stddev_mm=" << fmt2(rep.stddev)
                      << " excluded=" << rep.excluded << "\n"
                      << "wrote " << csv << " and " << js << "\n";
        } else if (*abl) {
            rstv::SequenceManifest m = rstv::load_manifest(abl_manifest);
            rstv::CnnShiftRegressor coarse_reg = rstv::load_shift_regressor(abl_coarse);
            rstv::CnnShiftRegressor fine_reg = rstv::load_shift_regressor(abl_fine);
            std::vector<rstv::ImageD> frames = rstv::load_frames(m);
            auto rows = rstv::ablate_motion(m, frames, coarse_reg, fine_reg, cfg);
            const std::string csv =
                abl_prefix + "-ablation-" + rstv::hash_hex(rstv::config_hash(cfg)) + ".csv";
            rstv::write_ablation_csv(csv, rows);
            for (const auto& r : rows) {
                std::cout << r.variant << "/" << r.regressor << " mpjpe_mm=" << fmt2(r.mpjpe)
                          << "\n";
            }
            std::cout << "wrote " << csv << "\n";
        } else if (*swp) {
            rstv::SequenceManifest m = rstv::load_manifest(swp_manifest);
            std::vector<rstv::ImageD> frames = rstv::load_frames(m);
            auto rows = rstv::sweep_window(m, frames, swp_windows, cfg);
            const std::string csv =
                swp_prefix + "-sweep-" + rstv::hash_hex(rstv::config_hash(cfg)) + ".csv";
            rstv::write_sweep_csv(csv, rows);
            for (const auto& r : rows) {
                std::cout << "T=" << r.window << " mpjpe_mm=" << fmt2(r.mpjpe) << "\n";
            }
            std::cout << "wrote " << csv << "\n";
        } else if (*self) {
            return run_selftest(cfg);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
