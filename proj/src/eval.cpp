#include "rstv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "rstv/parallel.hpp"
#include "rstv/patch.hpp"
#include "rstv/rng.hpp"
#include "rstv/synth.hpp"

using nlohmann::json;

namespace rstv {

double mpjpe(const Pose3D& pred, const Pose3D& gt) {
    if (pred.joints() != gt.joints()) throw std::invalid_argument("skeleton mismatch");
    return (pred.coords - gt.coords).rowwise().norm().mean();
}

PcpResult pcp(const Pose3D& pred, const Pose3D& gt, const SkeletonSpec& skel, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (skel.limbs.empty()) throw std::invalid_argument("skeleton defines no limbs");
    if (pred.joints() != gt.joints()) throw std::invalid_argument("skeleton mismatch");

    PcpResult r;
    r.limb_status.reserve(skel.limbs.size());
    int correct = 0;
    for (auto [a, b] : skel.limbs) {
        if (a < 0 || b < 0 || a >= gt.joints() || b >= gt.joints()) {
            throw std::invalid_argument("limb references missing joint");
        }
        const double len = (gt.coords.row(a) - gt.coords.row(b)).norm();
        if (len == 0.0) {
            r.limb_status.push_back(-1);
            ++r.skipped;
            continue;
        }
        const double ea = (pred.coords.row(a) - gt.coords.row(a)).norm();
        const double eb = (pred.coords.row(b) - gt.coords.row(b)).norm();
        const bool ok = ea <= alpha * len && eb <= alpha * len;
        r.limb_status.push_back(ok ? 1 : 0);
        if (ok) ++correct;
    }
    const int scored = static_cast<int>(skel.limbs.size()) - r.skipped;
    r.overall = scored > 0 ? static_cast<double>(correct) / scored : 0.0;
    return r;
}

Eigen::MatrixXd sequence_descriptors(const std::vector<ImageD>& frames,
                                     const std::vector<BoundingBox>& boxes,
                                     const Hog3DConfig& hog, int window, int patch_size,
                                     int threads) {
    const std::vector<VolumeIndex> blocks = extract_blocks(static_cast<int>(frames.size()), window);
    hog.validate(window, patch_size, patch_size);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(blocks.size()), hog.descriptor_length(window));
    parallel_for(static_cast<int>(blocks.size()), threads, [&](int i) {
        Volume v = stack_patches(frames, boxes, blocks[i], patch_size);
        X.row(i) = descriptor(v, hog, blocks[i]).values.transpose();
    });
    return X;
}

namespace {

// Flattened root-relative ground truth at each block center.
Eigen::MatrixXd gt_rows(const std::vector<Pose3D>& gt, const std::vector<VolumeIndex>& blocks) {
    if (blocks.empty()) return Eigen::MatrixXd();
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(blocks.size()), gt[blocks[0].center].joints() * 3);
    for (size_t i = 0; i < blocks.size(); ++i) {
        Y.row(i) = root_relativize(gt[blocks[i].center].coords, 0).flatten().transpose();
    }
    return Y;
}

double mean_mpjpe(const PoseModel& model, const Eigen::MatrixXd& X,
                  const std::vector<Pose3D>& gt, const std::vector<VolumeIndex>& blocks) {
    const std::vector<Pose3D> preds = model.predict_rows(X);
    double total = 0.0;
    for (size_t i = 0; i < blocks.size(); ++i) {
        total += mpjpe(preds[i], root_relativize(gt[blocks[i].center].coords, 0));
    }
    return total / static_cast<double>(blocks.size());
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

EvalReport evaluate(const PoseModel& model, const std::vector<ImageD>& frames,
                    const std::vector<BoundingBox>& boxes, const std::vector<Pose3D>& gt,
                    const PipelineConfig& cfg, bool with_pcp, const SkeletonSpec* skeleton,
                    double pcp_alpha) {
    cfg.validate();
    if (gt.size() != frames.size()) throw std::invalid_argument("one ground-truth pose per frame");
    if (boxes.size() != frames.size()) throw std::invalid_argument("one box per frame");
    if (with_pcp && skeleton == nullptr) throw std::invalid_argument("PCP needs a skeleton");

    const std::vector<VolumeIndex> blocks =
        extract_blocks(static_cast<int>(frames.size()), cfg.window);
    Eigen::MatrixXd X =
        sequence_descriptors(frames, boxes, cfg.hog, cfg.window, cfg.patch_size, cfg.threads);
    const std::vector<Pose3D> preds = model.predict_rows(X);

    EvalReport rep;
    rep.window = cfg.window;
    rep.excluded = static_cast<int>(frames.size()) - static_cast<int>(blocks.size());
    rep.centers.reserve(blocks.size());
    rep.per_frame.reserve(blocks.size());

    std::vector<int> limb_correct, limb_scored;
    int pcp_correct = 0, pcp_scored = 0, pcp_skipped = 0;

    for (size_t i = 0; i < blocks.size(); ++i) {
        const Pose3D gt_rel = root_relativize(gt[blocks[i].center].coords, 0);
        rep.centers.push_back(blocks[i].center);
        rep.per_frame.push_back(mpjpe(preds[i], gt_rel));
        if (with_pcp) {
            PcpResult pr = pcp(preds[i], gt_rel, *skeleton, pcp_alpha);
            limb_correct.resize(pr.limb_status.size(), 0);
            limb_scored.resize(pr.limb_status.size(), 0);
            for (size_t l = 0; l < pr.limb_status.size(); ++l) {
                if (pr.limb_status[l] < 0) {
                    ++pcp_skipped;
                    continue;
                }
                ++limb_scored[l];
                ++pcp_scored;
                if (pr.limb_status[l] == 1) {
                    ++limb_correct[l];
                    ++pcp_correct;
                }
            }
        }
    }

    const auto n = static_cast<double>(rep.per_frame.size());
    if (n > 0) {
        double total = 0.0;
        for (double v : rep.per_frame) total += v;
        rep.mean = total / n;
        double ss = 0.0;
        for (double v : rep.per_frame) ss += (v - rep.mean) * (v - rep.mean);
        rep.stddev = std::sqrt(ss / n);
    }

    if (with_pcp) {
        PcpAggregate agg;
        agg.per_limb.resize(limb_correct.size(), 0.0);
        for (size_t l = 0; l < limb_correct.size(); ++l) {
            if (limb_scored[l] > 0) {
                agg.per_limb[l] = static_cast<double>(limb_correct[l]) / limb_scored[l];
            }
        }
        agg.overall = pcp_scored > 0 ? static_cast<double>(pcp_correct) / pcp_scored : 0.0;
        agg.skipped = pcp_skipped;
        rep.pcp = std::move(agg);
    }
    return rep;
}

std::vector<AblationRow> ablate_motion(const SequenceManifest& manifest,
                                       const std::vector<ImageD>& frames,
                                       const ShiftRegressor& coarse, const ShiftRegressor& fine,
                                       const PipelineConfig& cfg) {
    cfg.validate();
    if (!manifest.boxes) throw std::invalid_argument("manifest has no boxes");
    if (!manifest.poses) throw std::invalid_argument("manifest has no poses");
    if (frames.size() != manifest.frame_paths.size()) {
        throw std::invalid_argument("frame count does not match manifest");
    }

    const int n = static_cast<int>(frames.size());
    const int split = n / 2;
    if (split < cfg.window || n - split < cfg.window) {
        throw std::invalid_argument("sequence too short to split around the window");
    }

    JitterResult jit = jitter_boxes(manifest, {cfg.jitter, cfg.jitter, Rng::mix(cfg.seed, 41)});
    const std::vector<BoundingBox>& stv_boxes = *jit.manifest.boxes;

    const std::vector<ImageD> train_frames(frames.begin(), frames.begin() + split);
    const std::vector<ImageD> test_frames(frames.begin() + split, frames.end());

    // RSTV: one jittered detection per half, re-centered frame by frame.
    std::vector<BoundingBox> rstv_boxes =
        compensate(train_frames, stv_boxes[0], cfg.comp, coarse, fine);
    {
        std::vector<BoundingBox> tail =
            compensate(test_frames, stv_boxes[split], cfg.comp, coarse, fine);
        rstv_boxes.insert(rstv_boxes.end(), tail.begin(), tail.end());
    }

    const std::vector<Pose3D>& gt = *manifest.poses;
    const std::vector<Pose3D> gt_train(gt.begin(), gt.begin() + split);
    const std::vector<Pose3D> gt_test(gt.begin() + split, gt.end());
    const std::vector<VolumeIndex> train_blocks = extract_blocks(split, cfg.window);
    const std::vector<VolumeIndex> test_blocks = extract_blocks(n - split, cfg.window);

    std::vector<AblationRow> rows;
    for (const char* variant : {"STV", "RSTV"}) {
        const std::vector<BoundingBox>& all =
            std::string(variant) == "STV" ? stv_boxes : rstv_boxes;
        const std::vector<BoundingBox> train_boxes(all.begin(), all.begin() + split);
        const std::vector<BoundingBox> test_boxes(all.begin() + split, all.end());

        Eigen::MatrixXd Xtr = sequence_descriptors(train_frames, train_boxes, cfg.hog, cfg.window,
                                                   cfg.patch_size, cfg.threads);
        Eigen::MatrixXd Xte = sequence_descriptors(test_frames, test_boxes, cfg.hog, cfg.window,
                                                   cfg.patch_size, cfg.threads);
        Eigen::MatrixXd Ytr = gt_rows(gt_train, train_blocks);

        for (const char* kind : {"krr", "dn"}) {
            FitConfig fc = cfg.fit;
            fc.kind = kind;
            PoseModel model = fit_pose_model(Xtr, Ytr, fc);
            rows.push_back({variant, kind, mean_mpjpe(model, Xte, gt_test, test_blocks)});
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_window(const SequenceManifest& manifest,
                                   const std::vector<ImageD>& frames,
                                   const std::vector<int>& windows, const PipelineConfig& cfg) {
    if (!manifest.boxes) throw std::invalid_argument("manifest has no boxes");
    if (!manifest.poses) throw std::invalid_argument("manifest has no poses");
    if (frames.size() != manifest.frame_paths.size()) {
        throw std::invalid_argument("frame count does not match manifest");
    }
    if (windows.empty()) throw std::invalid_argument("no window sizes given");

    const int n = static_cast<int>(frames.size());
    const int split = n / 2;
    std::vector<int> sorted = windows;
    std::sort(sorted.begin(), sorted.end());
    for (int T : sorted) {
        if (T <= 0 || T % 2 != 0) throw std::invalid_argument("window sizes must be even positive");
        if (T > split || T > n - split) {
            throw std::invalid_argument("window exceeds half-sequence length");
        }
    }

    const std::vector<BoundingBox>& boxes = *manifest.boxes;
    const std::vector<Pose3D>& gt = *manifest.poses;
    const std::vector<ImageD> train_frames(frames.begin(), frames.begin() + split);
    const std::vector<ImageD> test_frames(frames.begin() + split, frames.end());
    const std::vector<BoundingBox> train_boxes(boxes.begin(), boxes.begin() + split);
    const std::vector<BoundingBox> test_boxes(boxes.begin() + split, boxes.end());
    const std::vector<Pose3D> gt_train(gt.begin(), gt.begin() + split);
    const std::vector<Pose3D> gt_test(gt.begin() + split, gt.end());

    std::vector<SweepRow> rows;
    for (int T : sorted) {
        Hog3DConfig hog = cfg.hog;
        hog.validate(T, cfg.patch_size, cfg.patch_size);
        Eigen::MatrixXd Xtr =
            sequence_descriptors(train_frames, train_boxes, hog, T, cfg.patch_size, cfg.threads);
        Eigen::MatrixXd Xte =
            sequence_descriptors(test_frames, test_boxes, hog, T, cfg.patch_size, cfg.threads);
        const std::vector<VolumeIndex> train_blocks = extract_blocks(split, T);
        const std::vector<VolumeIndex> test_blocks = extract_blocks(n - split, T);
        FitConfig fc = cfg.fit;
        fc.kind = "krr";
        PoseModel model = fit_pose_model(Xtr, gt_rows(gt_train, train_blocks), fc);
        rows.push_back({T, mean_mpjpe(model, Xte, gt_test, test_blocks)});
    }
    return rows;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out = open_out(path);
    out << "center,mpjpe_mm\n";
    for (size_t i = 0; i < report.centers.size(); ++i) {
        out << report.centers[i] << "," << fmt2(report.per_frame[i]) << "\n";
    }
}

void write_eval_json(const std::string& path, const EvalReport& report,
                     const std::string& config_json, uint64_t config_hash) {
    json j{{"window", report.window},
           {"centers", report.centers},
           {"per_frame_mm", report.per_frame},
           {"mean_mm", report.mean},
           {"stddev_mm", report.stddev},
           {"excluded", report.excluded},
           {"config", config_json.empty() ? json::object() : json::parse(config_json)},
           {"config_hash", hash_hex(config_hash)}};
    if (report.pcp) {
        j["pcp"] = {{"per_limb", report.pcp->per_limb},
                    {"overall", report.pcp->overall},
                    {"skipped", report.pcp->skipped}};
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out = open_out(path);
    out << "variant,regressor,mpjpe_mm\n";
    for (const auto& r : rows) {
        out << r.variant << "," << r.regressor << "," << fmt2(r.mpjpe) << "\n";
    }
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out = open_out(path);
    out << "window,mpjpe_mm\n";
    for (const auto& r : rows) {
        out << r.window << "," << fmt2(r.mpjpe) << "\n";
    }
}

}  // namespace rstv
