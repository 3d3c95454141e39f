#include "rstv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rstv/image_io.hpp"
#include "rstv/manifest.hpp"
#include "rstv/rng.hpp"

namespace rstv {

namespace {

constexpr int kPelvis = 0, kSpine = 1, kNeck = 2, kHead = 3;
constexpr int kLSho = 4, kLElb = 5, kLWri = 6;
constexpr int kRSho = 7, kRElb = 8, kRWri = 9;
constexpr int kLHip = 10, kLKnee = 11, kLAnk = 12;
constexpr int kRHip = 13, kRKnee = 14, kRAnk = 15;
constexpr int kHeadTop = 16;

// Limb tip displaced from its base by length L at swing angle theta about the
// lateral axis; theta = 0 hangs straight down, theta > 0 swings forward (+z).
Eigen::RowVector3d swing(double length, double theta) {
    return {0.0, -length * std::cos(theta), length * std::sin(theta)};
}

// Body-frame joint positions (mm, y up, z forward) at gait phase phi.
Mat3Xd pose_at_phase(double phi, double amplitude) {
    const double a = amplitude;
    Mat3Xd p(17, 3);
    p.row(kPelvis) << 0, 0, 0;
    p.row(kSpine) = p.row(kPelvis) + Eigen::RowVector3d(0, 250, 0);
    p.row(kNeck) = p.row(kSpine) + Eigen::RowVector3d(0, 250, 0);
    p.row(kHead) = p.row(kNeck) + Eigen::RowVector3d(0, 120, 0);
    p.row(kHeadTop) = p.row(kHead) + Eigen::RowVector3d(0, 120, 0);
    p.row(kLSho) = p.row(kNeck) + Eigen::RowVector3d(165, -15, 0);
    p.row(kRSho) = p.row(kNeck) + Eigen::RowVector3d(-165, -15, 0);
    p.row(kLHip) = p.row(kPelvis) + Eigen::RowVector3d(95, -35, 0);
    p.row(kRHip) = p.row(kPelvis) + Eigen::RowVector3d(-95, -35, 0);

    // Arms swing opposite the same-side leg; elbows bend forward.
    const double arm_l = -0.8 * a * std::sin(phi);
    const double arm_r = 0.8 * a * std::sin(phi);
    const double elb_l = 0.35 + 0.25 * a * 0.5 * (1.0 + std::sin(phi));
    const double elb_r = 0.35 + 0.25 * a * 0.5 * (1.0 - std::sin(phi));
    p.row(kLElb) = p.row(kLSho) + swing(280, arm_l);
    p.row(kLWri) = p.row(kLElb) + swing(250, arm_l + elb_l);
    p.row(kRElb) = p.row(kRSho) + swing(280, arm_r);
    p.row(kRWri) = p.row(kRElb) + swing(250, arm_r + elb_r);

    // Knees flex backward only.
    const double leg_l = a * std::sin(phi);
    const double leg_r = -a * std::sin(phi);
    const double knee_l = 0.5 * a * (1.0 + std::cos(phi));
    const double knee_r = 0.5 * a * (1.0 - std::cos(phi));
    p.row(kLKnee) = p.row(kLHip) + swing(420, leg_l);
    p.row(kLAnk) = p.row(kLKnee) + swing(400, leg_l - knee_l);
    p.row(kRKnee) = p.row(kRHip) + swing(420, leg_r);
    p.row(kRAnk) = p.row(kRKnee) + swing(400, leg_r - knee_r);
    return p;
}

Mat3Xd apply_yaw(const Mat3Xd& p, double yaw) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    Mat3Xd out(p.rows(), 3);
    for (int j = 0; j < p.rows(); ++j) {
        out(j, 0) = c * p(j, 0) + s * p(j, 2);
        out(j, 1) = p(j, 1);
        out(j, 2) = -s * p(j, 0) + c * p(j, 2);
    }
    return out;
}

// Stroke half-width multiplier per child joint (torso and head drawn heavier).
double bone_weight(int child) {
    switch (child) {
        case kSpine:
        case kNeck:
            return 2.2;
        case kHead:
        case kHeadTop:
            return 2.8;
        case kLSho:
        case kRSho:
        case kLHip:
        case kRHip:
            return 1.4;
        case kLKnee:
        case kRKnee:
            return 1.6;
        case kLAnk:
        case kRAnk:
            return 1.3;
        default:
            return 1.0;  // arms
    }
}

void draw_capsule(ImageD& img, double u0, double v0, double u1, double v1, double hw,
                  double brightness) {
    const int rows = static_cast<int>(img.rows());
    const int cols = static_cast<int>(img.cols());
    const int cmin = std::max(0, static_cast<int>(std::floor(std::min(u0, u1) - hw - 1)));
    const int cmax = std::min(cols - 1, static_cast<int>(std::ceil(std::max(u0, u1) + hw + 1)));
    const int rmin = std::max(0, static_cast<int>(std::floor(std::min(v0, v1) - hw - 1)));
    const int rmax = std::min(rows - 1, static_cast<int>(std::ceil(std::max(v0, v1) + hw + 1)));
    const double du = u1 - u0, dv = v1 - v0;
    const double len2 = du * du + dv * dv;
    for (int r = rmin; r <= rmax; ++r) {
        const double py = r + 0.5;
        for (int c = cmin; c <= cmax; ++c) {
            const double px = c + 0.5;
            double t = 0.0;
            if (len2 > 0.0) t = std::clamp(((px - u0) * du + (py - v0) * dv) / len2, 0.0, 1.0);
            const double dx = px - (u0 + t * du);
            const double dy = py - (v0 + t * dv);
            const double d = std::sqrt(dx * dx + dy * dy);
            const double cov = std::clamp(hw + 0.5 - d, 0.0, 1.0);
            if (cov > 0.0) img(r, c) = std::max(img(r, c), cov * brightness);
        }
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (n_frames < 48) throw std::invalid_argument("need at least 48 frames");
    if (gait_period <= 0) throw std::invalid_argument("gait period must be positive");
    if (noise_sigma < 0) throw std::invalid_argument("noise sigma must be nonnegative");
    if (image_h <= 0 || image_w <= 0 || box_size <= 0 || px_per_mm <= 0 || limb_width <= 0) {
        throw std::invalid_argument("image, box and render sizes must be positive");
    }
    skeleton.validate();
    if (skeleton.joint_count != 17) {
        throw std::invalid_argument("generator animates the built-in 17-joint skeleton only");
    }
}

GeneratedSequence gen_sequence(const SynthConfig& cfg) {
    cfg.validate();
    GeneratedSequence out;
    out.manifest.fps = cfg.fps;
    out.manifest.skeleton = cfg.skeleton;
    std::vector<Pose3D> poses;
    std::vector<BoundingBox> boxes;
    out.frames.reserve(cfg.n_frames);

    const double mid = (cfg.n_frames - 1) / 2.0;
    for (int t = 0; t < cfg.n_frames; ++t) {
        const double phi = 2.0 * M_PI * t / cfg.gait_period;
        const Mat3Xd world = apply_yaw(pose_at_phase(phi, cfg.gait_amplitude), cfg.yaw);

        // Root stays on the drift path; path is centered in the image.
        const double cu = cfg.image_w / 2.0 + cfg.drift_u * (t - mid);
        const double cv = cfg.image_h / 2.0 + cfg.drift_v * (t - mid);

        ImageD img = ImageD::Zero(cfg.image_h, cfg.image_w);
        for (int j = 1; j < cfg.skeleton.joint_count; ++j) {
            const int par = cfg.skeleton.parent[j];
            const double u0 = cu + cfg.px_per_mm * world(par, 0);
            const double v0 = cv - cfg.px_per_mm * world(par, 1);
            const double u1 = cu + cfg.px_per_mm * world(j, 0);
            const double v1 = cv - cfg.px_per_mm * world(j, 1);
            const double zmean = 0.5 * (world(par, 2) + world(j, 2));
            const double brightness = std::clamp(0.7 + zmean / 1000.0, 0.4, 1.0);
            const double hw = bone_weight(j) * cfg.limb_width / 2.0;
            draw_capsule(img, u0, v0, u1, v1, hw, brightness);
        }
        if (cfg.noise_sigma > 0) {
            Rng rng(Rng::mix(cfg.seed, 5000 + t));
            for (int r = 0; r < img.rows(); ++r) {
                for (int c = 0; c < img.cols(); ++c) {
                    img(r, c) = std::clamp(img(r, c) + cfg.noise_sigma * rng.normal(), 0.0, 1.0);
                }
            }
        }

        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm", t);
        out.manifest.frame_paths.emplace_back(name);
        out.frames.push_back(std::move(img));
        Pose3D pose;
        pose.coords = world;
        poses.push_back(std::move(pose));
        boxes.push_back(BoundingBox{cu, cv, cfg.box_size, cfg.box_size});
    }
    out.manifest.poses = std::move(poses);
    out.manifest.boxes = std::move(boxes);
    out.manifest.validate();
    return out;
}

SequenceManifest gen_sequence_to_dir(const SynthConfig& cfg, const std::string& dir) {
    GeneratedSequence seq = gen_sequence(cfg);
    std::filesystem::create_directories(dir);
    seq.manifest.base_dir = dir;
    for (int t = 0; t < seq.manifest.size(); ++t) {
        write_pgm(frame_path(seq.manifest, t), seq.frames[t]);
    }
    save_manifest((std::filesystem::path(dir) / "manifest.json").string(), seq.manifest);
    return seq.manifest;
}

JitterResult jitter_boxes(const SequenceManifest& manifest, const JitterConfig& cfg) {
    if (!manifest.boxes) throw std::invalid_argument("manifest has no boxes to jitter");
    if (cfg.max_shift_u < 0 || cfg.max_shift_v < 0) {
        throw std::invalid_argument("jitter ranges must be nonnegative");
    }
    JitterResult out;
    out.manifest = manifest;
    Rng rng(cfg.seed);
    for (auto& box : *out.manifest.boxes) {
        const double du = rng.uniform(-cfg.max_shift_u, cfg.max_shift_u);
        const double dv = rng.uniform(-cfg.max_shift_v, cfg.max_shift_v);
        box.center_u += du;
        box.center_v += dv;
        out.offsets.emplace_back(du, dv);
    }
    return out;
}

}  // namespace rstv
