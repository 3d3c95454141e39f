#include "rstv/motioncomp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "rstv/manifest.hpp"
#include "rstv/patch.hpp"
#include "rstv/rng.hpp"

namespace rstv {

namespace {

Eigen::VectorXd flatten_patch(const ImageD& patch, int expected) {
    if (patch.rows() != expected || patch.cols() != expected) {
        throw std::invalid_argument("patch size mismatch");
    }
    // ImageD is row-major, so the raw buffer already matches (c, y, x) order.
    return Eigen::Map<const Eigen::VectorXd>(patch.data(), patch.size());
}

}  // namespace

CnnShiftRegressor::CnnShiftRegressor(nnet::Network net, double range, std::string kind, int patch)
    : net_(std::move(net)), range_(range), kind_(std::move(kind)), patch_(patch) {
    if (patch_ <= 0) throw std::invalid_argument("patch size must be positive");
    if (!(range_ > 0.0) || !std::isfinite(range_)) {
        throw std::invalid_argument("range must be positive and finite");
    }
    if (net_.input_dim() != patch_ * patch_) {
        throw std::invalid_argument("network input does not match patch size");
    }
    if (net_.output_dim() != 2) throw std::invalid_argument("shift network must output 2 values");
}

Shift CnnShiftRegressor::predict(const ImageD& patch) const {
    Eigen::VectorXd out = net_.forward(flatten_patch(patch, patch_));
    return Shift{out(0) * range_, out(1) * range_};
}

Shift CentroidShiftRegressor::predict(const ImageD& patch) const {
    if (patch.rows() != patch_ || patch.cols() != patch_) {
        throw std::invalid_argument("patch size mismatch");
    }
    const int h = patch_, w = patch_;
    double mass = 0.0, su = 0.0, sv = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double gx = (c == 0)       ? patch(r, 1) - patch(r, 0)
                        : (c == w - 1) ? patch(r, w - 1) - patch(r, w - 2)
                                       : 0.5 * (patch(r, c + 1) - patch(r, c - 1));
            double gy = (r == 0)       ? patch(1, c) - patch(0, c)
                        : (r == h - 1) ? patch(h - 1, c) - patch(h - 2, c)
                                       : 0.5 * (patch(r + 1, c) - patch(r - 1, c));
            double m = std::sqrt(gx * gx + gy * gy);
            mass += m;
            su += m * (c + 0.5);
            sv += m * (r + 0.5);
        }
    }
    if (mass <= 0.0) return Shift{0.0, 0.0};
    return Shift{su / mass - 0.5 * w, sv / mass - 0.5 * h};
}

void CompensationConfig::validate() const {
    if (max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
    if (coarse_iters < 0 || coarse_iters > max_iter) {
        throw std::invalid_argument("coarse_iters must lie in [0, max_iter]");
    }
    if (!(coarse_range > 0.0) || !(fine_range > 0.0)) {
        throw std::invalid_argument("shift ranges must be positive");
    }
    if (patch_size <= 0) throw std::invalid_argument("patch size must be positive");
}

std::vector<ShiftSample> make_shift_training_set(const std::vector<ImageD>& frames,
                                                 const std::vector<BoundingBox>& gt_boxes,
                                                 double range, int n_per_frame, uint64_t seed,
                                                 int patch_size) {
    if (gt_boxes.empty()) throw std::invalid_argument("ground-truth boxes required");
    if (gt_boxes.size() != frames.size()) throw std::invalid_argument("one box per frame required");
    if (range < 0.0) throw std::invalid_argument("range must be nonnegative");
    if (n_per_frame <= 0) throw std::invalid_argument("n_per_frame must be positive");
    if (patch_size <= 0) throw std::invalid_argument("patch size must be positive");

    Rng rng(seed);
    std::vector<ShiftSample> set;
    set.reserve(frames.size() * static_cast<size_t>(n_per_frame));
    for (size_t t = 0; t < frames.size(); ++t) {
        for (int k = 0; k < n_per_frame; ++k) {
            double du = range > 0.0 ? rng.uniform(-range, range) : 0.0;
            double dv = range > 0.0 ? rng.uniform(-range, range) : 0.0;
            // Displace the crop window opposite the label: the subject then
            // sits at (du, dv) from the patch center.
            BoundingBox box = gt_boxes[t];
            box.center_u -= du;
            box.center_v -= dv;
            set.push_back({crop_patch(frames[t], box, patch_size, patch_size), Shift{du, dv}});
        }
    }
    return set;
}

std::vector<ShiftSample> make_shift_training_set(const SequenceManifest& manifest, double range,
                                                 int n_per_frame, uint64_t seed, int patch_size) {
    if (!manifest.boxes) throw std::invalid_argument("manifest has no boxes");
    return make_shift_training_set(load_frames(manifest), *manifest.boxes, range, n_per_frame,
                                   seed, patch_size);
}

CnnShiftRegressor train_shift_regressor(const std::vector<ShiftSample>& samples,
                                        const std::string& kind, uint64_t seed,
                                        const ShiftTrainConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("empty training set");
    if (kind != "coarse" && kind != "fine") throw std::invalid_argument("kind must be coarse or fine");
    const int p = static_cast<int>(samples[0].patch.rows());
    if (samples[0].patch.cols() != p) throw std::invalid_argument("patches must be square");

    double range = 0.0;
    for (const auto& s : samples) {
        range = std::max({range, std::abs(s.label.du), std::abs(s.label.dv)});
    }
    if (range == 0.0) range = 1.0;

    const int n = static_cast<int>(samples.size());
    Eigen::MatrixXd X(n, p * p), Y(n, 2);
    for (int i = 0; i < n; ++i) {
        X.row(i) = flatten_patch(samples[i].patch, p).transpose();
        Y(i, 0) = samples[i].label.du / range;
        Y(i, 1) = samples[i].label.dv / range;
    }

    auto after_conv = [](int s, int k) { return s - k + 1; };
    auto after_pool = [](int s) { return (s - 2) / 2 + 1; };
    int s = after_pool(after_conv(after_pool(after_conv(after_conv(p, 5), 5)), 3));
    if (s <= 0) throw std::invalid_argument("patch too small for shift network");

    using nnet::LayerSpec;
    nnet::Network net({1, p, p},
                      {LayerSpec::conv2d(1, 8, 5), LayerSpec::relu(),
                       LayerSpec::conv2d(8, 16, 5), LayerSpec::relu(), LayerSpec::maxpool2d(),
                       LayerSpec::conv2d(16, 32, 3), LayerSpec::relu(), LayerSpec::maxpool2d(),
                       LayerSpec::dense(32 * s * s, 256), LayerSpec::relu(),
                       LayerSpec::dense(256, 2)},
                      seed);

    nnet::AdamState state;
    state.lr = cfg.lr;
    nnet::train(net, X, Y, cfg.epochs, cfg.batch, state);
    return CnnShiftRegressor(std::move(net), range, kind, p);
}

std::vector<BoundingBox> compensate(const std::vector<ImageD>& frames, const BoundingBox& init_box,
                                    const CompensationConfig& cfg, const ShiftRegressor& coarse,
                                    const ShiftRegressor& fine) {
    cfg.validate();
    if (frames.empty()) throw std::invalid_argument("no frames");
    if (init_box.width <= 0 || init_box.height <= 0) throw std::invalid_argument("bad init box");

    const double W = static_cast<double>(frames[0].cols());
    const double H = static_cast<double>(frames[0].rows());

    std::vector<BoundingBox> refined;
    refined.reserve(frames.size());
    double cu = init_box.center_u;
    double cv = init_box.center_v;
    for (size_t t = 0; t < frames.size(); ++t) {
        for (int o = 1; o <= cfg.max_iter; ++o) {
            const ShiftRegressor& reg = o <= cfg.coarse_iters ? coarse : fine;
            BoundingBox box{cu, cv, init_box.width, init_box.height};
            ImageD patch = crop_patch(frames[t], box, cfg.patch_size, cfg.patch_size);
            Shift sh = reg.predict_at(patch, static_cast<int>(t), cu, cv);
            cu = std::clamp(cu + sh.du, 0.0, W);
            cv = std::clamp(cv + sh.dv, 0.0, H);
        }
        refined.push_back(BoundingBox{cu, cv, init_box.width, init_box.height});
    }
    return refined;
}

RSTV build_rstv(const std::vector<ImageD>& frames, const std::vector<BoundingBox>& refined_boxes,
                const VolumeIndex& index, int patch_size) {
    RSTV out;
    out.patches = stack_patches(frames, refined_boxes, index, patch_size);
    out.center = index;
    out.boxes.assign(refined_boxes.begin() + index.first(),
                     refined_boxes.begin() + index.last() + 1);
    return out;
}

void save_shift_regressor(const std::string& path, const CnnShiftRegressor& reg) {
    reg.net().save(path);
    nlohmann::json j{{"kind", reg.kind()}, {"range", reg.range()}, {"patch", reg.patch_size()}};
    std::ofstream out(path + ".json");
    if (!out) throw std::runtime_error("cannot write " + path + ".json");
    out << j.dump(2) << "\n";
}

CnnShiftRegressor load_shift_regressor(const std::string& path) {
    std::ifstream in(path + ".json");
    if (!in) throw std::runtime_error("cannot read " + path + ".json");
    nlohmann::json j = nlohmann::json::parse(in);
    return CnnShiftRegressor(nnet::Network::load(path), j.at("range"), j.at("kind"),
                             j.at("patch"));
}

}  // namespace rstv
