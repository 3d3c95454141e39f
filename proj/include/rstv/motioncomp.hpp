#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rstv/nnet.hpp"
#include "rstv/types.hpp"

namespace rstv {

// Subject offset from the patch center, in pixels. Adding it to the patch
// center lands on the subject.
struct Shift {
    double du = 0.0;
    double dv = 0.0;
};

class ShiftRegressor {
public:
    virtual ~ShiftRegressor() = default;

    virtual Shift predict(const ImageD& patch) const = 0;

    // Context hook: default ignores position, test oracles override it to
    // return the exact residual at (cu, cv).
    virtual Shift predict_at(const ImageD& patch, int frame_index, double cu, double cv) const {
        (void)frame_index;
        (void)cu;
        (void)cv;
        return predict(patch);
    }

    virtual int patch_size() const = 0;
};

// CNN regressor. Labels were scaled to [-1,1] by `range` at training time, so
// predict() multiplies the net output back.
class CnnShiftRegressor : public ShiftRegressor {
public:
    CnnShiftRegressor(nnet::Network net, double range, std::string kind, int patch);

    Shift predict(const ImageD& patch) const override;
    int patch_size() const override { return patch_; }

    const nnet::Network& net() const { return net_; }
    nnet::Network& net() { return net_; }
    double range() const { return range_; }
    const std::string& kind() const { return kind_; }

private:
    nnet::Network net_;
    double range_ = 1.0;
    std::string kind_;
    int patch_ = 64;
};

// Cheap fallback: gradient-magnitude centroid minus patch center. Zero
// gradient mass predicts (0,0).
class CentroidShiftRegressor : public ShiftRegressor {
public:
    explicit CentroidShiftRegressor(int patch) : patch_(patch) {}

    Shift predict(const ImageD& patch) const override;
    int patch_size() const override { return patch_; }

private:
    int patch_ = 64;
};

struct CompensationConfig {
    int max_iter = 4;
    int coarse_iters = 2;
    double coarse_range = 16.0;
    double fine_range = 4.0;
    int patch_size = 64;

    void validate() const;
};

// Aligned patch stack plus the refined per-frame boxes it was cropped at.
struct RSTV {
    Volume patches;
    std::vector<BoundingBox> boxes;
    VolumeIndex center;
};

struct ShiftSample {
    ImageD patch;
    Shift label;
};

// Patches cropped at ground-truth boxes displaced by uniform shifts in
// [-range, range]; the label is the displacement, i.e. where the subject sits
// relative to the patch center.
std::vector<ShiftSample> make_shift_training_set(const std::vector<ImageD>& frames,
                                                 const std::vector<BoundingBox>& gt_boxes,
                                                 double range, int n_per_frame, uint64_t seed,
                                                 int patch_size = 64);
std::vector<ShiftSample> make_shift_training_set(const SequenceManifest& manifest, double range,
                                                 int n_per_frame, uint64_t seed,
                                                 int patch_size = 64);

struct ShiftTrainConfig {
    int epochs = 8;
    int batch = 32;
    double lr = 1e-3;
};

// conv(8,5x5)-relu-conv(16,5x5)-relu-pool-conv(32,3x3)-relu-pool-dense(256)-relu-dense(2),
// no pooling after the first conv. `kind` is recorded for serialization only;
// coarse and fine share the topology and differ in training range.
CnnShiftRegressor train_shift_regressor(const std::vector<ShiftSample>& samples,
                                        const std::string& kind, uint64_t seed,
                                        const ShiftTrainConfig& cfg = {});

// Per-frame refinement: frame 0 starts from init_box, each later frame from
// the previous refined center; coarse_iters coarse steps then fine ones, each
// re-cropping at the current center. Centers clamp to frame bounds.
std::vector<BoundingBox> compensate(const std::vector<ImageD>& frames, const BoundingBox& init_box,
                                    const CompensationConfig& cfg, const ShiftRegressor& coarse,
                                    const ShiftRegressor& fine);

RSTV build_rstv(const std::vector<ImageD>& frames, const std::vector<BoundingBox>& refined_boxes,
                const VolumeIndex& index, int patch_size);

// Model file via nnet::Network::save plus a "<path>.json" sidecar with
// {kind, range, patch}.
void save_shift_regressor(const std::string& path, const CnnShiftRegressor& reg);
CnnShiftRegressor load_shift_regressor(const std::string& path);

}  // namespace rstv
