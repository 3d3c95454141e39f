#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rstv/hog3d.hpp"
#include "rstv/motioncomp.hpp"
#include "rstv/pipeline.hpp"
#include "rstv/regress.hpp"
#include "rstv/types.hpp"

namespace rstv {

// Mean over joints of the Euclidean distance, millimeters.
double mpjpe(const Pose3D& pred, const Pose3D& gt);

struct PcpResult {
    std::vector<int> limb_status;  // 1 correct, 0 wrong, -1 skipped (zero-length limb)
    double overall = 0.0;          // fraction of scored limbs
    int skipped = 0;
};

// A limb counts when both endpoint errors stay within alpha times its
// ground-truth length, boundary inclusive.
PcpResult pcp(const Pose3D& pred, const Pose3D& gt, const SkeletonSpec& skel, double alpha = 0.5);

struct PcpAggregate {
    std::vector<double> per_limb;  // correct fraction per limb across frames scoring it
    double overall = 0.0;
    int skipped = 0;  // limb-frame pairs skipped
};

struct EvalReport {
    int window = 0;
    std::vector<int> centers;
    std::vector<double> per_frame;  // MPJPE per evaluated block center, mm
    double mean = 0.0;
    double stddev = 0.0;  // population
    int excluded = 0;     // frames with no centered block
    std::optional<PcpAggregate> pcp;
};

// Descriptor rows for every block of the sequence at fixed per-frame boxes,
// ordered by center. Parallel over blocks.
Eigen::MatrixXd sequence_descriptors(const std::vector<ImageD>& frames,
                                     const std::vector<BoundingBox>& boxes,
                                     const Hog3DConfig& hog, int window, int patch_size,
                                     int threads = 1);

EvalReport evaluate(const PoseModel& model, const std::vector<ImageD>& frames,
                    const std::vector<BoundingBox>& boxes, const std::vector<Pose3D>& gt,
                    const PipelineConfig& cfg, bool with_pcp = false,
                    const SkeletonSpec* skeleton = nullptr, double pcp_alpha = 0.5);

struct AblationRow {
    std::string variant;    // STV | RSTV
    std::string regressor;  // krr | dn
    double mpjpe = 0.0;
};

// Trains and scores each variant x regressor pair on a temporal split of one
// sequence (first half fits, second half scores). STV uses independently
// jittered per-frame boxes as-is; RSTV re-centers them from a jittered
// first-frame box via the compensation loop. Identical seeds throughout.
std::vector<AblationRow> ablate_motion(const SequenceManifest& manifest,
                                       const std::vector<ImageD>& frames,
                                       const ShiftRegressor& coarse, const ShiftRegressor& fine,
                                       const PipelineConfig& cfg);

struct SweepRow {
    int window = 0;
    double mpjpe = 0.0;
};

// KRR on ground-truth boxes for each window size; isolates the temporal
// extent of the volume. Rows come back sorted by window.
std::vector<SweepRow> sweep_window(const SequenceManifest& manifest,
                                   const std::vector<ImageD>& frames,
                                   const std::vector<int>& windows, const PipelineConfig& cfg);

// CSV with a header row, floats printed with 2 decimals.
void write_eval_csv(const std::string& path, const EvalReport& report);
void write_eval_json(const std::string& path, const EvalReport& report,
                     const std::string& config_json, uint64_t config_hash);
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace rstv
