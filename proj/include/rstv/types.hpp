#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rstv {

// Row-major so image buffers map directly onto (row, col) indexing.
using ImageD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mat3Xd = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Skeleton topology: joint 0 is the root by convention. `parent[root] == root`.
struct SkeletonSpec {
    int joint_count = 0;
    std::vector<std::string> joint_names;
    std::vector<int> parent;
    std::vector<std::pair<int, int>> limbs;

    void validate() const;

    // 17-joint tree (pelvis root, spine/head chain, two arms, two legs).
    static SkeletonSpec default17();
};

// Root-relative 3D joint coordinates in millimeters, one row per joint.
struct Pose3D {
    Mat3Xd coords;

    int joints() const { return static_cast<int>(coords.rows()); }

    // Flattened as [x0,y0,z0, x1,y1,z1, ...].
    Eigen::VectorXd flatten() const;
    static Pose3D unflatten(const Eigen::VectorXd& v);
};

Pose3D root_relativize(const Mat3Xd& absolute_coords, int root_index);

struct BoundingBox {
    double center_u = 0.0;
    double center_v = 0.0;
    int width = 0;
    int height = 0;
};

struct Frame {
    ImageD pixels;
    int index = 0;
};

// One temporal block: member frames [center-T/2+1, center+T/2].
struct VolumeIndex {
    int center = 0;
    int window = 0;

    int first() const { return center - window / 2 + 1; }
    int last() const { return center + window / 2; }
    std::vector<int> members() const;
};

// Sequence description persisted as a single JSON document. Frame paths are
// relative to `base_dir` unless absolute.
struct SequenceManifest {
    double fps = 50.0;
    std::vector<std::string> frame_paths;
    std::optional<std::vector<Pose3D>> poses;
    std::optional<std::vector<BoundingBox>> boxes;
    std::optional<SkeletonSpec> skeleton;
    std::string base_dir;

    int size() const { return static_cast<int>(frame_paths.size()); }
    void validate() const;
};

// Valid block centers for a sequence of `n_frames`: N - T + 1 of them.
std::vector<VolumeIndex> extract_blocks(int n_frames, int window);
std::vector<VolumeIndex> extract_blocks(const SequenceManifest& manifest, int window);

// Dense spatiotemporal stack, data[t*h*w + y*w + x].
struct Volume {
    int t = 0, h = 0, w = 0;
    std::vector<double> data;

    Volume() = default;
    Volume(int t_, int h_, int w_) : t(t_), h(h_), w(w_), data(static_cast<size_t>(t_) * h_ * w_, 0.0) {}

    double& at(int ti, int y, int x) { return data[(static_cast<size_t>(ti) * h + y) * w + x]; }
    double at(int ti, int y, int x) const { return data[(static_cast<size_t>(ti) * h + y) * w + x]; }
    size_t size() const { return data.size(); }
};

}  // namespace rstv
