#include "rstv/types.hpp"

namespace rstv {

void SkeletonSpec::validate() const {
    if (joint_count < 2) throw std::invalid_argument("skeleton needs at least 2 joints");
    if (static_cast<int>(parent.size()) != joint_count ||
        static_cast<int>(joint_names.size()) != joint_count) {
        throw std::invalid_argument("skeleton arrays must match joint_count");
    }
    int roots = 0;
    for (int j = 0; j < joint_count; ++j) {
        if (parent[j] < 0 || parent[j] >= joint_count) {
            throw std::invalid_argument("skeleton parent index out of range");
        }
        if (parent[j] == j) ++roots;
    }
    if (roots != 1) throw std::invalid_argument("skeleton must have exactly one root");
    // Acyclic check: walking up from any joint must reach the root.
    for (int j = 0; j < joint_count; ++j) {
        int cur = j;
        for (int steps = 0; parent[cur] != cur; ++steps) {
            if (steps > joint_count) throw std::invalid_argument("skeleton parent array has a cycle");
            cur = parent[cur];
        }
    }
    for (const auto& [a, b] : limbs) {
        if (a < 0 || a >= joint_count || b < 0 || b >= joint_count) {
            throw std::invalid_argument("limb references invalid joint");
        }
    }
}

SkeletonSpec SkeletonSpec::default17() {
    SkeletonSpec s;
    s.joint_count = 17;
    s.joint_names = {"pelvis", "spine",   "neck",    "head",    "l_shoulder", "l_elbow",
                     "l_wrist", "r_shoulder", "r_elbow", "r_wrist", "l_hip",  "l_knee",
                     "l_ankle", "r_hip",  "r_knee",  "r_ankle", "head_top"};
    s.parent = {0, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14, 3};
    s.limbs = {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}, {7, 8}, {8, 9}, {10, 11}, {11, 12}, {13, 14}, {14, 15}};
    s.validate();
    return s;
}

Eigen::VectorXd Pose3D::flatten() const {
    Eigen::VectorXd v(coords.size());
    for (int j = 0; j < coords.rows(); ++j) {
        v[3 * j + 0] = coords(j, 0);
        v[3 * j + 1] = coords(j, 1);
        v[3 * j + 2] = coords(j, 2);
    }
    return v;
}

Pose3D Pose3D::unflatten(const Eigen::VectorXd& v) {
    if (v.size() % 3 != 0) throw std::invalid_argument("flattened pose length must be divisible by 3");
    Pose3D p;
    p.coords.resize(v.size() / 3, 3);
    for (int j = 0; j < p.coords.rows(); ++j) {
        p.coords(j, 0) = v[3 * j + 0];
        p.coords(j, 1) = v[3 * j + 1];
        p.coords(j, 2) = v[3 * j + 2];
    }
    return p;
}

Pose3D root_relativize(const Mat3Xd& absolute_coords, int root_index) {
    if (root_index < 0 || root_index >= absolute_coords.rows()) {
        throw std::invalid_argument("root index out of range");
    }
    Pose3D p;
    p.coords = absolute_coords;
    Eigen::RowVector3d root = absolute_coords.row(root_index);
    p.coords.rowwise() -= root;
    return p;
}

std::vector<int> VolumeIndex::members() const {
    std::vector<int> m;
    m.reserve(window);
    for (int i = first(); i <= last(); ++i) m.push_back(i);
    return m;
}

void SequenceManifest::validate() const {
    if (poses && static_cast<int>(poses->size()) != size()) {
        throw std::invalid_argument("manifest poses length mismatch");
    }
    if (boxes && static_cast<int>(boxes->size()) != size()) {
        throw std::invalid_argument("manifest boxes length mismatch");
    }
}

std::vector<VolumeIndex> extract_blocks(int n_frames, int window) {
    if (window <= 0 || window % 2 != 0) {
        throw std::invalid_argument("temporal window must be a positive even number");
    }
    if (window > n_frames) {
        throw std::invalid_argument("temporal window exceeds sequence length");
    }
    std::vector<VolumeIndex> blocks;
    blocks.reserve(n_frames - window + 1);
    for (int c = window / 2 - 1; c + window / 2 <= n_frames - 1; ++c) {
        blocks.push_back(VolumeIndex{c, window});
    }
    return blocks;
}

std::vector<VolumeIndex> extract_blocks(const SequenceManifest& manifest, int window) {
    return extract_blocks(manifest.size(), window);
}

}  // namespace rstv
