#include "rstv/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "rstv/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rstv {

namespace {

SkeletonSpec skeleton_from_json(const json& j) {
    SkeletonSpec spec;
    spec.joint_count = j.at("joint_count").get<int>();
    spec.parent = j.at("parents").get<std::vector<int>>();
    if (j.contains("joint_names")) spec.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    for (const auto& limb : j.at("limbs")) {
        spec.limbs.emplace_back(limb.at(0).get<int>(), limb.at(1).get<int>());
    }
    spec.validate();
    return spec;
}

json skeleton_to_json(const SkeletonSpec& spec) {
    json j;
    j["joint_count"] = spec.joint_count;
    j["parents"] = spec.parent;
    if (!spec.joint_names.empty()) j["joint_names"] = spec.joint_names;
    json limbs = json::array();
    for (const auto& [a, b] : spec.limbs) limbs.push_back({a, b});
    j["limbs"] = limbs;
    return j;
}

}  // namespace

SequenceManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path);
    json j;
    in >> j;

    SequenceManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    m.fps = j.at("fps").get<double>();
    m.frame_paths = j.at("frames").get<std::vector<std::string>>();

    if (j.contains("poses") && !j["poses"].is_null()) {
        std::vector<Pose3D> poses;
        for (const auto& jp : j["poses"]) {
            Pose3D p;
            p.coords.resize(static_cast<int>(jp.size()), 3);
            for (int r = 0; r < p.coords.rows(); ++r) {
                for (int c = 0; c < 3; ++c) p.coords(r, c) = jp.at(r).at(c).get<double>();
            }
            poses.push_back(std::move(p));
        }
        m.poses = std::move(poses);
    }
    if (j.contains("boxes") && !j["boxes"].is_null()) {
        std::vector<BoundingBox> boxes;
        for (const auto& jb : j["boxes"]) {
            BoundingBox b;
            b.center_u = jb.at(0).get<double>();
            b.center_v = jb.at(1).get<double>();
            b.width = jb.at(2).get<int>();
            b.height = jb.at(3).get<int>();
            boxes.push_back(b);
        }
        m.boxes = std::move(boxes);
    }
    if (j.contains("skeleton") && !j["skeleton"].is_null()) {
        m.skeleton = skeleton_from_json(j["skeleton"]);
    }
    m.validate();
    return m;
}

void save_manifest(const std::string& path, const SequenceManifest& manifest) {
    manifest.validate();
    json j;
    j["fps"] = manifest.fps;
    j["frames"] = manifest.frame_paths;
    if (manifest.poses) {
        json poses = json::array();
        for (const auto& p : *manifest.poses) {
            json jp = json::array();
            for (int r = 0; r < p.coords.rows(); ++r) {
                jp.push_back({p.coords(r, 0), p.coords(r, 1), p.coords(r, 2)});
            }
            poses.push_back(std::move(jp));
        }
        j["poses"] = std::move(poses);
    }
    if (manifest.boxes) {
        json boxes = json::array();
        for (const auto& b : *manifest.boxes) {
            boxes.push_back({b.center_u, b.center_v, b.width, b.height});
        }
        j["boxes"] = std::move(boxes);
    }
    if (manifest.skeleton) j["skeleton"] = skeleton_to_json(*manifest.skeleton);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << j.dump(2) << "\n";
}

std::string frame_path(const SequenceManifest& manifest, int index) {
    if (index < 0 || index >= manifest.size()) throw std::out_of_range("frame index out of range");
    fs::path p(manifest.frame_paths[index]);
    if (p.is_absolute() || manifest.base_dir.empty()) return p.string();
    return (fs::path(manifest.base_dir) / p).string();
}

ImageD load_frame(const SequenceManifest& manifest, int index) {
    return read_image(frame_path(manifest, index));
}

std::vector<ImageD> load_frames(const SequenceManifest& manifest) {
    std::vector<ImageD> frames;
    frames.reserve(manifest.size());
    for (int i = 0; i < manifest.size(); ++i) frames.push_back(load_frame(manifest, i));
    return frames;
}

}  // namespace rstv
