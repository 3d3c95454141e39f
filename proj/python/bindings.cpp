// Python façade over the core: sequence generation, descriptors, embeddings,
// regression and metrics. Matrices cross the boundary as numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "rstv/eval.hpp"
#include "rstv/hog3d.hpp"
#include "rstv/kernels.hpp"
#include "rstv/manifest.hpp"
#include "rstv/motioncomp.hpp"
#include "rstv/pipeline.hpp"
#include "rstv/regress.hpp"
#include "rstv/synth.hpp"
#include "rstv/types.hpp"

namespace py = pybind11;
using namespace rstv;

namespace {

Volume volume_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw std::invalid_argument("volume must be t x h x w");
    Volume v(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
             static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), v.data.begin());
    return v;
}

}  // namespace

PYBIND11_MODULE(_rstv, m) {
    m.doc() = "3D pose regression from motion-compensated spatiotemporal volumes";

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init<>())
        .def(py::init([](double cu, double cv, int w, int h) {
                 return BoundingBox{cu, cv, w, h};
             }),
             py::arg("center_u"), py::arg("center_v"), py::arg("width"), py::arg("height"))
        .def_readwrite("center_u", &BoundingBox::center_u)
        .def_readwrite("center_v", &BoundingBox::center_v)
        .def_readwrite("width", &BoundingBox::width)
        .def_readwrite("height", &BoundingBox::height);

    py::class_<Pose3D>(m, "Pose3D")
        .def(py::init([](const Eigen::MatrixXd& coords) {
                 if (coords.cols() != 3) throw std::invalid_argument("coords must be J x 3");
                 Pose3D p;
                 p.coords = coords;
                 return p;
             }),
             py::arg("coords"))
        .def_property_readonly("coords", [](const Pose3D& p) -> Eigen::MatrixXd {
            return p.coords;
        })
        .def("flatten", &Pose3D::flatten)
        .def_static("unflatten", &Pose3D::unflatten)
        .def_property_readonly("joints", &Pose3D::joints);

    py::class_<SkeletonSpec>(m, "SkeletonSpec")
        .def_static("default17", &SkeletonSpec::default17)
        .def_readonly("joint_count", &SkeletonSpec::joint_count)
        .def_readonly("joint_names", &SkeletonSpec::joint_names)
        .def_readonly("limbs", &SkeletonSpec::limbs);

    py::class_<SequenceManifest>(m, "SequenceManifest")
        .def_property_readonly("size", &SequenceManifest::size)
        .def_readonly("fps", &SequenceManifest::fps)
        .def_readonly("base_dir", &SequenceManifest::base_dir)
        .def_property_readonly("boxes",
                               [](const SequenceManifest& m) { return m.boxes; })
        .def_property_readonly("poses",
                               [](const SequenceManifest& m) { return m.poses; })
        .def_property_readonly("skeleton",
                               [](const SequenceManifest& m) { return m.skeleton; });

    m.def("gen_sequence_to_dir",
          [](const std::string& dir, int frames, int image_size, int box_size, uint64_t seed) {
              SynthConfig cfg;
              cfg.n_frames = frames;
              cfg.image_h = cfg.image_w = image_size;
              cfg.box_size = box_size;
              cfg.seed = seed;
              return gen_sequence_to_dir(cfg, dir);
          },
          py::arg("dir"), py::arg("frames") = 120, py::arg("image_size") = 128,
          py::arg("box_size") = 64, py::arg("seed") = 1);
    m.def("load_manifest", &load_manifest, py::arg("path"));
    m.def("load_frame",
          [](const SequenceManifest& m, int i) -> Eigen::MatrixXd { return load_frame(m, i); },
          py::arg("manifest"), py::arg("index"));

    py::class_<Hog3DConfig>(m, "Hog3DConfig")
        .def(py::init<>())
        .def_readwrite("spatial_levels", &Hog3DConfig::spatial_levels)
        .def_readwrite("temporal_cell", &Hog3DConfig::temporal_cell)
        .def_readwrite("orientation_bins", &Hog3DConfig::orientation_bins)
        .def("descriptor_length", &Hog3DConfig::descriptor_length);

    m.def("descriptor",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& volume,
             const Hog3DConfig& cfg) {
              Volume v = volume_from_array(volume);
              cfg.validate(v.t, v.h, v.w);
              return descriptor(v, cfg).values;
          },
          py::arg("volume"), py::arg("config") = Hog3DConfig{});

    py::class_<ExpChi2Embedding>(m, "ExpChi2Embedding")
        .def(py::init<int, int, double, uint64_t, int, double>(), py::arg("input_dim"),
             py::arg("dim"), py::arg("gamma"), py::arg("seed"), py::arg("order") = 2,
             py::arg("period") = 0.6)
        .def("embed", &ExpChi2Embedding::embed)
        .def("embed_rows", &ExpChi2Embedding::embed_rows)
        .def_property_readonly("dim", &ExpChi2Embedding::dim);

    py::class_<RBFOutputEmbedding>(m, "RBFOutputEmbedding")
        .def(py::init<int, int, double, uint64_t>(), py::arg("input_dim"), py::arg("dim"),
             py::arg("gamma"), py::arg("seed"))
        .def("embed", &RBFOutputEmbedding::embed)
        .def("embed_rows", &RBFOutputEmbedding::embed_rows)
        .def_property_readonly("dim", &RBFOutputEmbedding::dim);

    m.def("chi2_distance", &chi2_distance);
    m.def("exp_chi2_kernel", &exp_chi2_kernel);

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("kind", &FitConfig::kind)
        .def_readwrite("lambda_", &FitConfig::lambda)
        .def_readwrite("embed_dim", &FitConfig::embed_dim)
        .def_readwrite("out_embed_dim", &FitConfig::out_embed_dim)
        .def_readwrite("seed", &FitConfig::seed);

    py::class_<PoseModel>(m, "PoseModel")
        .def("predict", &PoseModel::predict, py::arg("z"))
        .def("predict_rows", &PoseModel::predict_rows, py::arg("Z"))
        .def_property_readonly("kind", &PoseModel::kind)
        .def_property_readonly("input_dim", &PoseModel::input_dim)
        .def_property_readonly("pose_dim", &PoseModel::pose_dim)
        .def("save", &PoseModel::save, py::arg("path"))
        .def_static("load", &PoseModel::load, py::arg("path"));

    m.def("fit_pose_model", &fit_pose_model, py::arg("Z"), py::arg("Y"),
          py::arg("config") = FitConfig{});

    m.def("mpjpe", &mpjpe, py::arg("pred"), py::arg("gt"));
    m.def("pcp",
          [](const Pose3D& pred, const Pose3D& gt, const SkeletonSpec& skel, double alpha) {
              PcpResult r = pcp(pred, gt, skel, alpha);
              return py::make_tuple(r.overall, r.limb_status, r.skipped);
          },
          py::arg("pred"), py::arg("gt"), py::arg("skeleton"), py::arg("alpha") = 0.5);

    m.def("compensate",
          [](const SequenceManifest& manifest, const std::string& coarse_path,
             const std::string& fine_path) {
              if (!manifest.boxes || manifest.boxes->empty()) {
                  throw std::invalid_argument("manifest has no boxes");
              }
              CnnShiftRegressor coarse = load_shift_regressor(coarse_path);
              CnnShiftRegressor fine = load_shift_regressor(fine_path);
              auto frames = load_frames(manifest);
              CompensationConfig cfg;
              return compensate(frames, (*manifest.boxes)[0], cfg, coarse, fine);
          },
          py::arg("manifest"), py::arg("coarse_path"), py::arg("fine_path"));

    m.def("sequence_descriptors",
          [](const SequenceManifest& manifest, int window, int patch_size) {
              if (!manifest.boxes) throw std::invalid_argument("manifest has no boxes");
              auto frames = load_frames(manifest);
              Hog3DConfig hog;
              return sequence_descriptors(frames, *manifest.boxes, hog, window, patch_size);
          },
          py::arg("manifest"), py::arg("window") = 24, py::arg("patch_size") = 64);
}
