#pragma once

#include <cstdint>
#include <utility>

#include "rstv/types.hpp"

namespace rstv {

// Synthetic articulated walker: a 17-joint stick figure animated by a
// sinusoidal gait, orthographically projected with depth-driven limb
// brightness. Stands in for motion-capture footage at desk scale.
struct SynthConfig {
    int image_h = 128;
    int image_w = 128;
    int n_frames = 120;
    double fps = 50.0;
    SkeletonSpec skeleton = SkeletonSpec::default17();
    double gait_amplitude = 0.6;  // radians
    double gait_period = 40.0;    // frames per cycle
    double drift_u = 0.6;         // px/frame, path is centered in the image
    double drift_v = 0.2;
    double limb_width = 2.0;      // px stroke width of rendered bones
    double noise_sigma = 0.01;
    double px_per_mm = 0.034;
    double yaw = 0.5;             // fixed heading, breaks mirror ambiguity
    int box_size = 64;
    uint64_t seed = 1;

    void validate() const;
};

struct GeneratedSequence {
    SequenceManifest manifest;  // poses, ground-truth boxes and skeleton attached
    std::vector<ImageD> frames;
};

GeneratedSequence gen_sequence(const SynthConfig& cfg);

// Renders dir/frame_%05d.pgm plus dir/manifest.json. Returned manifest has
// base_dir set so frames can be loaded back.
SequenceManifest gen_sequence_to_dir(const SynthConfig& cfg, const std::string& dir);

struct JitterConfig {
    double max_shift_u = 0.0;
    double max_shift_v = 0.0;
    uint64_t seed = 1;
};

struct JitterResult {
    SequenceManifest manifest;                       // boxes displaced
    std::vector<std::pair<double, double>> offsets;  // displacement added per box
};

// Displaces every box center by independent uniform draws in
// [-max_shift, +max_shift] per axis. Subtracting offsets[i] from the jittered
// center recovers the original box.
JitterResult jitter_boxes(const SequenceManifest& manifest, const JitterConfig& cfg);

}  // namespace rstv
