#pragma once

#include <string>
#include <vector>

#include "rstv/types.hpp"

namespace rstv {

// Reads a sequence manifest; relative frame paths resolve against the
// manifest's directory.
SequenceManifest load_manifest(const std::string& path);

void save_manifest(const std::string& path, const SequenceManifest& manifest);

// Absolute (or base-dir-joined) path of frame `index`.
std::string frame_path(const SequenceManifest& manifest, int index);

ImageD load_frame(const SequenceManifest& manifest, int index);
std::vector<ImageD> load_frames(const SequenceManifest& manifest);

}  // namespace rstv
