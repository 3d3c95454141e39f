#pragma once

#include <cstdint>
#include <string>

#include "rstv/hog3d.hpp"
#include "rstv/motioncomp.hpp"
#include "rstv/regress.hpp"

namespace rstv {

// Everything a full run needs, serializable to one JSON document so a report
// can embed the exact configuration that produced it.
struct PipelineConfig {
    int window = 24;      // temporal extent T
    int patch_size = 64;
    double jitter = 12.0;  // box perturbation for ablations, px per axis
    int threads = 1;
    uint64_t seed = 1;
    Hog3DConfig hog;
    CompensationConfig comp;
    FitConfig fit = desk_fit();

    // Cross-module consistency: spatial levels divide the patch, temporal
    // cell divides the window, compensation patch matches.
    void validate() const;

    // Paper-scale dims: 15000/4000 embeddings, 3000-wide network layers.
    PipelineConfig paper_dims() const;

    // Default profile runs in minutes on one core; dims follow suit.
    static FitConfig desk_fit() {
        FitConfig f;
        f.dn.hidden = 512;
        return f;
    }
};

// Partial documents are fine: absent keys keep their defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text);

// Canonical dump (sorted keys, every field resolved); hashing input.
std::string dump_pipeline_config(const PipelineConfig& cfg);

PipelineConfig load_pipeline_config(const std::string& path);
void save_pipeline_config(const std::string& path, const PipelineConfig& cfg);

// FNV-1a 64 over the canonical dump; stamped into output file names.
uint64_t config_hash(const PipelineConfig& cfg);
std::string hash_hex(uint64_t h);

}  // namespace rstv
