#pragma once

#include <utility>

#include "rstv/types.hpp"

namespace rstv {

struct Hog3DConfig {
    std::vector<int> spatial_levels = {2, 4, 8};
    int temporal_cell = 4;     // frames per temporal cell
    int orientation_bins = 10; // 6 or 10
    double epsilon = 1e-6;

    // Throws unless every spatial level divides the (square) patch side and
    // the temporal cell divides the volume length.
    void validate(int t, int h, int w) const;
    int descriptor_length(int t) const;
};

struct VolumeGradients {
    Volume gx, gy, gt;
};

// Central differences on interior samples, one-sided at boundaries.
VolumeGradients gradients3d(const Volume& v);

// Fixed unit axes with antipodal folding. Axis 0 is exactly (1,0,0).
const std::vector<Eigen::Vector3d>& orientation_axes(int bins);

// Hard assignment: bin maximizing |unit(g) . axis_b|. Zero gradient votes
// nothing (magnitude 0, bin 0).
std::pair<int, double> quantize_orientation(const Eigen::Vector3d& g, int bins);

// Magnitude-weighted votes over [t0,t1) x [y0,y1) x [x0,x1).
Eigen::VectorXd cell_histogram(const VolumeGradients& g, int bins, int t0, int t1, int y0,
                               int y1, int x0, int x1);

struct Descriptor {
    Eigen::VectorXd values;
    VolumeIndex source;
};

// Multi-scale concatenation, per-cell L2 normalized: for each level s the
// volume is split into s*s*(T/tau) cells, ordered t-major then row then
// column with bins innermost.
Descriptor descriptor(const Volume& v, const Hog3DConfig& cfg, const VolumeIndex& source = {});

}  // namespace rstv
