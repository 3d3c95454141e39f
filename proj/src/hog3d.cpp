#include "rstv/hog3d.hpp"

#include <cmath>

namespace rstv {

namespace {

// Rodrigues rotation taking unit vector `from` onto (1,0,0), applied to v.
Eigen::Vector3d rotate_to_x(const Eigen::Vector3d& from, const Eigen::Vector3d& v) {
    const Eigen::Vector3d e1(1, 0, 0);
    Eigen::Vector3d k = from.cross(e1);
    const double s = k.norm();
    const double c = from.dot(e1);
    if (s < 1e-12) return c > 0 ? v : -v;
    k /= s;
    return v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
}

std::vector<Eigen::Vector3d> build_axes(int bins) {
    const double f = (std::sqrt(5.0) - 1.0) / 2.0;  // 1/golden ratio
    const double F = (std::sqrt(5.0) + 1.0) / 2.0;
    std::vector<Eigen::Vector3d> raw;
    if (bins == 10) {
        // Dodecahedron vertices, one per antipodal pair.
        raw = {{1, 1, 1},  {1, 1, -1}, {1, -1, 1}, {1, -1, -1}, {0, f, F},
               {0, f, -F}, {f, F, 0},  {f, -F, 0}, {F, 0, f},   {F, 0, -f}};
    } else if (bins == 6) {
        // Icosahedron vertices, one per antipodal pair.
        raw = {{0, 1, F}, {0, 1, -F}, {1, F, 0}, {1, -F, 0}, {F, 0, 1}, {F, 0, -1}};
    } else {
        throw std::invalid_argument("orientation bins must be 6 or 10");
    }
    for (auto& a : raw) a.normalize();
    // Rotate the whole set so axis 0 lands on +x, then snap rounding dust.
    const Eigen::Vector3d anchor = raw[0];
    std::vector<Eigen::Vector3d> axes;
    axes.reserve(raw.size());
    for (const auto& a : raw) {
        Eigen::Vector3d r = rotate_to_x(anchor, a);
        for (int i = 0; i < 3; ++i) {
            if (std::abs(r[i]) < 1e-12) r[i] = 0.0;
        }
        r.normalize();
        axes.push_back(r);
    }
    return axes;
}

}  // namespace

const std::vector<Eigen::Vector3d>& orientation_axes(int bins) {
    static const std::vector<Eigen::Vector3d> ten = build_axes(10);
    static const std::vector<Eigen::Vector3d> six = build_axes(6);
    if (bins == 10) return ten;
    if (bins == 6) return six;
    throw std::invalid_argument("orientation bins must be 6 or 10");
}

std::pair<int, double> quantize_orientation(const Eigen::Vector3d& g, int bins) {
    const double mag = g.norm();
    if (mag == 0.0) return {0, 0.0};
    const auto& axes = orientation_axes(bins);
    const Eigen::Vector3d u = g / mag;
    int best = 0;
    double best_dot = -1.0;
    for (int b = 0; b < bins; ++b) {
        const double d = std::abs(u.dot(axes[b]));
        if (d > best_dot) {
            best_dot = d;
            best = b;
        }
    }
    return {best, mag};
}

VolumeGradients gradients3d(const Volume& v) {
    if (v.t < 3 || v.h < 3 || v.w < 3) throw std::invalid_argument("volume too small for gradients");
    VolumeGradients g{Volume(v.t, v.h, v.w), Volume(v.t, v.h, v.w), Volume(v.t, v.h, v.w)};
    auto diff = [](double prev, double next, bool interior) {
        return interior ? 0.5 * (next - prev) : next - prev;
    };
    for (int t = 0; t < v.t; ++t) {
        for (int y = 0; y < v.h; ++y) {
            for (int x = 0; x < v.w; ++x) {
                const int xm = std::max(x - 1, 0), xp = std::min(x + 1, v.w - 1);
                const int ym = std::max(y - 1, 0), yp = std::min(y + 1, v.h - 1);
                const int tm = std::max(t - 1, 0), tp = std::min(t + 1, v.t - 1);
                g.gx.at(t, y, x) = diff(v.at(t, y, xm), v.at(t, y, xp), x > 0 && x < v.w - 1);
                g.gy.at(t, y, x) = diff(v.at(t, ym, x), v.at(t, yp, x), y > 0 && y < v.h - 1);
                g.gt.at(t, y, x) = diff(v.at(tm, y, x), v.at(tp, y, x), t > 0 && t < v.t - 1);
            }
        }
    }
    return g;
}

Eigen::VectorXd cell_histogram(const VolumeGradients& g, int bins, int t0, int t1, int y0,
                               int y1, int x0, int x1) {
    if (t0 >= t1 || y0 >= y1 || x0 >= x1) throw std::invalid_argument("empty cell");
    if (t0 < 0 || y0 < 0 || x0 < 0 || t1 > g.gx.t || y1 > g.gx.h || x1 > g.gx.w) {
        throw std::invalid_argument("cell outside volume");
    }
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(bins);
    for (int t = t0; t < t1; ++t) {
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const Eigen::Vector3d grad(g.gx.at(t, y, x), g.gy.at(t, y, x), g.gt.at(t, y, x));
                const auto [bin, mag] = quantize_orientation(grad, bins);
                hist[bin] += mag;
            }
        }
    }
    return hist;
}

void Hog3DConfig::validate(int t, int h, int w) const {
    if (h != w) throw std::invalid_argument("patch must be square");
    if (spatial_levels.empty()) throw std::invalid_argument("need at least one spatial level");
    for (int s : spatial_levels) {
        if (s <= 0 || h % s != 0) throw std::invalid_argument("spatial level must divide patch side");
    }
    if (temporal_cell <= 0 || t % temporal_cell != 0) {
        throw std::invalid_argument("temporal cell must divide volume length");
    }
    if (orientation_bins != 6 && orientation_bins != 10) {
        throw std::invalid_argument("orientation bins must be 6 or 10");
    }
    if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
}

int Hog3DConfig::descriptor_length(int t) const {
    int cells = 0;
    for (int s : spatial_levels) cells += s * s;
    return cells * (t / temporal_cell) * orientation_bins;
}

Descriptor descriptor(const Volume& v, const Hog3DConfig& cfg, const VolumeIndex& source) {
    cfg.validate(v.t, v.h, v.w);
    const VolumeGradients grads = gradients3d(v);
    const int bins = cfg.orientation_bins;
    const int tcells = v.t / cfg.temporal_cell;

    Descriptor d;
    d.source = source;
    d.values.resize(cfg.descriptor_length(v.t));
    int pos = 0;
    for (int s : cfg.spatial_levels) {
        const int cy = v.h / s;
        const int cx = v.w / s;
        for (int tc = 0; tc < tcells; ++tc) {
            for (int ry = 0; ry < s; ++ry) {
                for (int rx = 0; rx < s; ++rx) {
                    Eigen::VectorXd hist =
                        cell_histogram(grads, bins, tc * cfg.temporal_cell,
                                       (tc + 1) * cfg.temporal_cell, ry * cy, (ry + 1) * cy,
                                       rx * cx, (rx + 1) * cx);
                    hist /= std::sqrt(hist.squaredNorm() + cfg.epsilon * cfg.epsilon);
                    d.values.segment(pos, bins) = hist;
                    pos += bins;
                }
            }
        }
    }
    return d;
}

}  // namespace rstv
