#include "rstv/patch.hpp"

#include <cmath>

namespace rstv {

double sample_bilinear(const ImageD& img, double u, double v) {
    const double x = u - 0.5;
    const double y = v - 0.5;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const int rows = static_cast<int>(img.rows());
    const int cols = static_cast<int>(img.cols());

    auto px = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) return 0.0;
        return img(yy, xx);
    };

    return (1.0 - fy) * ((1.0 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
           fy * ((1.0 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

ImageD crop_patch(const ImageD& frame, const BoundingBox& box, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("crop output size must be positive");
    if (box.width <= 0 || box.height <= 0) throw std::invalid_argument("bounding box must have positive size");

    ImageD out(out_h, out_w);
    const double u0 = box.center_u - box.width / 2.0;
    const double v0 = box.center_v - box.height / 2.0;
    const double su = static_cast<double>(box.width) / out_w;
    const double sv = static_cast<double>(box.height) / out_h;
    for (int r = 0; r < out_h; ++r) {
        const double v = v0 + (r + 0.5) * sv;
        for (int c = 0; c < out_w; ++c) {
            const double u = u0 + (c + 0.5) * su;
            out(r, c) = sample_bilinear(frame, u, v);
        }
    }
    return out;
}

Volume stack_patches(const std::vector<ImageD>& frames, const std::vector<BoundingBox>& boxes,
                     const VolumeIndex& block, int patch_size) {
    if (block.first() < 0 || block.last() >= static_cast<int>(frames.size())) {
        throw std::invalid_argument("block members outside sequence");
    }
    if (boxes.size() != frames.size()) throw std::invalid_argument("one box per frame required");

    Volume vol(block.window, patch_size, patch_size);
    int ti = 0;
    for (int i = block.first(); i <= block.last(); ++i, ++ti) {
        ImageD p = crop_patch(frames[i], boxes[i], patch_size, patch_size);
        for (int y = 0; y < patch_size; ++y) {
            for (int x = 0; x < patch_size; ++x) {
                vol.at(ti, y, x) = p(y, x);
            }
        }
    }
    return vol;
}

}  // namespace rstv
