#pragma once

#include "rstv/types.hpp"

namespace rstv {

// Bilinear sample at continuous position (u, v) where pixel (r, c) covers
// [c, c+1) x [r, r+1) and its center sits at (c+0.5, r+0.5). Samples outside
// the image contribute zero.
double sample_bilinear(const ImageD& img, double u, double v);

// Resample the box region to out_w x out_h. Out-of-image area is zero padded,
// so the box center may lie anywhere.
ImageD crop_patch(const ImageD& frame, const BoundingBox& box, int out_w, int out_h);

// Stack of crops over the block's member frames, one box per member.
Volume stack_patches(const std::vector<ImageD>& frames, const std::vector<BoundingBox>& boxes,
                     const VolumeIndex& block, int patch_size);

}  // namespace rstv
