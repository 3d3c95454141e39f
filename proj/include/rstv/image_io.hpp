#pragma once

#include <string>

#include "rstv/types.hpp"

namespace rstv {

// Reads a grayscale image into [0,1]. Supports binary PGM (P5, 8/16-bit) and
// PNG (8/16-bit gray or color; color is converted with 0.299R+0.587G+0.114B).
ImageD read_image(const std::string& path);

// Binary PGM writer; maxval must be 255 or 65535. 16-bit samples are
// big-endian per the Netpbm format.
void write_pgm(const std::string& path, const ImageD& img, int maxval = 255);

// 8-bit grayscale PNG writer.
void write_png(const std::string& path, const ImageD& img);

}  // namespace rstv
