#include "rstv/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace rstv {

namespace {

int pgm_token(std::istream& in) {
    // Skips whitespace and '#' comments, then parses one integer.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw std::runtime_error("truncated PGM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

ImageD read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') throw std::runtime_error("not a binary PGM: " + path);
    const int w = pgm_token(in);
    const int h = pgm_token(in);
    const int maxval = pgm_token(in);
    if (w <= 0 || h <= 0 || (maxval != 255 && maxval != 65535)) {
        throw std::runtime_error("unsupported PGM geometry in " + path);
    }
    ImageD img(h, w);
    if (maxval == 255) {
        std::vector<unsigned char> row(w);
        for (int r = 0; r < h; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), w);
            if (!in) throw std::runtime_error("truncated PGM data in " + path);
            for (int c = 0; c < w; ++c) img(r, c) = row[c] / 255.0;
        }
    } else {
        std::vector<unsigned char> row(2 * w);
        for (int r = 0; r < h; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), 2 * w);
            if (!in) throw std::runtime_error("truncated PGM data in " + path);
            for (int c = 0; c < w; ++c) {
                const int v = (row[2 * c] << 8) | row[2 * c + 1];
                img(r, c) = v / 65535.0;
            }
        }
    }
    return img;
}

struct PngReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

ImageD read_png_file(const std::string& path) {
    PngReadCtx ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw std::runtime_error("cannot open " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("failed to decode " + path);

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    int depth = png_get_bit_depth(ctx.png, ctx.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    png_set_strip_alpha(ctx.png);
    if (depth == 16) png_set_swap(ctx.png);  // to little-endian for direct uint16 access
    png_read_update_info(ctx.png, ctx.info);

    depth = png_get_bit_depth(ctx.png, ctx.info);
    const int channels = png_get_channels(ctx.png, ctx.info);
    const size_t stride = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<unsigned char> data(stride * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = data.data() + r * stride;
    png_read_image(ctx.png, rows.data());

    const double scale = depth == 16 ? 65535.0 : 255.0;
    ImageD img(h, w);
    for (png_uint_32 r = 0; r < h; ++r) {
        for (png_uint_32 c = 0; c < w; ++c) {
            double gray;
            if (channels == 1) {
                gray = depth == 16 ? reinterpret_cast<uint16_t*>(rows[r])[c] : rows[r][c];
            } else {
                double rr, gg, bb;
                if (depth == 16) {
                    const uint16_t* p = reinterpret_cast<uint16_t*>(rows[r]) + channels * c;
                    rr = p[0], gg = p[1], bb = p[2];
                } else {
                    const unsigned char* p = rows[r] + channels * c;
                    rr = p[0], gg = p[1], bb = p[2];
                }
                gray = 0.299 * rr + 0.587 * gg + 0.114 * bb;
            }
            img(r, c) = gray / scale;
        }
    }
    return img;
}

unsigned char quant8(double v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

ImageD read_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open " + path);
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    probe.close();
    if (sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
    if (sig[0] == 0x89 && sig[1] == 'P') return read_png_file(path);
    throw std::runtime_error("unsupported image format: " + path);
}

void write_pgm(const std::string& path, const ImageD& img, int maxval) {
    if (maxval != 255 && maxval != 65535) throw std::invalid_argument("PGM maxval must be 255 or 65535");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << img.cols() << " " << img.rows() << "\n" << maxval << "\n";
    if (maxval == 255) {
        std::vector<unsigned char> row(img.cols());
        for (int r = 0; r < img.rows(); ++r) {
            for (int c = 0; c < img.cols(); ++c) row[c] = quant8(img(r, c));
            out.write(reinterpret_cast<char*>(row.data()), row.size());
        }
    } else {
        std::vector<unsigned char> row(2 * img.cols());
        for (int r = 0; r < img.rows(); ++r) {
            for (int c = 0; c < img.cols(); ++c) {
                const long v = std::clamp(std::lround(img(r, c) * 65535.0), 0L, 65535L);
                row[2 * c] = static_cast<unsigned char>(v >> 8);
                row[2 * c + 1] = static_cast<unsigned char>(v & 0xFF);
            }
            out.write(reinterpret_cast<char*>(row.data()), row.size());
        }
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_png(const std::string& path, const ImageD& img) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("failed to encode " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.cols(), img.rows(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(img.cols());
    for (int r = 0; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) row[c] = quant8(img(r, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace rstv
