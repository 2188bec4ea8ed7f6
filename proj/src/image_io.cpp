#include "svh/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "svh/errors.hpp"

namespace svh {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_abort(png_structp, png_const_charp msg) {
  throw IoFailure(std::string("png: ") + msg);
}

void png_quiet(png_structp, png_const_charp) {}

}  // namespace

Image read_png_gray(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoFailure("cannot open " + path + " for reading");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_abort, png_quiet);
  if (!png) throw IoFailure("cannot allocate png reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoFailure("cannot allocate png info");
  }

  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY)
      throw IoFailure(path + ": expected a grayscale PNG");
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_swap(png);  // stored big-endian; read native
    png_read_update_info(png, info);

    const size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> row(rowbytes);
    auto out = Image(int(h), int(w));
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      if (depth == 16) {
        const uint16_t* p = reinterpret_cast<const uint16_t*>(row.data());
        for (png_uint_32 x = 0; x < w; ++x)
          out.at(int(y), int(x)) = float(double(p[x]) * scale);
      } else {
        for (png_uint_32 x = 0; x < w; ++x)
          out.at(int(y), int(x)) = float(double(row[x]) * scale);
      }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

void write_png_gray(const Image& img, const std::string& path) {
  if (img.h <= 0 || img.w <= 0) throw IoFailure("cannot write an empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoFailure("cannot open " + path + " for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_abort, png_quiet);
  if (!png) throw IoFailure("cannot allocate png writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoFailure("cannot allocate png info");
  }

  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(size_t(img.w));
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x) {
        const double v = std::min(1.0, std::max(0.0, double(img.at(y, x))));
        row[size_t(x)] = png_byte(std::lround(v * 255.0));
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  if (std::fflush(file.get()) != 0) throw IoFailure("cannot flush " + path);
}

void write_seg_debug_png(const Tensor<uint8_t>& seg, const std::string& path) {
  if (seg.shape.size() != 2 || seg.shape[0] <= 0 || seg.shape[1] <= 0)
    throw IoFailure("segmentation map must be a non-empty 2-d tensor");
  const int h = int(seg.shape[0]), w = int(seg.shape[1]);

  // Palette: 21 joint classes on a hue wheel, background black; one extra
  // slot renders ignore pixels, made fully transparent via the alpha chunk.
  constexpr int kClasses = 22;
  constexpr int kIgnoreSlot = kClasses;
  png_color palette[kClasses + 1];
  png_byte alpha[kClasses + 1];
  for (int c = 0; c < 21; ++c) {
    const double hdeg = 360.0 * double(c) / 21.0;
    const double s = 0.75, v = 0.95;
    const double hh = hdeg / 60.0;
    const int i = int(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double r = 0, g = 0, b = 0;
    switch (i) {
      case 0: r = v; g = t; b = p; break;
      case 1: r = q; g = v; b = p; break;
      case 2: r = p; g = v; b = t; break;
      case 3: r = p; g = q; b = v; break;
      case 4: r = t; g = p; b = v; break;
      default: r = v; g = p; b = q; break;
    }
    palette[c] = {png_byte(std::lround(r * 255)), png_byte(std::lround(g * 255)),
                  png_byte(std::lround(b * 255))};
    alpha[c] = 255;
  }
  palette[21] = {0, 0, 0};  // background
  alpha[21] = 255;
  palette[kIgnoreSlot] = {128, 128, 128};
  alpha[kIgnoreSlot] = 0;  // ignore band is transparent

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoFailure("cannot open " + path + " for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_abort, png_quiet);
  if (!png) throw IoFailure("cannot allocate png writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoFailure("cannot allocate png info");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8,
                 PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_PLTE(png, info, palette, kClasses + 1);
    png_set_tRNS(png, info, alpha, kClasses + 1, nullptr);
    png_write_info(png, info);
    auto row = std::vector<png_byte>(size_t(w));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const uint8_t c = seg.ptr()[int64_t(y) * w + x];
        row[size_t(x)] = c < kClasses ? c : png_byte(kIgnoreSlot);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
}

}  // namespace svh
