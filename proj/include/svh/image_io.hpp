#pragma once
#include <string>

#include "svh/image.hpp"
#include "svh/targets.hpp"

namespace svh {

// Reads an 8- or 16-bit grayscale PNG into [0,1] floats (full-scale white
// maps to 1.0). Throws IoFailure on missing files, non-grayscale color
// types, or malformed data.
Image read_png_gray(const std::string& path);

// Writes an 8-bit grayscale PNG; values are clipped to [0,1] and scaled to
// 0..255. Output bytes depend only on the pixel values, so identical images
// produce identical files. Throws IoFailure.
void write_png_gray(const Image& img, const std::string& path);

// Debug export of a segmentation map as an indexed-color PNG: one fixed
// palette entry per class (joints cycle through distinct hues, background is
// black) and ignore pixels fully transparent. Throws IoFailure.
void write_seg_debug_png(const Tensor<uint8_t>& seg, const std::string& path);

}  // namespace svh
