#pragma once

#include <filesystem>

#include "orchard/image.hpp"

namespace orchard {

// Decodes a PNG or JPEG file to an RGB8 raster. Format is detected from the
// file's magic bytes, not its extension. Gray and palette inputs are expanded
// to RGB; 16-bit channels are reduced to 8; alpha is dropped.
ImageU8 load_image(const std::filesystem::path& path);

// 8-bit RGB PNG.
void save_png(const ImageU8& img, const std::filesystem::path& path);

// 8-bit grayscale PNG of a plane, linearly rescaled so [min,max] spans
// [0,255]. A constant plane writes as mid-gray.
void save_gray_png(const PlaneXd& plane, const std::filesystem::path& path);

// 1-bit grayscale PNG; true pixels are white.
void save_mask_png(const MaskXb& mask, const std::filesystem::path& path);

// Reads a PNG of any depth as a mask; a pixel is true iff its gray value is
// nonzero.
MaskXb load_mask_png(const std::filesystem::path& path);

}  // namespace orchard
