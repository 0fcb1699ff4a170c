#pragma once

#include <string>

#include "fseg/image.hpp"

namespace fseg {

// Binary PGM ("P5", maxval 255). Images must hold integer values in
// [0,255]; masks are stored as {0,255} and mapped back to {0,1} on read.
void pgm_write(const Image2D& img, const std::string& path);
void pgm_write(const BinaryMask& mask, const std::string& path);

Image2D pgm_read(const std::string& path);
BinaryMask pgm_read_mask(const std::string& path);

} // namespace fseg
