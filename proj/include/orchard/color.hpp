#pragma once

#include <array>

#include "orchard/image.hpp"

namespace orchard {

// sRGB (D65) -> CIE L*a*b*. L* in [0,100].
ImageF rgb_to_lab(const ImageU8& img);

// Hexcone HSV. H in degrees [0,360), S and V in [0,1].
// Achromatic pixels get H = 0; V equals max(R,G,B)/255 exactly.
ImageF rgb_to_hsv(const ImageU8& img);

std::array<double, 3> rgb_pixel_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<double, 3> rgb_pixel_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace orchard
