#include "orchard/color.hpp"

#include <cmath>

namespace orchard {

namespace {

// sRGB decoding gamma.
double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

// D65 reference white; the matrix rows sum to it so that (255,255,255)
// lands exactly on L*=100, a*=b*=0 up to rounding.
constexpr double kXn = 0.4124564 + 0.3575761 + 0.1804375;
constexpr double kYn = 0.2126729 + 0.7151522 + 0.0721750;
constexpr double kZn = 0.0193339 + 0.1191920 + 0.9503041;

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

std::array<double, 3> rgb_pixel_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double rl = srgb_to_linear(r / 255.0);
  const double gl = srgb_to_linear(g / 255.0);
  const double bl = srgb_to_linear(b / 255.0);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> rgb_pixel_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double rf = r / 255.0, gf = g / 255.0, bf = b / 255.0;
  const double mx = std::max(rf, std::max(gf, bf));
  const double mn = std::min(rf, std::min(gf, bf));
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == rf)
      h = 60.0 * ((gf - bf) / delta);
    else if (mx == gf)
      h = 60.0 * ((bf - rf) / delta + 2.0);
    else
      h = 60.0 * ((rf - gf) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

namespace {

template <class F>
ImageF convert(const ImageU8& img, Colorspace out_space, F&& per_pixel) {
  if (img.space != Colorspace::rgb8)
    fail(Errc::wrong_colorspace, "expected an rgb8 image");
  ImageF out(img.width, img.height, out_space);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto v = per_pixel(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      out.at(y, x, 0) = v[0];
      out.at(y, x, 1) = v[1];
      out.at(y, x, 2) = v[2];
    }
  }
  return out;
}

}  // namespace

ImageF rgb_to_lab(const ImageU8& img) {
  return convert(img, Colorspace::lab, rgb_pixel_to_lab);
}

ImageF rgb_to_hsv(const ImageU8& img) {
  return convert(img, Colorspace::hsv, rgb_pixel_to_hsv);
}

}  // namespace orchard
