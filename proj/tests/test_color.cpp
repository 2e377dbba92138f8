#include "doctest.h"

#include <cmath>
#include <cstdint>

#include "orchard/color.hpp"
#include "orchard/error.hpp"
#include "orchard/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace orchard;
using testutil::error_code_of;

TEST_CASE("lab anchors: white, black, mid-gray") {
  const auto white = rgb_pixel_to_lab(255, 255, 255);
  CHECK(white[0] == doctest::Approx(100.0).epsilon(0.0001));
  CHECK(std::abs(white[1]) < 0.01);
  CHECK(std::abs(white[2]) < 0.01);

  const auto black = rgb_pixel_to_lab(0, 0, 0);
  CHECK(black[0] == 0.0);
  CHECK(black[1] == 0.0);
  CHECK(black[2] == 0.0);

  const auto gray = rgb_pixel_to_lab(128, 128, 128);
  const auto ref = oracle::rgb_to_lab(128, 128, 128);
  CHECK(std::abs(gray[0] - ref[0]) < 1e-3);
}

TEST_CASE("gray pixels are neutral in lab") {
  for (int v = 0; v <= 255; v += 5) {
    const auto lab = rgb_pixel_to_lab(static_cast<std::uint8_t>(v),
                                      static_cast<std::uint8_t>(v),
                                      static_cast<std::uint8_t>(v));
    CHECK(std::abs(lab[1]) < 0.01);
    CHECK(std::abs(lab[2]) < 0.01);
  }
}

TEST_CASE("lab matches a reference conversion on random pixels") {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    const auto r = static_cast<std::uint8_t>(rng.bounded(256));
    const auto g = static_cast<std::uint8_t>(rng.bounded(256));
    const auto b = static_cast<std::uint8_t>(rng.bounded(256));
    const auto got = rgb_pixel_to_lab(r, g, b);
    const auto ref = oracle::rgb_to_lab(r, g, b);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(got[c] - ref[c]) < 0.02);
  }
}

TEST_CASE("hsv anchors: primaries, black, white") {
  const auto red = rgb_pixel_to_hsv(255, 0, 0);
  CHECK(red[0] == 0.0);
  CHECK(red[1] == 1.0);
  CHECK(red[2] == 1.0);

  const auto green = rgb_pixel_to_hsv(0, 255, 0);
  CHECK(green[0] == doctest::Approx(120.0));
  const auto blue = rgb_pixel_to_hsv(0, 0, 255);
  CHECK(blue[0] == doctest::Approx(240.0));

  const auto black = rgb_pixel_to_hsv(0, 0, 0);
  CHECK(black[0] == 0.0);
  CHECK(black[1] == 0.0);
  CHECK(black[2] == 0.0);

  const auto white = rgb_pixel_to_hsv(255, 255, 255);
  CHECK(white[0] == 0.0);
  CHECK(white[1] == 0.0);
  CHECK(white[2] == 1.0);
}

TEST_CASE("hsv matches a reference conversion on random pixels") {
  Rng rng(202);
  for (int i = 0; i < 500; ++i) {
    const auto r = static_cast<std::uint8_t>(rng.bounded(256));
    const auto g = static_cast<std::uint8_t>(rng.bounded(256));
    const auto b = static_cast<std::uint8_t>(rng.bounded(256));
    const auto got = rgb_pixel_to_hsv(r, g, b);
    const auto ref = oracle::rgb_to_hsv(r, g, b);
    CHECK(std::abs(got[0] - ref[0]) < 1e-6);
    CHECK(std::abs(got[1] - ref[1]) < 1e-9);
    CHECK(std::abs(got[2] - ref[2]) < 1e-9);
    CHECK(got[0] >= 0.0);
    CHECK(got[0] < 360.0);
    CHECK(got[1] >= 0.0);
    CHECK(got[1] <= 1.0);
  }
}

TEST_CASE("hsv value channel is exactly max over 255") {
  Rng rng(303);
  const ImageU8 img = testutil::random_rgb_image(rng, 16, 16);
  const ImageF hsv = rgb_to_hsv(img);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int m = std::max({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
      CHECK(hsv.at(y, x, 2) == static_cast<double>(m) / 255.0);
    }
}

TEST_CASE("image conversions apply the pixel conversion everywhere") {
  Rng rng(404);
  const ImageU8 img = testutil::random_rgb_image(rng, 7, 9);

  const ImageF lab = rgb_to_lab(img);
  CHECK(lab.space == Colorspace::lab);
  const ImageF hsv = rgb_to_hsv(img);
  CHECK(hsv.space == Colorspace::hsv);

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto pl = rgb_pixel_to_lab(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      const auto ph = rgb_pixel_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      for (int c = 0; c < 3; ++c) {
        CHECK(lab.at(y, x, c) == pl[c]);
        CHECK(hsv.at(y, x, c) == ph[c]);
      }
    }
}

TEST_CASE("conversions are pure: repeated calls agree bitwise") {
  Rng rng(505);
  const ImageU8 img = testutil::random_rgb_image(rng, 8, 8);
  const ImageF a = rgb_to_lab(img);
  const ImageF b = rgb_to_lab(img);
  CHECK(a.data == b.data);
  const ImageF c = rgb_to_hsv(img);
  const ImageF d = rgb_to_hsv(img);
  CHECK(c.data == d.data);
}

TEST_CASE("conversions reject non-rgb input") {
  ImageU8 gray(4, 4, Colorspace::gray);
  CHECK(error_code_of([&] { rgb_to_lab(gray); }) == Errc::wrong_colorspace);
  CHECK(error_code_of([&] { rgb_to_hsv(gray); }) == Errc::wrong_colorspace);
}
