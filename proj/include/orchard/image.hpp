#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "orchard/error.hpp"

namespace orchard {

enum class Colorspace { rgb8, hsv, lab, gray };

constexpr int channel_count(Colorspace cs) {
  return cs == Colorspace::gray ? 1 : 3;
}

constexpr const char* to_string(Colorspace cs) {
  switch (cs) {
    case Colorspace::rgb8: return "rgb8";
    case Colorspace::hsv: return "hsv";
    case Colorspace::lab: return "lab";
    case Colorspace::gray: return "gray";
  }
  return "unknown";
}

// Row-major dense planes shared by every stage of the pipeline.
using PlaneXd = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskXb = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelsXi = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Channel-interleaved raster, row-major. RGB8 keeps 8-bit samples; the
// real-valued spaces (HSV, L*a*b*) use doubles throughout.
// Ranges: RGB8 in [0,255]; H in [0,360), S,V in [0,1]; L* in [0,100].
template <class T>
struct Image {
  int width = 0;
  int height = 0;
  Colorspace space = Colorspace::rgb8;
  std::vector<T> data;

  Image() = default;

  Image(int w, int h, Colorspace cs)
      : width(w), height(h), space(cs) {
    if (w < 1 || h < 1)
      fail(Errc::invalid_argument, "image dimensions must be positive");
    data.assign(static_cast<std::size_t>(w) * h * channel_count(cs), T{});
  }

  int channels() const { return channel_count(space); }
  long pixel_count() const { return static_cast<long>(width) * height; }

  T& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels() + c];
  }
  const T& at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels() + c];
  }
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<double>;

// One plane per channel, values widened to double. Concatenating the planes
// channel by channel reconstructs the image.
template <class T>
std::vector<PlaneXd> split_channels(const Image<T>& img) {
  std::vector<PlaneXd> planes;
  planes.reserve(img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    PlaneXd p(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        p(y, x) = static_cast<double>(img.at(y, x, c));
    planes.push_back(std::move(p));
  }
  return planes;
}

inline ImageF merge_channels(const std::vector<PlaneXd>& planes, Colorspace cs) {
  if (planes.empty()) fail(Errc::invalid_argument, "no planes to merge");
  if (static_cast<int>(planes.size()) != channel_count(cs))
    fail(Errc::dimension_mismatch, "plane count does not match colorspace");
  const int h = static_cast<int>(planes[0].rows());
  const int w = static_cast<int>(planes[0].cols());
  for (const auto& p : planes)
    if (p.rows() != h || p.cols() != w)
      fail(Errc::dimension_mismatch, "planes differ in shape");
  ImageF out(w, h, cs);
  for (int c = 0; c < out.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(y, x, c) = planes[c](y, x);
  return out;
}

}  // namespace orchard
