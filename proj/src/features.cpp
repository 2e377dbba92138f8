#include "orchard/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orchard/color.hpp"
#include "orchard/error.hpp"
#include "orchard/text.hpp"

namespace orchard {

namespace {

void check_mask(const MaskXb* mask, long rows, long cols) {
  if (mask && (mask->rows() != rows || mask->cols() != cols))
    fail(Errc::dimension_mismatch, "mask shape does not match image");
}

// Uniform quantization of one channel value against its nominal range.
int quantize_channel(double v, Colorspace space, int channel, int levels) {
  double t;
  if (space == Colorspace::rgb8) {
    t = v / 256.0;
  } else if (space == Colorspace::hsv) {
    t = channel == 0 ? v / 360.0 : v;
  } else {
    fail(Errc::wrong_colorspace, "histogram ranges are defined for rgb8 and hsv");
  }
  int q = static_cast<int>(std::floor(t * levels));
  return std::clamp(q, 0, levels - 1);
}

template <class T>
Eigen::VectorXd gch_impl(const Image<T>& img, int bins, const MaskXb* mask) {
  if (img.channels() != 3)
    fail(Errc::wrong_colorspace, "gch needs a 3-channel image");
  if (bins < 2) fail(Errc::invalid_argument, "gch needs at least 2 bins per channel");
  check_mask(mask, img.height, img.width);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<long>(bins) * bins * bins);
  long counted = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (mask && !(*mask)(y, x)) continue;
      int cell = 0;
      for (int c = 0; c < 3; ++c)
        cell = cell * bins + quantize_channel(static_cast<double>(img.at(y, x, c)), img.space, c, bins);
      counts[cell] += 1.0;
      ++counted;
    }
  if (counted == 0) fail(Errc::empty_mask, "gch: no pixels selected");
  counts /= static_cast<double>(counted);
  return counts;
}

PlaneXd blur3(const PlaneXd& p) {
  const long h = p.rows(), w = p.cols();
  PlaneXd out(h, w);
  for (long y = 0; y < h; ++y) {
    const long y0 = std::max(0L, y - 1), y1 = std::min(h - 1, y + 1);
    for (long x = 0; x < w; ++x) {
      const long x0 = std::max(0L, x - 1), x1 = std::min(w - 1, x + 1);
      double sum = 0.0;
      for (long ny = y0; ny <= y1; ++ny)
        for (long nx = x0; nx <= x1; ++nx) sum += p(ny, nx);
      out(y, x) = sum / static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
    }
  }
  return out;
}

template <class T>
LabelsXi bucket_map_impl(const Image<T>& img, int n_colors) {
  if (img.channels() != 3)
    fail(Errc::wrong_colorspace, "ccv needs a 3-channel image");
  const auto levels = ccv_levels(n_colors);
  auto planes = split_channels(img);
  for (auto& pl : planes) pl = blur3(pl);

  LabelsXi map(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int bucket = 0;
      for (int c = 0; c < 3; ++c)
        bucket = bucket * levels[c] + quantize_channel(planes[c](y, x), img.space, c, levels[c]);
      map(y, x) = bucket;
    }
  return map;
}

template <class T>
Eigen::VectorXd ccv_impl(const Image<T>& img, int n_colors, int tau, const MaskXb* mask) {
  if (tau < 0) fail(Errc::invalid_argument, "negative coherence threshold");
  check_mask(mask, img.height, img.width);
  const LabelsXi buckets = bucket_map_impl(img, n_colors);

  const long h = img.height, w = img.width;
  long counted = 0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      if (!mask || (*mask)(y, x)) ++counted;
  if (counted == 0) fail(Errc::empty_mask, "ccv: no pixels selected");
  const long t = tau > 0 ? tau : std::max(1L, static_cast<long>(std::ceil(0.01 * static_cast<double>(counted))));

  // 8-connected same-bucket components within the mask.
  LabelsXi comp = LabelsXi::Constant(h, w, -1);
  std::vector<long> sizes;
  std::vector<long> stack;
  for (long sy = 0; sy < h; ++sy)
    for (long sx = 0; sx < w; ++sx) {
      if ((mask && !(*mask)(sy, sx)) || comp(sy, sx) >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      const int bucket = buckets(sy, sx);
      long size = 0;
      comp(sy, sx) = id;
      stack.push_back(sy * w + sx);
      while (!stack.empty()) {
        const long idx = stack.back();
        stack.pop_back();
        ++size;
        const long y = idx / w, x = idx % w;
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            const long ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            if (mask && !(*mask)(ny, nx)) continue;
            if (comp(ny, nx) >= 0 || buckets(ny, nx) != bucket) continue;
            comp(ny, nx) = id;
            stack.push_back(ny * w + nx);
          }
      }
      sizes.push_back(size);
    }

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(2L * n_colors);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      if (mask && !(*mask)(y, x)) continue;
      const bool coherent = sizes[comp(y, x)] >= t;
      hist[buckets(y, x) + (coherent ? 0 : n_colors)] += 1.0;
    }
  hist /= static_cast<double>(counted);
  return hist;
}

struct Support {
  long x0, y0;
  double fx, fy;
};

Support support_of(double x, double y) {
  const double xf = std::floor(x), yf = std::floor(y);
  return {static_cast<long>(xf), static_cast<long>(yf), x - xf, y - yf};
}

bool support_in_mask(const MaskXb& mask, double x, double y) {
  const Support s = support_of(x, y);
  if (!mask(s.y0, s.x0)) return false;
  if (s.fx > 0 && !mask(s.y0, s.x0 + 1)) return false;
  if (s.fy > 0 && !mask(s.y0 + 1, s.x0)) return false;
  if (s.fx > 0 && s.fy > 0 && !mask(s.y0 + 1, s.x0 + 1)) return false;
  return true;
}

// One pass over the valid centers: center values plus the N sampled neighbor
// values per center, in scan order.
struct PlaneScan {
  std::vector<double> center;
  std::vector<double> samples;
};

PlaneScan scan_plane(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask) {
  p.validate();
  check_mask(mask, plane.rows(), plane.cols());
  const auto off = lbp_offsets(p);
  const long m = lbp_margin(p);
  const long h = plane.rows(), w = plane.cols();

  PlaneScan scan;
  for (long row = m; row + m < h; ++row)
    for (long col = m; col + m < w; ++col) {
      if (mask) {
        if (!(*mask)(row, col)) continue;
        bool ok = true;
        for (const auto& [dx, dy] : off)
          if (!support_in_mask(*mask, col + dx, row + dy)) {
            ok = false;
            break;
          }
        if (!ok) continue;
      }
      scan.center.push_back(plane(row, col));
      for (const auto& [dx, dy] : off)
        scan.samples.push_back(bilinear_sample(plane, col + dx, row + dy));
    }
  return scan;
}

}  // namespace

void LbpParams::validate() const {
  if (neighbors < 4 || neighbors > 16)
    fail(Errc::invalid_argument, "lbp neighbors must be in [4, 16]");
  if (!(radius >= 1.0))
    fail(Errc::invalid_argument, "lbp radius must be >= 1");
}

void DescriptorId::validate() const {
  switch (kind) {
    case DescriptorKind::gch:
      if (params.gch_bins < 2 || params.gch_bins > 32)
        fail(Errc::invalid_argument, "gch bins must be in [2, 32]");
      break;
    case DescriptorKind::ccv:
      if (params.ccv_colors < 2 || params.ccv_colors > 4096)
        fail(Errc::invalid_argument, "ccv colors must be in [2, 4096]");
      if (params.ccv_tau < 0)
        fail(Errc::invalid_argument, "negative coherence threshold");
      break;
    case DescriptorKind::lbp:
    case DescriptorKind::clbp:
      params.lbp.validate();
      break;
  }
}

long DescriptorId::length() const {
  switch (kind) {
    case DescriptorKind::gch: {
      const long b = params.gch_bins;
      return b * b * b;
    }
    case DescriptorKind::ccv:
      return 2L * params.ccv_colors;
    case DescriptorKind::lbp:
      return 3L * (1L << params.lbp.neighbors);
    case DescriptorKind::clbp:
      return 3L * ((2L << params.lbp.neighbors) + 2);
  }
  fail(Errc::invalid_argument, "unknown descriptor kind");
}

std::string FeatureSpec::str() const {
  std::string s = to_string(id.kind);
  switch (id.kind) {
    case DescriptorKind::gch:
      s += ":bins=" + std::to_string(id.params.gch_bins);
      break;
    case DescriptorKind::ccv:
      s += ":colors=" + std::to_string(id.params.ccv_colors);
      s += ":tau=" + (id.params.ccv_tau > 0 ? std::to_string(id.params.ccv_tau) : std::string("auto"));
      break;
    case DescriptorKind::lbp:
    case DescriptorKind::clbp:
      s += ":n=" + std::to_string(id.params.lbp.neighbors);
      s += ":r=" + fmt_double(id.params.lbp.radius);
      if (id.kind == DescriptorKind::clbp)
        s += std::string(":thr=") +
             (id.params.clbp_threshold == ClbpThreshold::magnitude_mean ? "mag" : "gray");
      break;
  }
  s += ":cs=";
  s += to_string(colorspace);
  return s;
}

FeatureSpec FeatureSpec::parse(const std::string& s) {
  const auto parts = split(s, ':');
  FeatureSpec spec;
  if (parts[0] == "gch")
    spec.id.kind = DescriptorKind::gch;
  else if (parts[0] == "ccv")
    spec.id.kind = DescriptorKind::ccv;
  else if (parts[0] == "lbp")
    spec.id.kind = DescriptorKind::lbp;
  else if (parts[0] == "clbp")
    spec.id.kind = DescriptorKind::clbp;
  else
    fail(Errc::bad_format, "unknown descriptor: '" + parts[0] + "'");

  for (size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos)
      fail(Errc::bad_format, "expected key=value, got '" + parts[i] + "'");
    const std::string key = parts[i].substr(0, eq);
    const std::string val = parts[i].substr(eq + 1);
    if (key == "cs") {
      if (val == "rgb")
        spec.colorspace = FeatureColorspace::rgb;
      else if (val == "hsv")
        spec.colorspace = FeatureColorspace::hsv;
      else
        fail(Errc::bad_format, "unknown colorspace: '" + val + "'");
    } else if (key == "bins") {
      spec.id.params.gch_bins = static_cast<int>(parse_long(val));
    } else if (key == "colors") {
      spec.id.params.ccv_colors = static_cast<int>(parse_long(val));
    } else if (key == "tau") {
      spec.id.params.ccv_tau = val == "auto" ? 0 : static_cast<int>(parse_long(val));
    } else if (key == "n") {
      spec.id.params.lbp.neighbors = static_cast<int>(parse_long(val));
    } else if (key == "r") {
      spec.id.params.lbp.radius = parse_double(val);
    } else if (key == "thr") {
      if (val == "mag")
        spec.id.params.clbp_threshold = ClbpThreshold::magnitude_mean;
      else if (val == "gray")
        spec.id.params.clbp_threshold = ClbpThreshold::gray_mean;
      else
        fail(Errc::bad_format, "unknown clbp threshold: '" + val + "'");
    } else {
      fail(Errc::bad_format, "unknown descriptor key: '" + key + "'");
    }
  }
  spec.id.validate();
  return spec;
}

Eigen::VectorXd gch(const ImageU8& img, int bins_per_channel, const MaskXb* mask) {
  return gch_impl(img, bins_per_channel, mask);
}

Eigen::VectorXd gch(const ImageF& img, int bins_per_channel, const MaskXb* mask) {
  return gch_impl(img, bins_per_channel, mask);
}

std::array<int, 3> ccv_levels(int n_colors) {
  if (n_colors < 2) fail(Errc::invalid_argument, "ccv needs at least 2 colors");
  std::array<int, 3> best{n_colors, 1, 1};
  for (int c = 1; c * c * c <= n_colors; ++c) {
    if (n_colors % c != 0) continue;
    const int rest = n_colors / c;
    for (int b = c; b * b <= rest; ++b) {
      if (rest % b != 0) continue;
      const int a = rest / b;
      const bool better =
          a - c < best[0] - best[2] || (a - c == best[0] - best[2] && a < best[0]);
      if (better) best = {a, b, c};
    }
  }
  return best;
}

LabelsXi ccv_bucket_map(const ImageU8& img, int n_colors) { return bucket_map_impl(img, n_colors); }
LabelsXi ccv_bucket_map(const ImageF& img, int n_colors) { return bucket_map_impl(img, n_colors); }

Eigen::VectorXd ccv(const ImageU8& img, int n_colors, int tau, const MaskXb* mask) {
  return ccv_impl(img, n_colors, tau, mask);
}

Eigen::VectorXd ccv(const ImageF& img, int n_colors, int tau, const MaskXb* mask) {
  return ccv_impl(img, n_colors, tau, mask);
}

std::vector<std::pair<double, double>> lbp_offsets(const LbpParams& p) {
  p.validate();
  std::vector<std::pair<double, double>> off(p.neighbors);
  for (int n = 0; n < p.neighbors; ++n) {
    const double theta = 2.0 * std::numbers::pi * n / p.neighbors;
    double dx = p.radius * std::cos(theta);
    double dy = p.radius * std::sin(theta);
    // samples that land on the pixel grid are used exactly
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    off[n] = {dx, dy};
  }
  return off;
}

double bilinear_sample(const PlaneXd& plane, double x, double y) {
  const Support s = support_of(x, y);
  // Difference form: constant patches come back bit-exact, so equal-value
  // neighborhoods keep the >= comparison an equality.
  const double p00 = plane(s.y0, s.x0);
  double v = p00;
  if (s.fx > 0) v += s.fx * (plane(s.y0, s.x0 + 1) - p00);
  if (s.fy > 0) v += s.fy * (plane(s.y0 + 1, s.x0) - p00);
  if (s.fx > 0 && s.fy > 0)
    v += s.fx * s.fy *
         (p00 + plane(s.y0 + 1, s.x0 + 1) - plane(s.y0, s.x0 + 1) - plane(s.y0 + 1, s.x0));
  return v;
}

int lbp_margin(const LbpParams& p) {
  return static_cast<int>(std::ceil(p.radius - 1e-9));
}

int lbp_code(const PlaneXd& plane, int row, int col, const LbpParams& p) {
  p.validate();
  const int m = lbp_margin(p);
  if (row < m || col < m || row + m >= plane.rows() || col + m >= plane.cols())
    fail(Errc::out_of_bounds, "lbp center too close to the border");
  const auto off = lbp_offsets(p);
  const double center = plane(row, col);
  int code = 0;
  for (int n = 0; n < p.neighbors; ++n) {
    const double v = bilinear_sample(plane, col + off[n].first, row + off[n].second);
    if (v - center >= 0.0) code |= 1 << n;
  }
  return code;
}

Eigen::VectorXd lbp_counts(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask) {
  const PlaneScan scan = scan_plane(plane, p, mask);
  const int N = p.neighbors;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(1L << N);
  for (size_t i = 0; i < scan.center.size(); ++i) {
    int code = 0;
    for (int n = 0; n < N; ++n)
      if (scan.samples[i * N + n] - scan.center[i] >= 0.0) code |= 1 << n;
    counts[code] += 1.0;
  }
  return counts;
}

Eigen::VectorXd lbp_histogram(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask) {
  Eigen::VectorXd counts = lbp_counts(plane, p, mask);
  const double total = counts.sum();
  if (total == 0.0) fail(Errc::no_valid_pixels, "lbp: no valid centers");
  counts /= total;
  return counts;
}

Eigen::VectorXd clbp_histogram(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask,
                               ClbpThreshold threshold) {
  const PlaneScan scan = scan_plane(plane, p, mask);
  const long nv = static_cast<long>(scan.center.size());
  if (nv == 0) fail(Errc::no_valid_pixels, "clbp: no valid centers");
  const int N = p.neighbors;
  const long bins = 1L << N;

  // The gray threshold is the mean over every selected pixel of the plane,
  // not just the centers that survive the margin.
  double gray_sum = 0.0;
  long gray_n = 0;
  for (long y = 0; y < plane.rows(); ++y)
    for (long x = 0; x < plane.cols(); ++x) {
      if (mask && !(*mask)(y, x)) continue;
      gray_sum += plane(y, x);
      ++gray_n;
    }
  const double gray_mean = gray_sum / static_cast<double>(gray_n);

  double mag_threshold;
  if (threshold == ClbpThreshold::magnitude_mean) {
    double mag_sum = 0.0;
    for (long i = 0; i < nv; ++i)
      for (int n = 0; n < N; ++n) mag_sum += std::abs(scan.samples[i * N + n] - scan.center[i]);
    mag_threshold = mag_sum / static_cast<double>(nv * N);
  } else {
    mag_threshold = gray_mean;
  }

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(2 * bins + 2);
  for (long i = 0; i < nv; ++i) {
    int s_code = 0, m_code = 0;
    for (int n = 0; n < N; ++n) {
      const double d = scan.samples[i * N + n] - scan.center[i];
      if (d >= 0.0) s_code |= 1 << n;
      if (std::abs(d) >= mag_threshold) m_code |= 1 << n;
    }
    hist[s_code] += 1.0;
    hist[bins + m_code] += 1.0;
    hist[2 * bins + (scan.center[i] >= gray_mean ? 1 : 0)] += 1.0;
  }
  hist /= static_cast<double>(nv);  // every block saw nv counts
  return hist;
}

FeatureVector extract(const ImageU8& rgb, const DescriptorId& id,
                      FeatureColorspace colorspace, const MaskXb* mask) {
  if (rgb.space != Colorspace::rgb8)
    fail(Errc::wrong_colorspace, "extract expects an rgb8 image");
  id.validate();
  check_mask(mask, rgb.height, rgb.width);

  FeatureVector fv;
  fv.descriptor = id;
  const bool use_hsv = colorspace == FeatureColorspace::hsv;

  switch (id.kind) {
    case DescriptorKind::gch:
      fv.values = use_hsv ? gch(rgb_to_hsv(rgb), id.params.gch_bins, mask)
                          : gch(rgb, id.params.gch_bins, mask);
      break;
    case DescriptorKind::ccv:
      fv.values = use_hsv ? ccv(rgb_to_hsv(rgb), id.params.ccv_colors, id.params.ccv_tau, mask)
                          : ccv(rgb, id.params.ccv_colors, id.params.ccv_tau, mask);
      break;
    case DescriptorKind::lbp:
    case DescriptorKind::clbp: {
      const auto planes = use_hsv ? split_channels(rgb_to_hsv(rgb)) : split_channels(rgb);
      fv.values.resize(id.length());
      long offset = 0;
      for (const auto& plane : planes) {
        const Eigen::VectorXd h =
            id.kind == DescriptorKind::lbp
                ? lbp_histogram(plane, id.params.lbp, mask)
                : clbp_histogram(plane, id.params.lbp, mask, id.params.clbp_threshold);
        fv.values.segment(offset, h.size()) = h;
        offset += h.size();
      }
      break;
    }
  }
  return fv;
}

}  // namespace orchard
