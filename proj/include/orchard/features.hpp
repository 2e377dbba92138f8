#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "orchard/image.hpp"

namespace orchard {

enum class DescriptorKind { gch, ccv, lbp, clbp };
enum class FeatureColorspace { rgb, hsv };
enum class ClbpThreshold { magnitude_mean, gray_mean };

constexpr const char* to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::gch: return "gch";
    case DescriptorKind::ccv: return "ccv";
    case DescriptorKind::lbp: return "lbp";
    case DescriptorKind::clbp: return "clbp";
  }
  return "unknown";
}

constexpr const char* to_string(FeatureColorspace cs) {
  return cs == FeatureColorspace::rgb ? "rgb" : "hsv";
}

struct LbpParams {
  int neighbors = 8;
  double radius = 1.0;
  void validate() const;  // neighbors in [4, 16], radius >= 1
};

struct DescriptorParams {
  int gch_bins = 4;     // quantization levels per channel
  int ccv_colors = 64;  // joint color buckets
  int ccv_tau = 0;      // coherence threshold in pixels; 0 = auto (1% of counted)
  LbpParams lbp;
  ClbpThreshold clbp_threshold = ClbpThreshold::magnitude_mean;
};

struct DescriptorId {
  DescriptorKind kind = DescriptorKind::clbp;
  DescriptorParams params;

  // Length of the vector extract() emits for this id (three planes for the
  // texture descriptors).
  long length() const;
  void validate() const;
};

struct FeatureVector {
  DescriptorId descriptor;
  Eigen::VectorXd values;
};

// Descriptor identity plus source colorspace. The string form is the
// descriptor_id column of feature CSV files, e.g. "clbp:n=8:r=1:thr=mag:cs=hsv".
struct FeatureSpec {
  DescriptorId id;
  FeatureColorspace colorspace = FeatureColorspace::rgb;

  std::string str() const;
  static FeatureSpec parse(const std::string& s);
  bool operator==(const FeatureSpec& o) const { return str() == o.str(); }
};

// --- color descriptors ----------------------------------------------------

// Joint 3-D color histogram over the masked pixels, bins_per_channel uniform
// levels per channel against the colorspace's nominal range, normalized to
// sum 1. Cell index is channel-0 major.
Eigen::VectorXd gch(const ImageU8& img, int bins_per_channel, const MaskXb* mask = nullptr);
Eigen::VectorXd gch(const ImageF& img, int bins_per_channel, const MaskXb* mask = nullptr);

// Per-channel quantization level counts used for the n_colors CCV buckets:
// the most balanced ordered triple with product exactly n_colors.
std::array<int, 3> ccv_levels(int n_colors);

// 3x3 mean blur (window clipped at borders) followed by uniform quantization
// into n_colors joint buckets.
LabelsXi ccv_bucket_map(const ImageU8& img, int n_colors);
LabelsXi ccv_bucket_map(const ImageF& img, int n_colors);

// Color coherence vector: coherent histogram followed by incoherent
// histogram, length 2 * n_colors, normalized so the whole vector sums to 1.
// A pixel is coherent iff its 8-connected same-bucket component within the
// mask has at least tau pixels.
Eigen::VectorXd ccv(const ImageU8& img, int n_colors, int tau, const MaskXb* mask = nullptr);
Eigen::VectorXd ccv(const ImageF& img, int n_colors, int tau, const MaskXb* mask = nullptr);

// --- texture descriptors ----------------------------------------------------

// Sampling offsets (dx, dy) for each neighbor: neighbor n sits at angle
// 2*pi*n/N from the +x (column) axis, turning toward +y (row), at the given
// radius. Offsets within 1e-9 of a grid point are snapped to it.
std::vector<std::pair<double, double>> lbp_offsets(const LbpParams& p);

// Bilinear interpolation; exact at grid points and on constant patches. The
// caller guarantees the support pixels are inside the plane.
double bilinear_sample(const PlaneXd& plane, double x, double y);

int lbp_margin(const LbpParams& p);

// Binary code of the pixel at (row, col): bit n set iff the sampled neighbor
// value is >= the center value.
int lbp_code(const PlaneXd& plane, int row, int col, const LbpParams& p);

// Unnormalized code histogram (length 2^N) over the valid interior pixels: a
// center counts iff it and every sampled neighbor's bilinear support lie in
// the mask. The counts sum to the number of counted pixels.
Eigen::VectorXd lbp_counts(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask = nullptr);

// lbp_counts normalized to sum 1.
Eigen::VectorXd lbp_histogram(const PlaneXd& plane, const LbpParams& p, const MaskXb* mask = nullptr);

// Sign, magnitude, and center codes over the same valid pixels, emitted as
// hist(sign, 2^N) | hist(magnitude, 2^N) | hist(center, 2), each block
// normalized to sum 1. The sign block is identical to lbp_histogram. The
// magnitude threshold is the mean |v_n - v_c| over all counted pixels and
// neighbors (or the plane's gray mean with ClbpThreshold::gray_mean); the
// center threshold is the gray mean over every selected pixel of the plane,
// margin included.
Eigen::VectorXd clbp_histogram(const PlaneXd& plane, const LbpParams& p,
                               const MaskXb* mask = nullptr,
                               ClbpThreshold threshold = ClbpThreshold::magnitude_mean);

// --- top-level extraction ---------------------------------------------------

// Converts the RGB8 image to the requested colorspace and runs the
// descriptor. GCH/CCV see the 3-channel image; LBP/CLBP run on each channel
// plane and concatenate.
FeatureVector extract(const ImageU8& rgb, const DescriptorId& id,
                      FeatureColorspace colorspace, const MaskXb* mask = nullptr);

}  // namespace orchard
