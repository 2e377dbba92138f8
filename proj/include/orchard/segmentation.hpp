#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "orchard/image.hpp"

namespace orchard {

struct KMeansConfig {
  int k = 4;
  std::uint64_t seed = 0;
  int max_iterations = 100;
  double tolerance = 1e-4;  // max centroid movement, a*b* units
  int restarts = 4;         // independent seeded runs; lowest objective wins

  // CLI-facing validation; kmeans_ab itself also accepts k = 1.
  void validate() const;
};

struct SegmentationResult {
  LabelsXi labels;                                    // per-pixel cluster index
  Eigen::Matrix<double, Eigen::Dynamic, 2> centroids; // rows are (a*, b*)
  double objective = 0.0;  // sum of squared distances to assigned centroids
  // Objective after the initial assignment and after each Lloyd update;
  // non-increasing by construction.
  std::vector<double> objective_history;
  std::vector<long> cluster_sizes;
  int selected = -1;       // set by select_defect_cluster
  MaskXb defect_mask;      // empty until a cluster is selected
};

enum class SelectionMode { darkest_l, farthest_from_dominant, manual };

struct ClusterSelectionPolicy {
  SelectionMode mode = SelectionMode::farthest_from_dominant;
  int manual_index = 0;
};

// Lloyd iterations over the (a*, b*) components of a L*a*b* image, squared
// Euclidean distance, k-means++ seeding. Deterministic for a fixed seed.
// Empty clusters are reseeded to the pixel farthest from its assigned
// centroid.
SegmentationResult kmeans_ab(const ImageF& lab, const KMeansConfig& cfg);

// Chooses the defect cluster and fills defect_mask.
//   darkest_l: minimum mean L* over member pixels.
//   farthest_from_dominant: centroid with maximum a*b* distance from the
//     most populous cluster's centroid (ties to the lowest index).
//   manual: the given index.
SegmentationResult select_defect_cluster(SegmentationResult seg, const ImageF& lab,
                                         const ClusterSelectionPolicy& policy);

// Zeroes every channel outside the mask; pixels inside are untouched.
template <class T>
Image<T> apply_mask(const Image<T>& img, const MaskXb& mask) {
  if (mask.rows() != img.height || mask.cols() != img.width)
    fail(Errc::dimension_mismatch, "mask shape does not match image");
  Image<T> out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (!mask(y, x))
        for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = T{};
  return out;
}

}  // namespace orchard
