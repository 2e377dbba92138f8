#include "orchard/segmentation.hpp"

#include <cmath>
#include <limits>

#include "orchard/rng.hpp"

namespace orchard {

void KMeansConfig::validate() const {
  if (k < 2) fail(Errc::invalid_argument, "k must be at least 2");
  if (max_iterations < 1) fail(Errc::invalid_argument, "max_iterations must be at least 1");
  if (!(tolerance >= 0.0)) fail(Errc::invalid_argument, "tolerance must be non-negative");
  if (restarts < 1 || restarts > 64)
    fail(Errc::invalid_argument, "restarts must be in [1, 64]");
}

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;

double sq_dist(const Eigen::RowVector2d& p, const Eigen::RowVector2d& q) {
  const double da = p[0] - q[0];
  const double db = p[1] - q[1];
  return da * da + db * db;
}

// k-means++: first centroid uniform, then proportional to squared distance
// from the nearest chosen centroid.
Points seed_centroids(const Points& pts, int k, Rng& rng) {
  const long n = pts.rows();
  Points centroids(k, 2);
  centroids.row(0) = pts.row(static_cast<long>(rng.bounded(n)));
  Eigen::VectorXd d2(n);
  for (long i = 0; i < n; ++i) d2[i] = sq_dist(pts.row(i), centroids.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    long pick;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      double acc = 0.0;
      for (long i = 0; i < n; ++i) {
        acc += d2[i];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<long>(rng.bounded(n));
    }
    centroids.row(c) = pts.row(pick);
    for (long i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_dist(pts.row(i), centroids.row(c)));
  }
  return centroids;
}

// Nearest centroid per point, ties to the lowest index. Returns the summed
// squared distance.
double assign(const Points& pts, const Points& centroids, std::vector<int>& labels) {
  const long n = pts.rows();
  const int k = static_cast<int>(centroids.rows());
  double objective = 0.0;
  for (long i = 0; i < n; ++i) {
    int best = 0;
    double best_d = sq_dist(pts.row(i), centroids.row(0));
    for (int c = 1; c < k; ++c) {
      const double d = sq_dist(pts.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    objective += best_d;
  }
  return objective;
}

struct LloydRun {
  Points centroids;
  std::vector<int> labels;
  double objective = 0.0;
  std::vector<double> objective_history;
};

LloydRun lloyd(const Points& pts, const KMeansConfig& cfg, std::uint64_t seed) {
  const long n = pts.rows();
  Rng rng(seed);
  Points centroids = seed_centroids(pts, cfg.k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n));

  LloydRun res;
  double objective = assign(pts, centroids, labels);
  res.objective_history.push_back(objective);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    Points sums = Points::Zero(cfg.k, 2);
    std::vector<long> counts(static_cast<std::size_t>(cfg.k), 0);
    for (long i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += pts.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    Points next(cfg.k, 2);
    for (int c = 0; c < cfg.k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Reseed an empty cluster to the pixel farthest from its assigned
        // centroid; the reassignment below can only lower the objective.
        long far_idx = 0;
        double far_d = -1.0;
        for (long i = 0; i < n; ++i) {
          const double d = sq_dist(pts.row(i), centroids.row(labels[static_cast<std::size_t>(i)]));
          if (d > far_d) {
            far_d = d;
            far_idx = i;
          }
        }
        next.row(c) = pts.row(far_idx);
      }
    }
    double movement = 0.0;
    for (int c = 0; c < cfg.k; ++c)
      movement = std::max(movement, std::sqrt(sq_dist(next.row(c), centroids.row(c))));
    centroids = next;
    objective = assign(pts, centroids, labels);
    res.objective_history.push_back(objective);
    if (movement < cfg.tolerance) break;
  }

  res.centroids = std::move(centroids);
  res.labels = std::move(labels);
  res.objective = objective;
  return res;
}

}  // namespace

SegmentationResult kmeans_ab(const ImageF& lab, const KMeansConfig& cfg) {
  if (lab.space != Colorspace::lab)
    fail(Errc::wrong_colorspace, "kmeans_ab expects a lab image");
  if (cfg.k < 1) fail(Errc::invalid_argument, "k must be at least 1");
  if (cfg.restarts < 1) fail(Errc::invalid_argument, "restarts must be at least 1");
  const long n = lab.pixel_count();
  if (n < cfg.k) fail(Errc::too_few_pixels, "fewer pixels than clusters");

  Points pts(n, 2);
  for (int y = 0; y < lab.height; ++y)
    for (int x = 0; x < lab.width; ++x) {
      const long i = static_cast<long>(y) * lab.width + x;
      pts(i, 0) = lab.at(y, x, 1);
      pts(i, 1) = lab.at(y, x, 2);
    }

  LloydRun best;
  for (int r = 0; r < cfg.restarts; ++r) {
    LloydRun run = lloyd(pts, cfg, seed_mix(cfg.seed, static_cast<std::uint64_t>(r)));
    if (r == 0 || run.objective < best.objective) best = std::move(run);
  }

  SegmentationResult res;
  res.labels = LabelsXi(lab.height, lab.width);
  for (int y = 0; y < lab.height; ++y)
    for (int x = 0; x < lab.width; ++x)
      res.labels(y, x) = best.labels[static_cast<std::size_t>(y) * lab.width + x];
  res.centroids = std::move(best.centroids);
  res.objective = best.objective;
  res.objective_history = std::move(best.objective_history);
  res.cluster_sizes.assign(static_cast<std::size_t>(cfg.k), 0);
  for (long i = 0; i < n; ++i)
    ++res.cluster_sizes[static_cast<std::size_t>(best.labels[static_cast<std::size_t>(i)])];
  return res;
}

SegmentationResult select_defect_cluster(SegmentationResult seg, const ImageF& lab,
                                         const ClusterSelectionPolicy& policy) {
  if (lab.space != Colorspace::lab)
    fail(Errc::wrong_colorspace, "select_defect_cluster expects a lab image");
  if (seg.labels.rows() != lab.height || seg.labels.cols() != lab.width)
    fail(Errc::dimension_mismatch, "segmentation does not match image");
  const int k = static_cast<int>(seg.centroids.rows());

  int selected = -1;
  switch (policy.mode) {
    case SelectionMode::manual: {
      if (policy.manual_index < 0 || policy.manual_index >= k)
        fail(Errc::invalid_argument, "manual cluster index out of range");
      selected = policy.manual_index;
      break;
    }
    case SelectionMode::darkest_l: {
      Eigen::VectorXd lsum = Eigen::VectorXd::Zero(k);
      for (int y = 0; y < lab.height; ++y)
        for (int x = 0; x < lab.width; ++x)
          lsum[seg.labels(y, x)] += lab.at(y, x, 0);
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        if (seg.cluster_sizes[static_cast<std::size_t>(c)] == 0) continue;
        const double mean_l = lsum[c] / static_cast<double>(seg.cluster_sizes[static_cast<std::size_t>(c)]);
        if (mean_l < best) {
          best = mean_l;
          selected = c;
        }
      }
      break;
    }
    case SelectionMode::farthest_from_dominant: {
      int dominant = 0;
      for (int c = 1; c < k; ++c)
        if (seg.cluster_sizes[static_cast<std::size_t>(c)] > seg.cluster_sizes[static_cast<std::size_t>(dominant)])
          dominant = c;
      double best = -1.0;
      for (int c = 0; c < k; ++c) {
        const double d = (seg.centroids.row(c) - seg.centroids.row(dominant)).norm();
        if (d > best) {
          best = d;
          selected = c;
        }
      }
      break;
    }
  }

  if (selected < 0 || seg.cluster_sizes[static_cast<std::size_t>(selected)] == 0)
    fail(Errc::empty_cluster, "selected cluster has no pixels");

  seg.selected = selected;
  seg.defect_mask = (seg.labels == selected);
  return seg;
}

}  // namespace orchard
