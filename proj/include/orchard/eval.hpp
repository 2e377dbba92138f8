#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orchard/classify.hpp"
#include "orchard/features.hpp"
#include "orchard/image.hpp"
#include "orchard/segmentation.hpp"

namespace orchard {

struct Sample {
  std::string path;
  std::string label;
  Eigen::VectorXd values;
};

// Rows of a feature CSV: every sample was produced by the same descriptor.
struct FeatureTable {
  FeatureSpec spec;
  std::vector<Sample> samples;
};

// Header is path,label,descriptor_id,v0,...,v{L-1}; the values round-trip
// exactly.
void write_feature_csv(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_csv(const std::string& path);

struct Dataset {
  std::vector<std::string> classes;                    // sorted label names
  std::vector<std::vector<Eigen::VectorXd>> by_class;  // file order within class
  long feature_length = 0;
};

Dataset group_samples(const FeatureTable& table);

struct Split {
  Eigen::MatrixXd train_x;
  std::vector<int> train_y;
  Eigen::MatrixXd test_x;
  std::vector<int> test_y;
};

// Shuffles each class with its own stream derived from (seed, trial, class)
// and takes the first train_per_class for training, the rest for testing.
// Every class must keep at least one test sample.
Split split_dataset(const Dataset& ds, long train_per_class, std::uint64_t seed, long trial);

// Percentage in [0, 100].
double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);
std::vector<double> per_class_accuracy(const std::vector<int>& predicted,
                                       const std::vector<int>& actual, int n_classes);

struct LabeledImage {
  std::string path;
  std::string label;
};

// Immediate subdirectories of root are the classes; PNG/JPEG files inside
// are the samples. Classes and files come back sorted.
std::vector<LabeledImage> scan_class_dirs(const std::string& root);

struct SegmentedImage {
  std::string path;
  std::string label;
  ImageU8 rgb;
  MaskXb mask;
};

// Loads and segments every image under root. Each image's k-means stream is
// derived from (seed, image index), so the masks do not depend on thread
// count.
std::vector<SegmentedImage> segment_dataset(const std::string& root, const KMeansConfig& kmeans,
                                            const ClusterSelectionPolicy& policy,
                                            std::uint64_t seed, int threads = 1);

FeatureTable extract_features(const std::vector<SegmentedImage>& images, const FeatureSpec& spec,
                              int threads = 1);

struct ReportRow {
  std::string feature;  // descriptor kind name
  std::string colorspace;
  long train_per_class = 0;
  long trial = 0;
  double overall = 0.0;
  std::vector<double> per_class;  // one per class, class order
};

struct Report {
  std::uint64_t seed = 0;
  long trials = 0;
  std::vector<std::string> specs;  // canonical descriptor strings of the sweep
  std::vector<std::string> classes;
  std::vector<ReportRow> rows;

  double mean_overall(const std::string& feature, const std::string& colorspace,
                      long train_per_class) const;
};

// Comment line carries seed/trials/specs; data columns are
// feature,colorspace,M,trial,overall_acc,acc_<class>... A written report
// re-read and re-written is byte-identical.
void write_report_csv(const Report& report, const std::string& path);
Report read_report_csv(const std::string& path);

struct SweepConfig {
  std::vector<long> train_sizes;
  long trials = 5;
  std::uint64_t seed = 0;
  TrainConfig train;
  int threads = 1;
};

// One table per spec, all over the same samples. Produces one row per
// (spec, train size, trial); rows are in that nesting order regardless of
// thread count.
Report sweep_features(const std::vector<FeatureTable>& tables, const SweepConfig& cfg);

}  // namespace orchard
