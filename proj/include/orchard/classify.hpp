#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "orchard/features.hpp"

namespace orchard {

struct BinarySvm {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double decision(const Eigen::VectorXd& x) const;
};

struct TrainConfig {
  double c = 1.0;
  int max_epochs = 1000;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  void validate() const;
};

// L1 hinge-loss linear SVM via dual coordinate descent with an augmented
// constant-1 bias feature. Examples are brought into a canonical order first
// so the result does not depend on row order. labels are +1 / -1.
BinarySvm train_binary(const Eigen::MatrixXd& examples, const std::vector<int>& labels,
                       const TrainConfig& cfg);

// One column per class pair (i, j), i < j, in lexicographic order: +1 in row
// i, -1 in row j, 0 elsewhere.
Eigen::MatrixXi build_id_table(int n_classes);

std::vector<std::pair<int, int>> class_pairs(int n_classes);

enum class DecodeMetric { literal, ignore_zeros };

constexpr const char* to_string(DecodeMetric m) {
  return m == DecodeMetric::literal ? "literal" : "ignore_zeros";
}

// Row of the table closest (Euclidean) to the sign vector. literal treats the
// zero entries as ordinary coordinates; ignore_zeros drops them from that
// row's distance. Ties go to the lowest class index.
int decode(const Eigen::VectorXd& signs, const Eigen::MatrixXi& table, DecodeMetric metric);

// Euclidean distance from the sign vector to every row under the metric.
Eigen::VectorXd decode_distances(const Eigen::VectorXd& signs, const Eigen::MatrixXi& table,
                                 DecodeMetric metric);

struct MsvmModel {
  std::vector<std::string> classes;
  FeatureSpec spec;
  double c = 1.0;
  std::uint64_t seed = 0;
  DecodeMetric metric = DecodeMetric::literal;
  long feature_length = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<BinarySvm> learners;

  Eigen::MatrixXi id_table() const { return build_id_table(static_cast<int>(classes.size())); }
};

// Trains one learner per class pair. labels index into class_names; every
// class must have at least one example.
MsvmModel train_multiclass(const Eigen::MatrixXd& examples, const std::vector<int>& labels,
                           const std::vector<std::string>& class_names, const FeatureSpec& spec,
                           const TrainConfig& cfg);

// Per-learner decisions collapsed to +1 / -1 (a decision of exactly 0 counts
// as +1).
Eigen::VectorXd decision_signs(const MsvmModel& model, const Eigen::VectorXd& x);

int predict_index(const MsvmModel& model, const Eigen::VectorXd& x);
const std::string& predict(const MsvmModel& model, const Eigen::VectorXd& x);

// Versioned line-oriented text format; numbers round-trip exactly.
void save_model(const MsvmModel& model, const std::string& path);
MsvmModel load_model(const std::string& path);

}  // namespace orchard
