#include "orchard/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "orchard/error.hpp"
#include "orchard/rng.hpp"
#include "orchard/text.hpp"

namespace orchard {

double BinarySvm::decision(const Eigen::VectorXd& x) const {
  if (x.size() != weights.size())
    fail(Errc::length_mismatch, "feature vector does not match learner dimension");
  return weights.dot(x) + bias;
}

void TrainConfig::validate() const {
  if (!(c > 0.0)) fail(Errc::invalid_argument, "c must be positive");
  if (max_epochs < 1) fail(Errc::invalid_argument, "max_epochs must be >= 1");
  if (!(tolerance > 0.0)) fail(Errc::invalid_argument, "tolerance must be positive");
}

BinarySvm train_binary(const Eigen::MatrixXd& examples, const std::vector<int>& labels,
                       const TrainConfig& cfg) {
  cfg.validate();
  const long n = examples.rows(), d = examples.cols();
  if (n == 0) fail(Errc::empty_input, "no training examples");
  if (static_cast<long>(labels.size()) != n)
    fail(Errc::length_mismatch, "label count does not match example count");
  long pos = 0, neg = 0;
  for (int y : labels) {
    if (y == 1)
      ++pos;
    else if (y == -1)
      ++neg;
    else
      fail(Errc::invalid_argument, "binary labels must be +1 or -1");
  }
  if (pos == 0 || neg == 0)
    fail(Errc::insufficient_examples, "need examples on both sides");

  // canonical example order (positives first, then rows lexicographic) so the
  // solution does not depend on how the caller ordered the data
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    if (labels[a] != labels[b]) return labels[a] > labels[b];
    for (long col = 0; col < d; ++col)
      if (examples(a, col) != examples(b, col)) return examples(a, col) < examples(b, col);
    return false;
  });

  Eigen::MatrixXd xs(n, d);
  std::vector<double> ys(n);
  Eigen::VectorXd qii(n);
  for (long i = 0; i < n; ++i) {
    xs.row(i) = examples.row(order[i]);
    ys[i] = labels[order[i]];
    qii[i] = xs.row(i).squaredNorm() + 1.0;  // +1 for the bias feature
  }

  // dual coordinate descent on the L1-loss dual, bias folded in as a
  // constant-1 feature
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  std::vector<long> idx(n);
  std::iota(idx.begin(), idx.end(), 0L);
  Rng rng(cfg.seed);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(idx);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (long i : idx) {
      const double g = ys[i] * (w.dot(xs.row(i)) + b) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[i] >= cfg.c)
        pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qii[i], 0.0, cfg.c);
        const double delta = (alpha[i] - old) * ys[i];
        if (delta != 0.0) {
          w += delta * xs.row(i).transpose();
          b += delta;
        }
      }
    }
    if (pg_max - pg_min < cfg.tolerance) break;
  }
  return BinarySvm{std::move(w), b};
}

std::vector<std::pair<int, int>> class_pairs(int n_classes) {
  if (n_classes < 2) fail(Errc::invalid_argument, "need at least 2 classes");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<size_t>(n_classes) * (n_classes - 1) / 2);
  for (int i = 0; i < n_classes; ++i)
    for (int j = i + 1; j < n_classes; ++j) pairs.emplace_back(i, j);
  return pairs;
}

Eigen::MatrixXi build_id_table(int n_classes) {
  const auto pairs = class_pairs(n_classes);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(n_classes, static_cast<long>(pairs.size()));
  for (size_t l = 0; l < pairs.size(); ++l) {
    table(pairs[l].first, static_cast<long>(l)) = 1;
    table(pairs[l].second, static_cast<long>(l)) = -1;
  }
  return table;
}

namespace {

Eigen::VectorXd decode_distances2(const Eigen::VectorXd& signs, const Eigen::MatrixXi& table,
                                  DecodeMetric metric) {
  if (table.rows() < 2) fail(Errc::invalid_argument, "need at least 2 classes");
  if (signs.size() != table.cols())
    fail(Errc::length_mismatch, "sign vector does not match table width");
  Eigen::VectorXd d2 = Eigen::VectorXd::Zero(table.rows());
  for (int r = 0; r < table.rows(); ++r)
    for (long l = 0; l < table.cols(); ++l) {
      const int t = table(r, l);
      if (metric == DecodeMetric::ignore_zeros && t == 0) continue;
      const double diff = signs[l] - t;
      d2[r] += diff * diff;
    }
  return d2;
}

}  // namespace

int decode(const Eigen::VectorXd& signs, const Eigen::MatrixXi& table, DecodeMetric metric) {
  const Eigen::VectorXd d2 = decode_distances2(signs, table, metric);
  int best = 0;
  for (int r = 1; r < table.rows(); ++r)
    if (d2[r] < d2[best]) best = r;
  return best;
}

Eigen::VectorXd decode_distances(const Eigen::VectorXd& signs, const Eigen::MatrixXi& table,
                                 DecodeMetric metric) {
  return decode_distances2(signs, table, metric).cwiseSqrt();
}

MsvmModel train_multiclass(const Eigen::MatrixXd& examples, const std::vector<int>& labels,
                           const std::vector<std::string>& class_names, const FeatureSpec& spec,
                           const TrainConfig& cfg) {
  cfg.validate();
  const int nc = static_cast<int>(class_names.size());
  if (nc < 2) fail(Errc::no_classes, "need at least 2 classes");
  const long n = examples.rows();
  if (n == 0) fail(Errc::empty_input, "no training examples");
  if (static_cast<long>(labels.size()) != n)
    fail(Errc::length_mismatch, "label count does not match example count");

  std::vector<long> counts(nc, 0);
  for (int lb : labels) {
    if (lb < 0 || lb >= nc) fail(Errc::invalid_argument, "label out of range");
    ++counts[lb];
  }
  for (int k = 0; k < nc; ++k)
    if (counts[k] == 0)
      fail(Errc::empty_class, "class '" + class_names[k] + "' has no examples");

  MsvmModel model;
  model.classes = class_names;
  model.spec = spec;
  model.c = cfg.c;
  model.seed = cfg.seed;
  model.feature_length = examples.cols();
  model.pairs = class_pairs(nc);
  model.learners.reserve(model.pairs.size());

  for (const auto& [i, j] : model.pairs) {
    const long m = counts[i] + counts[j];
    Eigen::MatrixXd sub(m, examples.cols());
    std::vector<int> sub_labels(m);
    long row = 0;
    for (long e = 0; e < n; ++e) {
      if (labels[e] != i && labels[e] != j) continue;
      sub.row(row) = examples.row(e);
      sub_labels[row] = labels[e] == i ? 1 : -1;
      ++row;
    }
    TrainConfig sub_cfg = cfg;
    sub_cfg.seed = seed_mix(cfg.seed, seed_stage_svm, static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(j));
    model.learners.push_back(train_binary(sub, sub_labels, sub_cfg));
  }
  return model;
}

Eigen::VectorXd decision_signs(const MsvmModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd signs(static_cast<long>(model.learners.size()));
  for (size_t l = 0; l < model.learners.size(); ++l)
    signs[static_cast<long>(l)] = model.learners[l].decision(x) >= 0.0 ? 1.0 : -1.0;
  return signs;
}

int predict_index(const MsvmModel& model, const Eigen::VectorXd& x) {
  return decode(decision_signs(model, x), model.id_table(), model.metric);
}

const std::string& predict(const MsvmModel& model, const Eigen::VectorXd& x) {
  return model.classes[static_cast<size_t>(predict_index(model, x))];
}

namespace {

constexpr const char* kModelMagic = "orchard-model 1";

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::bad_format, std::string("model file ends before ") + what);
  return line;
}

std::string expect_field(std::istream& in, const std::string& key) {
  const std::string line = next_line(in, key.c_str());
  if (line.rfind(key + " ", 0) != 0)
    fail(Errc::bad_format, "expected '" + key + " ...', got '" + line + "'");
  return line.substr(key.size() + 1);
}

}  // namespace

void save_model(const MsvmModel& model, const std::string& path) {
  const int nc = static_cast<int>(model.classes.size());
  if (nc < 2) fail(Errc::no_classes, "model has fewer than 2 classes");
  if (model.learners.size() != model.pairs.size() ||
      model.pairs != class_pairs(nc))
    fail(Errc::invalid_argument, "model learner layout is inconsistent");
  for (const auto& lrn : model.learners)
    if (lrn.weights.size() != model.feature_length)
      fail(Errc::length_mismatch, "learner dimension does not match feature length");

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << kModelMagic << "\n";
  out << "classes " << nc << "\n";
  for (const auto& name : model.classes) out << name << "\n";
  out << "feature " << model.spec.str() << "\n";
  out << "c " << fmt_double(model.c) << "\n";
  out << "seed " << model.seed << "\n";
  out << "metric " << to_string(model.metric) << "\n";
  out << "dim " << model.feature_length << "\n";
  out << "learners " << model.learners.size() << "\n";
  for (size_t l = 0; l < model.learners.size(); ++l) {
    out << "pair " << model.pairs[l].first << " " << model.pairs[l].second << "\n";
    out << "bias " << fmt_double(model.learners[l].bias) << "\n";
    out << "weights";
    for (long k = 0; k < model.feature_length; ++k)
      out << " " << fmt_double(model.learners[l].weights[k]);
    out << "\n";
  }
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

MsvmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, path);

  if (next_line(in, "magic") != kModelMagic)
    fail(Errc::bad_format, "not an orchard model file: " + path);

  MsvmModel model;
  const long nc = parse_long(expect_field(in, "classes"));
  if (nc < 2) fail(Errc::bad_format, "model has fewer than 2 classes");
  for (long k = 0; k < nc; ++k) {
    const std::string name = next_line(in, "class name");
    if (name.empty()) fail(Errc::bad_format, "empty class name");
    model.classes.push_back(name);
  }
  model.spec = FeatureSpec::parse(expect_field(in, "feature"));
  model.c = parse_double(expect_field(in, "c"));
  model.seed = static_cast<std::uint64_t>(parse_long(expect_field(in, "seed")));
  const std::string metric = expect_field(in, "metric");
  if (metric == "literal")
    model.metric = DecodeMetric::literal;
  else if (metric == "ignore_zeros")
    model.metric = DecodeMetric::ignore_zeros;
  else
    fail(Errc::bad_format, "unknown decode metric: '" + metric + "'");
  model.feature_length = parse_long(expect_field(in, "dim"));
  if (model.feature_length < 1) fail(Errc::bad_format, "bad feature length");

  const long n_learners = parse_long(expect_field(in, "learners"));
  model.pairs = class_pairs(static_cast<int>(nc));
  if (n_learners != static_cast<long>(model.pairs.size()))
    fail(Errc::bad_format, "learner count does not match class count");

  for (long l = 0; l < n_learners; ++l) {
    const auto pair_fields = split(expect_field(in, "pair"), ' ');
    if (pair_fields.size() != 2) fail(Errc::bad_format, "bad pair line");
    if (parse_long(pair_fields[0]) != model.pairs[l].first ||
        parse_long(pair_fields[1]) != model.pairs[l].second)
      fail(Errc::bad_format, "pairs out of order");
    BinarySvm lrn;
    lrn.bias = parse_double(expect_field(in, "bias"));
    const auto ws = split(expect_field(in, "weights"), ' ');
    if (static_cast<long>(ws.size()) != model.feature_length)
      fail(Errc::bad_format, "weight count does not match dim");
    lrn.weights.resize(model.feature_length);
    for (long k = 0; k < model.feature_length; ++k) lrn.weights[k] = parse_double(ws[k]);
    model.learners.push_back(std::move(lrn));
  }
  return model;
}

}  // namespace orchard
