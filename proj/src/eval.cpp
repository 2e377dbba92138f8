#include "orchard/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "orchard/color.hpp"
#include "orchard/error.hpp"
#include "orchard/imageio.hpp"
#include "orchard/parallel.hpp"
#include "orchard/rng.hpp"
#include "orchard/text.hpp"

namespace fs = std::filesystem;

namespace orchard {

void write_feature_csv(const FeatureTable& table, const std::string& path) {
  if (table.samples.empty()) fail(Errc::empty_input, "feature table has no samples");
  const long len = table.spec.id.length();
  for (const auto& s : table.samples)
    if (s.values.size() != len)
      fail(Errc::length_mismatch, "sample '" + s.path + "' does not match the descriptor length");

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << "path,label,descriptor_id";
  for (long k = 0; k < len; ++k) out << ",v" << k;
  out << "\n";
  const std::string spec = table.spec.str();
  for (const auto& s : table.samples) {
    out << csv_quote(s.path) << ',' << csv_quote(s.label) << ',' << spec;
    for (long k = 0; k < len; ++k) out << ',' << fmt_double(s.values[k]);
    out << "\n";
  }
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

FeatureTable read_feature_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, path);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::bad_format, "empty feature csv: " + path);
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "path" || header[1] != "label" ||
      header[2] != "descriptor_id")
    fail(Errc::bad_format, "bad feature csv header: " + path);
  const long len = static_cast<long>(header.size()) - 3;
  for (long k = 0; k < len; ++k)
    if (header[static_cast<size_t>(k) + 3] != "v" + std::to_string(k))
      fail(Errc::bad_format, "bad value column name in " + path);

  FeatureTable table;
  bool first = true;
  std::string spec_str;
  while (std::getline(in, line)) {
    const auto fields = csv_split_line(line);
    if (static_cast<long>(fields.size()) != len + 3)
      fail(Errc::bad_format, "row width does not match header in " + path);
    if (first) {
      spec_str = fields[2];
      table.spec = FeatureSpec::parse(spec_str);
      if (table.spec.id.length() != len)
        fail(Errc::bad_format, "descriptor length does not match value columns in " + path);
      first = false;
    } else if (fields[2] != spec_str) {
      fail(Errc::bad_format, "mixed descriptor ids in " + path);
    }
    Sample s;
    s.path = fields[0];
    s.label = fields[1];
    s.values.resize(len);
    for (long k = 0; k < len; ++k) s.values[k] = parse_double(fields[static_cast<size_t>(k) + 3]);
    table.samples.push_back(std::move(s));
  }
  if (first) fail(Errc::empty_input, "feature csv has no rows: " + path);
  return table;
}

Dataset group_samples(const FeatureTable& table) {
  if (table.samples.empty()) fail(Errc::empty_input, "feature table has no samples");
  Dataset ds;
  ds.feature_length = table.spec.id.length();

  std::set<std::string> labels;
  for (const auto& s : table.samples) labels.insert(s.label);
  ds.classes.assign(labels.begin(), labels.end());
  ds.by_class.resize(ds.classes.size());

  std::map<std::string, size_t> index;
  for (size_t k = 0; k < ds.classes.size(); ++k) index[ds.classes[k]] = k;
  for (const auto& s : table.samples) {
    if (s.values.size() != ds.feature_length)
      fail(Errc::length_mismatch, "sample '" + s.path + "' has the wrong length");
    ds.by_class[index[s.label]].push_back(s.values);
  }
  return ds;
}

Split split_dataset(const Dataset& ds, long train_per_class, std::uint64_t seed, long trial) {
  if (ds.classes.empty()) fail(Errc::no_classes, "dataset has no classes");
  if (train_per_class < 1) fail(Errc::invalid_argument, "train size must be >= 1");

  long n_train = 0, n_test = 0;
  for (size_t k = 0; k < ds.classes.size(); ++k) {
    const long nk = static_cast<long>(ds.by_class[k].size());
    if (nk <= train_per_class)
      fail(Errc::insufficient_examples,
           "class '" + ds.classes[k] + "' has " + std::to_string(nk) +
               " samples; training on " + std::to_string(train_per_class) + " leaves no test");
    n_train += train_per_class;
    n_test += nk - train_per_class;
  }

  Split sp;
  sp.train_x.resize(n_train, ds.feature_length);
  sp.test_x.resize(n_test, ds.feature_length);
  sp.train_y.resize(static_cast<size_t>(n_train));
  sp.test_y.resize(static_cast<size_t>(n_test));

  long tr = 0, te = 0;
  for (size_t k = 0; k < ds.classes.size(); ++k) {
    const long nk = static_cast<long>(ds.by_class[k].size());
    std::vector<long> idx(static_cast<size_t>(nk));
    std::iota(idx.begin(), idx.end(), 0L);
    Rng rng(seed_mix(seed, seed_stage_split, static_cast<std::uint64_t>(trial),
                     static_cast<std::uint64_t>(k)));
    rng.shuffle(idx);
    for (long i = 0; i < nk; ++i) {
      const Eigen::VectorXd& v = ds.by_class[k][static_cast<size_t>(idx[static_cast<size_t>(i)])];
      if (i < train_per_class) {
        sp.train_x.row(tr) = v;
        sp.train_y[static_cast<size_t>(tr)] = static_cast<int>(k);
        ++tr;
      } else {
        sp.test_x.row(te) = v;
        sp.test_y[static_cast<size_t>(te)] = static_cast<int>(k);
        ++te;
      }
    }
  }
  return sp;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size())
    fail(Errc::length_mismatch, "prediction and label counts differ");
  if (actual.empty()) fail(Errc::empty_input, "nothing to score");
  long correct = 0;
  for (size_t i = 0; i < actual.size(); ++i)
    if (predicted[i] == actual[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(actual.size());
}

std::vector<double> per_class_accuracy(const std::vector<int>& predicted,
                                       const std::vector<int>& actual, int n_classes) {
  if (predicted.size() != actual.size())
    fail(Errc::length_mismatch, "prediction and label counts differ");
  if (n_classes < 1) fail(Errc::invalid_argument, "need at least one class");
  std::vector<long> total(static_cast<size_t>(n_classes), 0);
  std::vector<long> correct(static_cast<size_t>(n_classes), 0);
  for (size_t i = 0; i < actual.size(); ++i) {
    const int y = actual[i];
    if (y < 0 || y >= n_classes) fail(Errc::invalid_argument, "label out of range");
    ++total[static_cast<size_t>(y)];
    if (predicted[i] == y) ++correct[static_cast<size_t>(y)];
  }
  std::vector<double> acc(static_cast<size_t>(n_classes));
  for (int k = 0; k < n_classes; ++k) {
    if (total[static_cast<size_t>(k)] == 0)
      fail(Errc::empty_class, "class " + std::to_string(k) + " has no samples to score");
    acc[static_cast<size_t>(k)] = 100.0 * static_cast<double>(correct[static_cast<size_t>(k)]) /
                                  static_cast<double>(total[static_cast<size_t>(k)]);
  }
  return acc;
}

std::vector<LabeledImage> scan_class_dirs(const std::string& root) {
  std::error_code ec;
  if (!fs::exists(root, ec) || ec) fail(Errc::file_not_found, root);
  if (!fs::is_directory(root)) fail(Errc::invalid_argument, root + " is not a directory");

  std::vector<std::string> classes;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) classes.push_back(entry.path().filename().string());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) fail(Errc::no_classes, "no class directories under " + root);

  std::vector<LabeledImage> out;
  for (const auto& cls : classes) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(root) / cls)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(Errc::empty_class_dir, "no images in class directory '" + cls + "'");
    for (auto& f : files) out.push_back({std::move(f), cls});
  }
  return out;
}

std::vector<SegmentedImage> segment_dataset(const std::string& root, const KMeansConfig& kmeans,
                                            const ClusterSelectionPolicy& policy,
                                            std::uint64_t seed, int threads) {
  const auto items = scan_class_dirs(root);
  std::vector<SegmentedImage> out(items.size());
  parallel_for(static_cast<long>(items.size()), threads, [&](long i) {
    const auto& item = items[static_cast<size_t>(i)];
    ImageU8 rgb = load_image(item.path);
    const ImageF lab = rgb_to_lab(rgb);
    KMeansConfig cfg = kmeans;
    cfg.seed = seed_mix(seed, seed_stage_segment, static_cast<std::uint64_t>(i));
    auto seg = select_defect_cluster(kmeans_ab(lab, cfg), lab, policy);
    out[static_cast<size_t>(i)] =
        SegmentedImage{item.path, item.label, std::move(rgb), std::move(seg.defect_mask)};
  });
  return out;
}

FeatureTable extract_features(const std::vector<SegmentedImage>& images, const FeatureSpec& spec,
                              int threads) {
  if (images.empty()) fail(Errc::empty_input, "no images to extract from");
  FeatureTable table;
  table.spec = spec;
  table.samples.resize(images.size());
  parallel_for(static_cast<long>(images.size()), threads, [&](long i) {
    const auto& im = images[static_cast<size_t>(i)];
    try {
      FeatureVector fv = extract(im.rgb, spec.id, spec.colorspace, &im.mask);
      table.samples[static_cast<size_t>(i)] = Sample{im.path, im.label, std::move(fv.values)};
    } catch (const Error& e) {
      fail(e.code(), im.path + ": " + e.message());
    }
  });
  return table;
}

double Report::mean_overall(const std::string& feature, const std::string& colorspace,
                            long train_per_class) const {
  double sum = 0.0;
  long n = 0;
  for (const auto& row : rows) {
    if (row.feature != feature || row.colorspace != colorspace ||
        row.train_per_class != train_per_class)
      continue;
    sum += row.overall;
    ++n;
  }
  if (n == 0)
    fail(Errc::invalid_argument, "no rows for " + feature + "/" + colorspace + "/M=" +
                                     std::to_string(train_per_class));
  return sum / static_cast<double>(n);
}

namespace {

constexpr const char* kReportMagic = "# orchard-report 1";

std::string join(const std::vector<std::string>& parts, char delim) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += delim;
    out += parts[i];
  }
  return out;
}

}  // namespace

void write_report_csv(const Report& report, const std::string& path) {
  if (report.classes.empty()) fail(Errc::no_classes, "report has no classes");
  for (const auto& row : report.rows)
    if (row.per_class.size() != report.classes.size())
      fail(Errc::length_mismatch, "report row does not cover every class");

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << kReportMagic << " seed=" << report.seed << " trials=" << report.trials
      << " specs=" << join(report.specs, ';') << "\n";
  out << "feature,colorspace,M,trial,overall_acc";
  for (const auto& cls : report.classes) out << ',' << csv_quote("acc_" + cls);
  out << "\n";
  for (const auto& row : report.rows) {
    out << row.feature << ',' << row.colorspace << ',' << row.train_per_class << ','
        << row.trial << ',' << fmt_double(row.overall);
    for (double v : row.per_class) out << ',' << fmt_double(v);
    out << "\n";
  }
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

Report read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, path);

  std::string line;
  if (!std::getline(in, line) || line.rfind(kReportMagic, 0) != 0)
    fail(Errc::bad_format, "not an orchard report: " + path);

  Report report;
  for (const auto& token : split(line.substr(std::string(kReportMagic).size()), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string::npos) fail(Errc::bad_format, "bad report metadata: '" + token + "'");
    const std::string key = token.substr(0, eq), val = token.substr(eq + 1);
    if (key == "seed")
      report.seed = static_cast<std::uint64_t>(parse_long(val));
    else if (key == "trials")
      report.trials = parse_long(val);
    else if (key == "specs") {
      if (!val.empty())
        for (auto& s : split(val, ';')) report.specs.push_back(std::move(s));
    } else {
      fail(Errc::bad_format, "unknown report metadata key: '" + key + "'");
    }
  }

  if (!std::getline(in, line)) fail(Errc::bad_format, "report has no header: " + path);
  const auto header = csv_split_line(line);
  if (header.size() < 6 || header[0] != "feature" || header[1] != "colorspace" ||
      header[2] != "M" || header[3] != "trial" || header[4] != "overall_acc")
    fail(Errc::bad_format, "bad report header: " + path);
  for (size_t k = 5; k < header.size(); ++k) {
    if (header[k].rfind("acc_", 0) != 0)
      fail(Errc::bad_format, "bad per-class column '" + header[k] + "' in " + path);
    report.classes.push_back(header[k].substr(4));
  }

  while (std::getline(in, line)) {
    const auto fields = csv_split_line(line);
    if (fields.size() != 5 + report.classes.size())
      fail(Errc::bad_format, "row width does not match header in " + path);
    ReportRow row;
    row.feature = fields[0];
    row.colorspace = fields[1];
    row.train_per_class = parse_long(fields[2]);
    row.trial = parse_long(fields[3]);
    row.overall = parse_double(fields[4]);
    for (size_t k = 0; k < report.classes.size(); ++k)
      row.per_class.push_back(parse_double(fields[k + 5]));
    report.rows.push_back(std::move(row));
  }
  return report;
}

Report sweep_features(const std::vector<FeatureTable>& tables, const SweepConfig& cfg) {
  if (tables.empty()) fail(Errc::empty_input, "no feature tables");
  if (cfg.train_sizes.empty()) fail(Errc::invalid_argument, "no training sizes");
  if (cfg.trials < 1) fail(Errc::invalid_argument, "trials must be >= 1");
  cfg.train.validate();

  std::vector<Dataset> datasets;
  datasets.reserve(tables.size());
  for (const auto& table : tables) datasets.push_back(group_samples(table));
  for (size_t s = 1; s < datasets.size(); ++s) {
    if (datasets[s].classes != datasets[0].classes)
      fail(Errc::invalid_argument, "feature tables disagree on classes");
    for (size_t k = 0; k < datasets[0].classes.size(); ++k)
      if (datasets[s].by_class[k].size() != datasets[0].by_class[k].size())
        fail(Errc::invalid_argument, "feature tables disagree on sample counts");
  }

  Report report;
  report.seed = cfg.seed;
  report.trials = cfg.trials;
  for (const auto& table : tables) report.specs.push_back(table.spec.str());
  report.classes = datasets[0].classes;

  const long n_m = static_cast<long>(cfg.train_sizes.size());
  const long n_cells = static_cast<long>(tables.size()) * n_m * cfg.trials;
  report.rows.resize(static_cast<size_t>(n_cells));

  parallel_for(n_cells, cfg.threads, [&](long cell) {
    const long s = cell / (n_m * cfg.trials);
    const long rem = cell % (n_m * cfg.trials);
    const long mi = rem / cfg.trials;
    const long trial = rem % cfg.trials;
    const long m = cfg.train_sizes[static_cast<size_t>(mi)];
    const FeatureSpec& spec = tables[static_cast<size_t>(s)].spec;

    const Split sp = split_dataset(datasets[static_cast<size_t>(s)], m, cfg.seed, trial);
    TrainConfig tc = cfg.train;
    tc.seed = seed_mix(cfg.seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(mi),
                       static_cast<std::uint64_t>(trial));
    const MsvmModel model =
        train_multiclass(sp.train_x, sp.train_y, report.classes, spec, tc);

    std::vector<int> predicted(sp.test_y.size());
    for (long i = 0; i < sp.test_x.rows(); ++i)
      predicted[static_cast<size_t>(i)] = predict_index(model, sp.test_x.row(i));

    ReportRow row;
    row.feature = to_string(spec.id.kind);
    row.colorspace = to_string(spec.colorspace);
    row.train_per_class = m;
    row.trial = trial;
    row.overall = accuracy(predicted, sp.test_y);
    row.per_class =
        per_class_accuracy(predicted, sp.test_y, static_cast<int>(report.classes.size()));
    report.rows[static_cast<size_t>(cell)] = std::move(row);
  });
  return report;
}

}  // namespace orchard
