#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/eval.hpp"
#include "orchard/imageio.hpp"
#include "orchard/rng.hpp"
#include "orchard/synth.hpp"
#include "testutil.hpp"

using namespace orchard;
using testutil::error_code_of;
using testutil::TempDir;

namespace {

FeatureTable toy_table(int classes, int per_class, std::uint64_t seed) {
  FeatureTable table;
  table.spec.id.kind = DescriptorKind::gch;
  table.spec.id.params.gch_bins = 2;
  const long dim = table.spec.id.length();
  Rng rng(seed);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = std::string(1, static_cast<char>('a' + c));
      s.path = s.label + "/" + std::to_string(i) + ".png";
      s.values.resize(dim);
      // Class-dependent mean keeps the toy problem learnable.
      for (long j = 0; j < dim; ++j) s.values[j] = rng.normal(c * 2.0, 0.25);
      table.samples.push_back(std::move(s));
    }
  return table;
}

}  // namespace

TEST_CASE("feature csv round-trips values exactly and bytes identically") {
  TempDir dir;
  Rng rng(1);
  FeatureTable table;
  table.spec = FeatureSpec::parse("gch:bins=2:cs=hsv");
  const long dim = table.spec.id.length();
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.path = "cls/img_" + std::to_string(i) + ".png";
    s.label = "cls";
    s.values.resize(dim);
    for (long j = 0; j < dim; ++j) s.values[j] = rng.uniform(-1.0, 1.0) / 3.0;
    table.samples.push_back(std::move(s));
  }
  // Values with no short decimal form must still survive.
  table.samples[0].values[0] = 1.0 / 3.0;
  table.samples[0].values[1] = 1e-17;
  table.samples[0].values[2] = 0.1;

  const auto path = dir.file("features.csv");
  write_feature_csv(table, path);
  const FeatureTable back = read_feature_csv(path);

  CHECK(back.spec == table.spec);
  REQUIRE(back.samples.size() == table.samples.size());
  for (std::size_t i = 0; i < table.samples.size(); ++i) {
    CHECK(back.samples[i].path == table.samples[i].path);
    CHECK(back.samples[i].label == table.samples[i].label);
    CHECK(back.samples[i].values == table.samples[i].values);
  }

  const auto again = dir.file("again.csv");
  write_feature_csv(back, again);
  CHECK(testutil::read_file(again) == testutil::read_file(path));
}

TEST_CASE("feature csv rejects malformed input") {
  TempDir dir;
  const auto path = dir.file("bad.csv");

  testutil::write_file(path, "");
  CHECK(error_code_of([&] { read_feature_csv(path); }) == Errc::bad_format);

  testutil::write_file(path, "wrong,header\n");
  CHECK(error_code_of([&] { read_feature_csv(path); }) == Errc::bad_format);

  // Header but no data rows.
  testutil::write_file(path, "path,label,descriptor_id,v0\n");
  CHECK(error_code_of([&] { read_feature_csv(path); }) == Errc::empty_input);

  // Two different descriptors in one file.
  testutil::write_file(path,
                       "path,label,descriptor_id,v0\n"
                       "a.png,a,gch:bins=4:cs=rgb,0.5\n"
                       "b.png,b,gch:bins=8:cs=rgb,0.5\n");
  CHECK(error_code_of([&] { read_feature_csv(path); }) == Errc::bad_format);

  // Row with the wrong number of values.
  testutil::write_file(path,
                       "path,label,descriptor_id,v0,v1\n"
                       "a.png,a,gch:bins=4:cs=rgb,0.5\n");
  CHECK(error_code_of([&] { read_feature_csv(path); }) == Errc::bad_format);

  CHECK(error_code_of([&] { read_feature_csv(dir.file("missing.csv")); }) ==
        Errc::file_not_found);
}

TEST_CASE("group_samples sorts classes and keeps file order within a class") {
  FeatureTable table;
  table.spec.id.kind = DescriptorKind::gch;
  table.spec.id.params.gch_bins = 2;
  for (const char* name : {"rot", "blotch", "rot", "normal"}) {
    Sample s;
    s.label = name;
    s.path = std::string(name) + std::to_string(table.samples.size());
    s.values = Eigen::VectorXd::Constant(8, static_cast<double>(table.samples.size()));
    table.samples.push_back(std::move(s));
  }
  const Dataset ds = group_samples(table);
  CHECK(ds.classes == std::vector<std::string>{"blotch", "normal", "rot"});
  CHECK(ds.feature_length == 8);
  REQUIRE(ds.by_class.size() == 3);
  CHECK(ds.by_class[0].size() == 1);
  CHECK(ds.by_class[1].size() == 1);
  REQUIRE(ds.by_class[2].size() == 2);
  // rot samples keep their original order (values 0 then 2).
  CHECK(ds.by_class[2][0][0] == 0.0);
  CHECK(ds.by_class[2][1][0] == 2.0);
}

TEST_CASE("split keeps exact train counts and loses nothing") {
  const FeatureTable table = toy_table(4, 12, 5);
  const Dataset ds = group_samples(table);

  const Split split = split_dataset(ds, 8, 42, 0);
  CHECK(split.train_x.rows() == 32);
  CHECK(split.train_y.size() == 32);
  CHECK(split.test_x.rows() == 16);
  CHECK(split.test_y.size() == 16);

  for (int c = 0; c < 4; ++c) {
    CHECK(std::count(split.train_y.begin(), split.train_y.end(), c) == 8);
    CHECK(std::count(split.test_y.begin(), split.test_y.end(), c) == 4);
  }

  // Each class's train and test rows partition its sample multiset.
  for (int c = 0; c < 4; ++c) {
    std::multiset<double> original, recovered;
    for (const auto& v : ds.by_class[static_cast<std::size_t>(c)]) original.insert(v[0]);
    for (long i = 0; i < split.train_x.rows(); ++i)
      if (split.train_y[static_cast<std::size_t>(i)] == c)
        recovered.insert(split.train_x(i, 0));
    for (long i = 0; i < split.test_x.rows(); ++i)
      if (split.test_y[static_cast<std::size_t>(i)] == c)
        recovered.insert(split.test_x(i, 0));
    CHECK(original == recovered);
  }
}

TEST_CASE("splits are deterministic per trial and differ across trials") {
  const FeatureTable table = toy_table(3, 10, 6);
  const Dataset ds = group_samples(table);

  const Split a = split_dataset(ds, 5, 7, 2);
  const Split b = split_dataset(ds, 5, 7, 2);
  CHECK(a.train_x == b.train_x);
  CHECK(a.test_x == b.test_x);
  CHECK(a.train_y == b.train_y);

  const Split c = split_dataset(ds, 5, 7, 3);
  CHECK(a.train_x != c.train_x);
}

TEST_CASE("uneven class sizes split like the published counts") {
  // Four classes of different sizes, 50 training samples each: the test set
  // keeps whatever remains.
  FeatureTable table;
  table.spec.id.kind = DescriptorKind::gch;
  table.spec.id.params.gch_bins = 2;
  const std::vector<std::pair<std::string, int>> sizes = {
      {"blotch", 104}, {"normal", 80}, {"rot", 107}, {"scab", 100}};
  Rng rng(8);
  for (const auto& [name, count] : sizes)
    for (int i = 0; i < count; ++i) {
      Sample s;
      s.label = name;
      s.path = name + std::to_string(i);
      s.values = Eigen::VectorXd::Constant(8, rng.uniform());
      table.samples.push_back(std::move(s));
    }
  const Dataset ds = group_samples(table);
  const Split split = split_dataset(ds, 50, 1, 0);
  CHECK(split.train_y.size() == 200);
  CHECK(split.test_y.size() == 391 - 200);
}

TEST_CASE("split rejects train sizes that leave no test samples") {
  const FeatureTable table = toy_table(2, 6, 9);
  const Dataset ds = group_samples(table);
  CHECK(error_code_of([&] { split_dataset(ds, 6, 1, 0); }) ==
        Errc::insufficient_examples);
  CHECK(error_code_of([&] { split_dataset(ds, 0, 1, 0); }) == Errc::invalid_argument);
  // One test sample per class is still allowed.
  const Split split = split_dataset(ds, 5, 1, 0);
  CHECK(split.test_y.size() == 2);
}

TEST_CASE("accuracy is the fraction of agreeing labels") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 100.0);
  CHECK(accuracy({1, 2, 3, 4}, {1, 2, 0, 0}) == 50.0);
  CHECK(accuracy({0}, {1}) == 0.0);
  CHECK(error_code_of([] { accuracy({1}, {1, 2}); }) == Errc::length_mismatch);
  CHECK(error_code_of([] { accuracy({}, {}); }) == Errc::empty_input);

  Rng rng(10);
  std::vector<int> pred, act;
  for (int i = 0; i < 101; ++i) {
    pred.push_back(static_cast<int>(rng.bounded(4)));
    act.push_back(static_cast<int>(rng.bounded(4)));
  }
  long agree = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == act[i]) ++agree;
  CHECK(accuracy(pred, act) ==
        doctest::Approx(100.0 * static_cast<double>(agree) / 101.0).epsilon(1e-12));
}

TEST_CASE("per-class accuracy isolates each class") {
  // Class 0 all right, class 1 all wrong, class 2 half.
  const std::vector<int> actual = {0, 0, 1, 1, 2, 2};
  const std::vector<int> predicted = {0, 0, 0, 2, 2, 1};
  const auto per = per_class_accuracy(predicted, actual, 3);
  REQUIRE(per.size() == 3);
  CHECK(per[0] == 100.0);
  CHECK(per[1] == 0.0);
  CHECK(per[2] == 50.0);
}

TEST_CASE("overall accuracy is the test-count-weighted mean of per-class") {
  Rng rng(11);
  std::vector<int> pred, act;
  std::vector<long> counts = {13, 29, 7, 51};
  for (int c = 0; c < 4; ++c)
    for (long i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
      act.push_back(c);
      pred.push_back(static_cast<int>(rng.bounded(4)));
    }
  const auto per = per_class_accuracy(pred, act, 4);
  double weighted = 0.0;
  long total = 0;
  for (int c = 0; c < 4; ++c) {
    weighted += per[static_cast<std::size_t>(c)] *
                static_cast<double>(counts[static_cast<std::size_t>(c)]);
    total += counts[static_cast<std::size_t>(c)];
  }
  CHECK(accuracy(pred, act) ==
        doctest::Approx(weighted / static_cast<double>(total)).epsilon(1e-9));
}

TEST_CASE("scan_class_dirs lists class folders sorted") {
  TempDir dir;
  Rng rng(12);
  for (const char* cls : {"beta", "alpha"}) {
    std::filesystem::create_directories(dir.path() / cls);
    for (int i = 0; i < 3; ++i) {
      const ImageU8 img = testutil::random_rgb_image(rng, 8, 8);
      save_png(img, (dir.path() / cls / ("img_" + std::to_string(i) + ".png")).string());
    }
  }
  // Non-image clutter is ignored.
  testutil::write_file(dir.file("alpha/readme.txt"), "notes");

  const auto items = scan_class_dirs(dir.path().string());
  REQUIRE(items.size() == 6);
  CHECK(items[0].label == "alpha");
  CHECK(items[5].label == "beta");
  CHECK(items[0].path < items[1].path);

  std::filesystem::create_directories(dir.path() / "empty_class");
  CHECK(error_code_of([&] { scan_class_dirs(dir.path().string()); }) ==
        Errc::empty_class_dir);
}

TEST_CASE("scan_class_dirs fails on an empty root") {
  TempDir dir;
  CHECK(error_code_of([&] { scan_class_dirs(dir.path().string()); }) == Errc::no_classes);
  CHECK(error_code_of([&] { scan_class_dirs(dir.file("nowhere")); }) ==
        Errc::file_not_found);
}

TEST_CASE("segmentation and extraction do not depend on thread count") {
  TempDir dir;
  SynthConfig cfg;
  cfg.size = 64;
  cfg.per_class = 2;
  cfg.seed = 31;
  generate_dataset(dir.path().string(), cfg);

  KMeansConfig kmeans;
  ClusterSelectionPolicy policy;
  const auto one = segment_dataset(dir.path().string(), kmeans, policy, 5, 1);
  const auto two = segment_dataset(dir.path().string(), kmeans, policy, 5, 3);
  REQUIRE(one.size() == 8);
  REQUIRE(two.size() == 8);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].path == two[i].path);
    CHECK(one[i].label == two[i].label);
    CHECK((one[i].mask == two[i].mask).all());
  }

  const FeatureSpec spec = FeatureSpec::parse("gch:bins=2:cs=hsv");
  const FeatureTable ta = extract_features(one, spec, 1);
  const FeatureTable tb = extract_features(two, spec, 2);
  REQUIRE(ta.samples.size() == tb.samples.size());
  for (std::size_t i = 0; i < ta.samples.size(); ++i) {
    CHECK(ta.samples[i].path == tb.samples[i].path);
    CHECK(ta.samples[i].values == tb.samples[i].values);
  }
}

TEST_CASE("extraction failures carry the offending image path") {
  std::vector<SegmentedImage> images(1);
  images[0].path = "weird/img.png";
  images[0].label = "weird";
  images[0].rgb = ImageU8(16, 16, Colorspace::rgb8);
  images[0].mask = MaskXb(16, 16);
  images[0].mask.setConstant(false);  // nothing to extract from

  const FeatureSpec spec = FeatureSpec::parse("gch:bins=2:cs=rgb");
  try {
    extract_features(images, spec, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_mask);
    CHECK(e.message().find("weird/img.png") != std::string::npos);
  }
}

TEST_CASE("report csv round-trips byte-identically") {
  TempDir dir;
  Report report;
  report.seed = 77;
  report.trials = 2;
  report.specs = {"gch:bins=4:cs=rgb", "clbp:n=8:r=1:thr=mag:cs=hsv"};
  report.classes = {"blotch", "normal", "rot", "scab"};
  Rng rng(13);
  for (const char* feature : {"gch", "clbp"})
    for (long m : {10L, 50L})
      for (long trial = 0; trial < 2; ++trial) {
        ReportRow row;
        row.feature = feature;
        row.colorspace = feature == std::string("gch") ? "rgb" : "hsv";
        row.train_per_class = m;
        row.trial = trial;
        row.per_class = {rng.uniform(0.0, 100.0), 100.0 / 3.0, rng.uniform(0.0, 100.0),
                         25.0};
        row.overall = (row.per_class[0] + row.per_class[1] + row.per_class[2] +
                       row.per_class[3]) /
                      4.0;
        report.rows.push_back(std::move(row));
      }

  const auto path = dir.file("report.csv");
  write_report_csv(report, path);
  const Report back = read_report_csv(path);

  CHECK(back.seed == report.seed);
  CHECK(back.trials == report.trials);
  CHECK(back.specs == report.specs);
  CHECK(back.classes == report.classes);
  REQUIRE(back.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(back.rows[i].feature == report.rows[i].feature);
    CHECK(back.rows[i].colorspace == report.rows[i].colorspace);
    CHECK(back.rows[i].train_per_class == report.rows[i].train_per_class);
    CHECK(back.rows[i].trial == report.rows[i].trial);
    CHECK(back.rows[i].overall == report.rows[i].overall);
    CHECK(back.rows[i].per_class == report.rows[i].per_class);
  }

  const auto again = dir.file("again.csv");
  write_report_csv(back, again);
  CHECK(testutil::read_file(again) == testutil::read_file(path));

  // mean_overall averages the matching rows.
  const double want =
      (report.rows[0].overall + report.rows[1].overall) / 2.0;
  CHECK(report.mean_overall("gch", "rgb", 10) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sweep produces one row per spec, size, and trial, deterministically") {
  std::vector<FeatureTable> tables;
  tables.push_back(toy_table(3, 14, 21));
  tables.back().spec = FeatureSpec::parse("gch:bins=2:cs=rgb");
  tables.push_back(toy_table(3, 14, 22));
  tables.back().spec = FeatureSpec::parse("gch:bins=2:cs=hsv");

  SweepConfig cfg;
  cfg.train_sizes = {4, 8};
  cfg.trials = 3;
  cfg.seed = 5;

  const Report report = sweep_features(tables, cfg);
  REQUIRE(report.rows.size() == 2 * 2 * 3);
  CHECK(report.classes == std::vector<std::string>{"a", "b", "c"});
  CHECK(report.specs.size() == 2);

  // Nesting order: spec outer, then train size, then trial.
  CHECK(report.rows[0].colorspace == "rgb");
  CHECK(report.rows[0].train_per_class == 4);
  CHECK(report.rows[0].trial == 0);
  CHECK(report.rows[1].trial == 1);
  CHECK(report.rows[3].train_per_class == 8);
  CHECK(report.rows[6].colorspace == "hsv");

  for (const auto& row : report.rows) {
    CHECK(row.overall >= 0.0);
    CHECK(row.overall <= 100.0);
    REQUIRE(row.per_class.size() == 3);
    // The toy classes are far apart, so the sweep should learn them.
    CHECK(row.overall > 80.0);
  }

  // Same config, same rows; more threads, same rows.
  const Report again = sweep_features(tables, cfg);
  SweepConfig threaded = cfg;
  threaded.threads = 3;
  const Report parallel = sweep_features(tables, threaded);
  REQUIRE(again.rows.size() == report.rows.size());
  REQUIRE(parallel.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(again.rows[i].overall == report.rows[i].overall);
    CHECK(parallel.rows[i].overall == report.rows[i].overall);
    CHECK(parallel.rows[i].per_class == report.rows[i].per_class);
  }
}

TEST_CASE("sweep rejects tables that disagree on samples") {
  std::vector<FeatureTable> tables;
  tables.push_back(toy_table(3, 6, 31));
  tables.back().spec = FeatureSpec::parse("gch:bins=2:cs=rgb");
  tables.push_back(toy_table(3, 7, 32));  // different sample count
  tables.back().spec = FeatureSpec::parse("gch:bins=2:cs=hsv");

  SweepConfig cfg;
  cfg.train_sizes = {3};
  cfg.trials = 1;
  CHECK(error_code_of([&] { sweep_features(tables, cfg); }) == Errc::invalid_argument);

  CHECK(error_code_of([&] { sweep_features({}, cfg); }) == Errc::empty_input);
}
