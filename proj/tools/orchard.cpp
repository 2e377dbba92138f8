#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "orchard/classify.hpp"
#include "orchard/color.hpp"
#include "orchard/error.hpp"
#include "orchard/eval.hpp"
#include "orchard/features.hpp"
#include "orchard/imageio.hpp"
#include "orchard/segmentation.hpp"
#include "orchard/synth.hpp"
#include "orchard/text.hpp"
#include "orchard/version.hpp"

namespace fs = std::filesystem;
using namespace orchard;

namespace {

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

struct KmeansOpts {
  int k = KMeansConfig{}.k;
  int max_iters = KMeansConfig{}.max_iterations;
  double tolerance = KMeansConfig{}.tolerance;
  int restarts = KMeansConfig{}.restarts;
  std::string policy = "outlier";
};

ClusterSelectionPolicy parse_policy(const std::string& s) {
  ClusterSelectionPolicy policy;
  if (s == "darkest") {
    policy.mode = SelectionMode::darkest_l;
  } else if (s == "outlier") {
    policy.mode = SelectionMode::farthest_from_dominant;
  } else if (s.rfind("manual:", 0) == 0) {
    policy.mode = SelectionMode::manual;
    policy.manual_index = static_cast<int>(parse_long(s.substr(7)));
  } else {
    fail(Errc::invalid_argument, "unknown policy '" + s + "'");
  }
  return policy;
}

const CLI::Validator kPolicyValidator(
    [](std::string& s) -> std::string {
      if (s == "darkest" || s == "outlier") return {};
      if (s.rfind("manual:", 0) == 0) {
        const std::string idx = s.substr(7);
        if (!idx.empty() && idx.find_first_not_of("0123456789") == std::string::npos) return {};
      }
      return "expected darkest, outlier, or manual:<index>";
    },
    "POLICY");

void add_kmeans_opts(CLI::App* sub, KmeansOpts& o) {
  sub->add_option("--k", o.k, "number of k-means clusters")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  sub->add_option("--max-iters", o.max_iters, "k-means iteration cap")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  sub->add_option("--tolerance", o.tolerance, "k-means centroid movement threshold")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--restarts", o.restarts, "k-means runs per image; best objective wins")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  sub->add_option("--policy", o.policy, "defect cluster choice: darkest, outlier, manual:<i>")
      ->check(kPolicyValidator)
      ->capture_default_str();
}

KMeansConfig kmeans_config(const KmeansOpts& o, std::uint64_t seed) {
  KMeansConfig cfg;
  cfg.k = o.k;
  cfg.max_iterations = o.max_iters;
  cfg.tolerance = o.tolerance;
  cfg.restarts = o.restarts;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

struct DescriptorOpts {
  int bins = 4;
  int colors = 64;
  int tau = 0;
  int neighbors = 8;
  double radius = 1.0;
  std::string clbp_threshold = "mag";
};

void add_descriptor_opts(CLI::App* sub, DescriptorOpts& o) {
  sub->add_option("--bins", o.bins, "gch: quantization levels per channel")
      ->check(CLI::Range(2, 32))
      ->capture_default_str();
  sub->add_option("--colors", o.colors, "ccv: joint color buckets")
      ->check(CLI::Range(2, 4096))
      ->capture_default_str();
  sub->add_option("--tau", o.tau, "ccv: coherence threshold in pixels, 0 = 1% of the region")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--neighbors", o.neighbors, "lbp/clbp: sampling points")
      ->check(CLI::Range(4, 16))
      ->capture_default_str();
  sub->add_option("--radius", o.radius, "lbp/clbp: sampling radius in pixels")
      ->check(CLI::Range(1.0, 64.0))
      ->capture_default_str();
  sub->add_option("--clbp-threshold", o.clbp_threshold,
                  "clbp magnitude threshold: mag (mean |difference|) or gray (mean gray level)")
      ->check(CLI::IsMember({"mag", "gray"}))
      ->capture_default_str();
}

FeatureSpec make_spec(const std::string& feature, const std::string& colorspace,
                      const DescriptorOpts& o) {
  DescriptorParams params;
  params.gch_bins = o.bins;
  params.ccv_colors = o.colors;
  params.ccv_tau = o.tau;
  params.lbp.neighbors = o.neighbors;
  params.lbp.radius = o.radius;
  params.clbp_threshold =
      o.clbp_threshold == "gray" ? ClbpThreshold::gray_mean : ClbpThreshold::magnitude_mean;

  FeatureSpec spec;
  if (feature == "gch")
    spec.id.kind = DescriptorKind::gch;
  else if (feature == "ccv")
    spec.id.kind = DescriptorKind::ccv;
  else if (feature == "lbp")
    spec.id.kind = DescriptorKind::lbp;
  else if (feature == "clbp")
    spec.id.kind = DescriptorKind::clbp;
  else
    fail(Errc::invalid_argument, "unknown feature '" + feature + "'");
  spec.id.params = params;
  spec.colorspace = colorspace == "rgb" ? FeatureColorspace::rgb : FeatureColorspace::hsv;
  spec.id.validate();
  return spec;
}

// ---- segment ---------------------------------------------------------------

struct SegmentArgs {
  std::string image;
  KmeansOpts kmeans;
  std::uint64_t seed = 0;
  std::string mask_out;
  std::string clusters_out;
};

void run_segment(const SegmentArgs& a) {
  const ImageU8 rgb = load_image(a.image);
  const ImageF lab = rgb_to_lab(rgb);
  const auto seg =
      select_defect_cluster(kmeans_ab(lab, kmeans_config(a.kmeans, a.seed)), lab,
                            parse_policy(a.kmeans.policy));

  for (long i = 0; i < seg.centroids.rows(); ++i) {
    std::cout << "cluster " << i << ": center=(" << fmt_double(seg.centroids(i, 0)) << ", "
              << fmt_double(seg.centroids(i, 1)) << ") size=" << seg.cluster_sizes[i]
              << (static_cast<int>(i) == seg.selected ? "  [defect]" : "") << "\n";
  }
  std::cout << "objective=" << fmt_double(seg.objective)
            << " iterations=" << seg.objective_history.size() << "\n";

  if (!a.mask_out.empty()) save_mask_png(seg.defect_mask, a.mask_out);
  if (!a.clusters_out.empty()) {
    fs::create_directories(a.clusters_out);
    for (int i = 0; i < a.kmeans.k; ++i) {
      const MaskXb mask = (seg.labels == i);
      save_png(apply_mask(rgb, mask),
               fs::path(a.clusters_out) / ("cluster_" + std::to_string(i) + ".png"));
    }
  }
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string image;
  std::string data;
  std::string feature = "clbp";
  std::string colorspace = "hsv";
  DescriptorOpts descriptor;
  std::string mask;
  std::string label = "unknown";
  std::string out;
  KmeansOpts kmeans;
  std::uint64_t seed = 0;
  int threads = default_threads();
};

void run_extract(const ExtractArgs& a) {
  if (a.image.empty() == a.data.empty())
    fail(Errc::invalid_argument, "give either an image argument or --data, not both");
  const FeatureSpec spec = make_spec(a.feature, a.colorspace, a.descriptor);

  FeatureTable table;
  if (!a.image.empty()) {
    const ImageU8 rgb = load_image(a.image);
    table.spec = spec;
    if (!a.mask.empty()) {
      const MaskXb mask = load_mask_png(a.mask);
      table.samples.push_back({a.image, a.label, extract(rgb, spec.id, spec.colorspace, &mask).values});
    } else {
      table.samples.push_back({a.image, a.label, extract(rgb, spec.id, spec.colorspace).values});
    }
  } else {
    if (!a.mask.empty())
      fail(Errc::invalid_argument, "--mask applies to single images; --data segments each image");
    const auto segmented = segment_dataset(a.data, kmeans_config(a.kmeans, a.seed),
                                           parse_policy(a.kmeans.policy), a.seed, a.threads);
    table = extract_features(segmented, spec, a.threads);
  }
  write_feature_csv(table, a.out);
  std::cout << "wrote " << table.samples.size() << " rows (" << spec.str() << ", "
            << spec.id.length() << " values) to " << a.out << "\n";
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string model_out;
  double c = 1.0;
  int max_epochs = 1000;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  std::string metric = "literal";
};

void run_train(const TrainArgs& a) {
  const FeatureTable table = read_feature_csv(a.features);
  const Dataset ds = group_samples(table);

  long n = 0;
  for (const auto& cls : ds.by_class) n += static_cast<long>(cls.size());
  Eigen::MatrixXd x(n, ds.feature_length);
  std::vector<int> y(static_cast<size_t>(n));
  long row = 0;
  for (size_t k = 0; k < ds.by_class.size(); ++k)
    for (const auto& v : ds.by_class[k]) {
      x.row(row) = v;
      y[static_cast<size_t>(row)] = static_cast<int>(k);
      ++row;
    }

  TrainConfig cfg;
  cfg.c = a.c;
  cfg.max_epochs = a.max_epochs;
  cfg.tolerance = a.tolerance;
  cfg.seed = a.seed;
  MsvmModel model = train_multiclass(x, y, ds.classes, table.spec, cfg);
  model.metric = a.metric == "ignore_zeros" ? DecodeMetric::ignore_zeros : DecodeMetric::literal;
  save_model(model, a.model_out);
  std::cout << "trained " << model.learners.size() << " learners on " << n << " examples ("
            << ds.classes.size() << " classes) -> " << a.model_out << "\n";
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string image;
  std::string features;
  KmeansOpts kmeans;
  std::uint64_t seed = 0;
};

void print_prediction_header(const MsvmModel& model) {
  std::cout << "path,predicted";
  for (const auto& cls : model.classes) std::cout << ",dist_" << cls;
  std::cout << "\n";
}

void print_prediction(const MsvmModel& model, const std::string& path, const Eigen::VectorXd& x) {
  const Eigen::VectorXd signs = decision_signs(model, x);
  const Eigen::VectorXd dist = decode_distances(signs, model.id_table(), model.metric);
  const int idx = decode(signs, model.id_table(), model.metric);
  std::cout << csv_quote(path) << ',' << csv_quote(model.classes[static_cast<size_t>(idx)]);
  for (long r = 0; r < dist.size(); ++r) std::cout << ',' << fmt_double(dist[r]);
  std::cout << "\n";
}

void run_predict(const PredictArgs& a) {
  if (a.image.empty() == a.features.empty())
    fail(Errc::invalid_argument, "give either --image or --features, not both");
  const MsvmModel model = load_model(a.model);
  print_prediction_header(model);

  if (!a.image.empty()) {
    const ImageU8 rgb = load_image(a.image);
    const ImageF lab = rgb_to_lab(rgb);
    const auto seg =
        select_defect_cluster(kmeans_ab(lab, kmeans_config(a.kmeans, a.seed)), lab,
                              parse_policy(a.kmeans.policy));
    const FeatureVector fv =
        extract(rgb, model.spec.id, model.spec.colorspace, &seg.defect_mask);
    print_prediction(model, a.image, fv.values);
  } else {
    const FeatureTable table = read_feature_csv(a.features);
    if (!(table.spec == model.spec))
      fail(Errc::invalid_argument, "feature csv descriptor '" + table.spec.str() +
                                       "' does not match the model's '" + model.spec.str() + "'");
    for (const auto& s : table.samples) print_prediction(model, s.path, s.values);
  }
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string data;
  std::string report;
  std::vector<std::string> features{"gch", "ccv", "lbp", "clbp"};
  std::vector<std::string> colorspaces{"rgb", "hsv"};
  std::vector<long> train_sizes{10, 20, 30, 40, 50};
  long trials = 5;
  std::uint64_t seed = 0;
  int threads = default_threads();
  DescriptorOpts descriptor;
  KmeansOpts kmeans;
  double c = 1.0;
  int max_epochs = 1000;
  double svm_tolerance = 1e-4;
};

void run_evaluate(const EvaluateArgs& a) {
  const auto segmented = segment_dataset(a.data, kmeans_config(a.kmeans, a.seed),
                                         parse_policy(a.kmeans.policy), a.seed, a.threads);

  std::vector<FeatureTable> tables;
  for (const auto& feature : a.features)
    for (const auto& cs : a.colorspaces)
      tables.push_back(extract_features(segmented, make_spec(feature, cs, a.descriptor), a.threads));

  SweepConfig cfg;
  cfg.train_sizes = a.train_sizes;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.train.c = a.c;
  cfg.train.max_epochs = a.max_epochs;
  cfg.train.tolerance = a.svm_tolerance;
  const Report report = sweep_features(tables, cfg);
  write_report_csv(report, a.report);

  std::cout << "wrote " << report.rows.size() << " rows to " << a.report << "\n";
  for (const auto& table : tables)
    for (long m : a.train_sizes)
      std::cout << to_string(table.spec.id.kind) << "/" << to_string(table.spec.colorspace)
                << " M=" << m << ": mean overall "
                << fmt_double(report.mean_overall(to_string(table.spec.id.kind),
                                                  to_string(table.spec.colorspace), m))
                << "%\n";
}

// ---- gen-dataset -----------------------------------------------------------

struct GenArgs {
  std::string out;
  int per_class = SynthConfig{}.per_class;
  int size = SynthConfig{}.size;
  double noise = SynthConfig{}.noise;
  std::uint64_t seed = 0;
};

void run_gen(const GenArgs& a) {
  SynthConfig cfg;
  cfg.size = a.size;
  cfg.per_class = a.per_class;
  cfg.noise = a.noise;
  cfg.seed = a.seed;
  const std::string manifest = generate_dataset(a.out, cfg);
  std::cout << "wrote " << kSynthClasses.size() * static_cast<size_t>(a.per_class)
            << " images under " << a.out << " (manifest: " << manifest << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fruit disease identification pipeline"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "read options from a key=value file; flags win on conflict");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  std::string dump_config;
  app.add_option("--dump-config", dump_config, "write the effective configuration to a file")
      ->configurable(false);

  SegmentArgs seg;
  auto* seg_cmd = app.add_subcommand("segment", "cluster an image and emit the defect mask");
  seg_cmd->set_version_flag("--version", kVersion);
  seg_cmd->configurable();
  seg_cmd->add_option("image", seg.image, "input PNG or JPEG")->required();
  add_kmeans_opts(seg_cmd, seg.kmeans);
  seg_cmd->add_option("--seed", seg.seed, "k-means seed")->capture_default_str();
  seg_cmd->add_option("--mask-out", seg.mask_out, "write the defect mask as a 1-bit PNG");
  seg_cmd->add_option("--clusters-out", seg.clusters_out, "write one masked PNG per cluster");

  ExtractArgs ext;
  auto* ext_cmd = app.add_subcommand("extract", "compute feature vectors into a CSV");
  ext_cmd->set_version_flag("--version", kVersion);
  ext_cmd->configurable();
  ext_cmd->add_option("image", ext.image, "single input image");
  ext_cmd->add_option("--data", ext.data, "dataset root with one directory per class");
  ext_cmd->add_option("--feature", ext.feature, "descriptor")
      ->check(CLI::IsMember({"gch", "ccv", "lbp", "clbp"}))
      ->capture_default_str();
  ext_cmd->add_option("--colorspace", ext.colorspace, "descriptor colorspace")
      ->check(CLI::IsMember({"rgb", "hsv"}))
      ->capture_default_str();
  add_descriptor_opts(ext_cmd, ext.descriptor);
  ext_cmd->add_option("--mask", ext.mask, "mask PNG restricting a single image");
  ext_cmd->add_option("--label", ext.label, "label for a single image")->capture_default_str();
  ext_cmd->add_option("--out", ext.out, "output feature CSV")->required();
  add_kmeans_opts(ext_cmd, ext.kmeans);
  ext_cmd->add_option("--seed", ext.seed, "master seed")->capture_default_str();
  ext_cmd->add_option("--threads", ext.threads, "worker cap for --data mode")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "fit the one-vs-one linear SVM bank");
  tr_cmd->set_version_flag("--version", kVersion);
  tr_cmd->configurable();
  tr_cmd->add_option("--features", tr.features, "training feature CSV")->required();
  tr_cmd->add_option("--model-out", tr.model_out, "output model file")->required();
  tr_cmd->add_option("--C", tr.c, "hinge loss weight")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr_cmd->add_option("--max-epochs", tr.max_epochs, "coordinate descent epoch cap")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  tr_cmd->add_option("--svm-tolerance", tr.tolerance, "projected gradient stop threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed, "training seed")->capture_default_str();
  tr_cmd->add_option("--metric", tr.metric, "decoding metric stored in the model")
      ->check(CLI::IsMember({"literal", "ignore_zeros"}))
      ->capture_default_str();

  PredictArgs pr;
  auto* pr_cmd = app.add_subcommand("predict", "classify an image or a feature CSV");
  pr_cmd->set_version_flag("--version", kVersion);
  pr_cmd->configurable();
  pr_cmd->add_option("--model", pr.model, "model file from train")->required();
  pr_cmd->add_option("--image", pr.image, "image to segment and classify");
  pr_cmd->add_option("--features", pr.features, "feature CSV to classify row by row");
  add_kmeans_opts(pr_cmd, pr.kmeans);
  pr_cmd->add_option("--seed", pr.seed, "segmentation seed for --image")->capture_default_str();

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "run the train/test sweep and write a report CSV");
  ev_cmd->set_version_flag("--version", kVersion);
  ev_cmd->configurable();
  ev_cmd->add_option("--data", ev.data, "dataset root with one directory per class")->required();
  ev_cmd->add_option("--report", ev.report, "output report CSV")->required();
  ev_cmd->add_option("--features", ev.features, "descriptors to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"gch", "ccv", "lbp", "clbp"}))
      ->capture_default_str();
  ev_cmd->add_option("--colorspaces", ev.colorspaces, "colorspaces to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"rgb", "hsv"}))
      ->capture_default_str();
  ev_cmd->add_option("--train-per-class", ev.train_sizes, "training images per class (M values)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev_cmd->add_option("--trials", ev.trials, "random splits per cell")
      ->check(CLI::Range(1L, 1000L))
      ->capture_default_str();
  ev_cmd->add_option("--seed", ev.seed, "master seed")->capture_default_str();
  ev_cmd->add_option("--threads", ev.threads, "worker cap")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  add_descriptor_opts(ev_cmd, ev.descriptor);
  add_kmeans_opts(ev_cmd, ev.kmeans);
  ev_cmd->add_option("--C", ev.c, "hinge loss weight")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev_cmd->add_option("--max-epochs", ev.max_epochs, "coordinate descent epoch cap")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  ev_cmd->add_option("--svm-tolerance", ev.svm_tolerance, "projected gradient stop threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset", "render a labeled synthetic fruit dataset");
  gen_cmd->set_version_flag("--version", kVersion);
  gen_cmd->configurable();
  gen_cmd->add_option("--out", gen.out, "output dataset root")->required();
  gen_cmd->add_option("--per-class", gen.per_class, "images per class")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "image side length in pixels")
      ->check(CLI::Range(32, 2048))
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "pixel noise stddev, 8-bit units")
      ->check(CLI::Range(0.0, 32.0))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (!dump_config.empty()) {
      std::ofstream out(dump_config, std::ios::binary);
      if (!out) fail(Errc::io_error, "cannot open for writing: " + dump_config);
      // Only options that were actually given: defaults for the other
      // subcommands would otherwise leak into the invoked one's section.
      out << app.config_to_str(false, true);
    }
    // Dispatch by hand: a config file section counts as a second trigger of
    // the same subcommand, and per-trigger callbacks would run the work twice.
    if (*seg_cmd) {
      run_segment(seg);
    } else if (*ext_cmd) {
      run_extract(ext);
    } else if (*tr_cmd) {
      run_train(tr);
    } else if (*pr_cmd) {
      run_predict(pr);
    } else if (*ev_cmd) {
      run_evaluate(ev);
    } else if (*gen_cmd) {
      run_gen(gen);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
