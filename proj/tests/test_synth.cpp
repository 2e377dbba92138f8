#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
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

TEST_CASE("rendering is deterministic for a given stream") {
  for (SynthClass cls : kSynthClasses) {
    Rng a(42), b(42);
    const SynthSample sa = render_sample(cls, 64, 1.2, a);
    const SynthSample sb = render_sample(cls, 64, 1.2, b);
    CHECK(sa.rgb.data == sb.rgb.data);
    CHECK((sa.region == sb.region).all());

    Rng c(43);
    const SynthSample sc = render_sample(cls, 64, 1.2, c);
    CHECK(sa.rgb.data != sc.rgb.data);
  }
}

TEST_CASE("rendered samples have sane geometry") {
  Rng rng(7);
  for (SynthClass cls : kSynthClasses) {
    const SynthSample s = render_sample(cls, 96, 1.2, rng);
    CHECK(s.rgb.width == 96);
    CHECK(s.rgb.height == 96);
    CHECK(s.rgb.space == Colorspace::rgb8);
    REQUIRE(s.region.rows() == 96);
    REQUIRE(s.region.cols() == 96);

    // The region of interest is present but far from filling the frame.
    const long count = s.region.count();
    CHECK(count > 50);
    CHECK(count < 96 * 96 / 2);
  }
}

TEST_CASE("generate_dataset writes the tree the manifest describes") {
  TempDir dir;
  SynthConfig cfg;
  cfg.size = 48;
  cfg.per_class = 3;
  cfg.seed = 5;
  const std::string manifest = generate_dataset(dir.path().string(), cfg);

  std::ifstream in(manifest);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,label");

  long rows = 0;
  std::set<std::string> labels;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const std::string rel = line.substr(0, comma);
    labels.insert(line.substr(comma + 1));
    const auto full = dir.path() / rel;
    CHECK(std::filesystem::exists(full));
    const ImageU8 img = load_image(full.string());
    CHECK(img.width == 48);
    CHECK(img.height == 48);
    ++rows;
  }
  CHECK(rows == 12);
  CHECK(labels == std::set<std::string>{"blotch", "normal", "rot", "scab"});

  // The directory scanner sees exactly the manifest's samples.
  const auto items = scan_class_dirs(dir.path().string());
  CHECK(items.size() == 12);
}

TEST_CASE("datasets with the same seed are identical on disk") {
  TempDir a, b;
  SynthConfig cfg;
  cfg.size = 32;
  cfg.per_class = 2;
  cfg.seed = 11;
  generate_dataset(a.path().string(), cfg);
  generate_dataset(b.path().string(), cfg);

  for (const auto& item : scan_class_dirs(a.path().string())) {
    const auto rel = std::filesystem::relative(item.path, a.path());
    const ImageU8 ia = load_image(item.path);
    const ImageU8 ib = load_image((b.path() / rel).string());
    CHECK(ia.data == ib.data);
  }

  TempDir c;
  SynthConfig other = cfg;
  other.seed = 12;
  generate_dataset(c.path().string(), other);
  bool any_differ = false;
  for (const auto& item : scan_class_dirs(a.path().string())) {
    const auto rel = std::filesystem::relative(item.path, a.path());
    if (load_image(item.path).data != load_image((c.path() / rel).string()).data)
      any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("zero pixel noise is a valid setting") {
  Rng rng(3);
  const SynthSample s = render_sample(SynthClass::rot, 48, 0.0, rng);
  CHECK(s.rgb.width == 48);
}

TEST_CASE("generator config validates") {
  SynthConfig cfg;
  cfg.size = 16;  // too small for the texture margins
  CHECK(error_code_of([&] { cfg.validate(); }) == Errc::invalid_argument);
  cfg = SynthConfig{};
  cfg.per_class = 0;
  CHECK(error_code_of([&] { cfg.validate(); }) == Errc::invalid_argument);
  cfg = SynthConfig{};
  cfg.noise = -0.5;
  CHECK(error_code_of([&] { cfg.validate(); }) == Errc::invalid_argument);
  CHECK(error_code_of([] { SynthConfig{}.validate(); }) == std::nullopt);
}

TEST_CASE("class names parse back to the enum") {
  CHECK(to_string(SynthClass::blotch) == std::string("blotch"));
  CHECK(to_string(SynthClass::normal) == std::string("normal"));
  CHECK(to_string(SynthClass::rot) == std::string("rot"));
  CHECK(to_string(SynthClass::scab) == std::string("scab"));
}
