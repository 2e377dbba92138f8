#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "orchard/image.hpp"
#include "orchard/rng.hpp"

namespace orchard {

enum class SynthClass { blotch, normal, rot, scab };

constexpr const char* to_string(SynthClass c) {
  switch (c) {
    case SynthClass::blotch: return "blotch";
    case SynthClass::normal: return "normal";
    case SynthClass::rot: return "rot";
    case SynthClass::scab: return "scab";
  }
  return "unknown";
}

inline constexpr std::array<SynthClass, 4> kSynthClasses = {
    SynthClass::blotch, SynthClass::normal, SynthClass::rot, SynthClass::scab};

struct SynthConfig {
  int size = 128;
  int per_class = 80;
  double noise = 1.2;  // stddev of the per-channel pixel noise, 8-bit units
  std::uint64_t seed = 0;
  void validate() const;
};

struct SynthSample {
  ImageU8 rgb;
  MaskXb region;  // ground truth for the region the pipeline should isolate
};

// One fruit against a dark backdrop. Disease classes get lesion patches with
// class-specific color and texture; the normal class gets a blush patch of
// healthy skin, which plays the same role for segmentation.
SynthSample render_sample(SynthClass cls, int size, double noise, Rng& rng);

// Writes per_class PNGs under root/<class>/ for each class plus a
// manifest.csv of path,label rows. Returns the manifest path.
std::string generate_dataset(const std::string& root, const SynthConfig& cfg);

}  // namespace orchard
