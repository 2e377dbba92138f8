#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace orchard {

// splitmix64 finalizer, the basis of the seed-derivation scheme below.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One master seed feeds every randomized stage. A stage seed is derived by
// folding the stage tag and any indices into the master seed one value at a
// time: seed' = mix64(seed ^ mix64(value)). Stable across runs and threads.
constexpr std::uint64_t seed_mix(std::uint64_t seed) { return mix64(seed); }

template <class... Rest>
constexpr std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t v, Rest... rest) {
  return seed_mix(mix64(seed ^ mix64(v)), rest...);
}

// Stage tags for seed_mix. Values are part of the on-disk determinism
// contract; do not renumber.
enum SeedStage : std::uint64_t {
  seed_stage_segment = 1,
  seed_stage_split = 2,
  seed_stage_svm = 3,
  seed_stage_gen = 4,
};

// mt19937_64 with hand-rolled distributions. The standard distributions are
// implementation-defined, these are not, so streams are reproducible
// everywhere for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace orchard
