#include "orchard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/imageio.hpp"
#include "orchard/text.hpp"

namespace fs = std::filesystem;

namespace orchard {

namespace {

struct Hsv {
  double h = 0, s = 0, v = 0;
};

std::array<std::uint8_t, 3> hsv_to_rgb8(double h, double s, double v) {
  s = std::clamp(s, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double sec = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = sec; break;
    case 1: r = sec; g = c; break;
    case 2: g = c; b = sec; break;
    case 3: g = sec; b = c; break;
    case 4: r = sec; b = c; break;
    default: r = c; b = sec; break;
  }
  const double m = v - c;
  const auto to8 = [](double t) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(t * 255.0), 0L, 255L));
  };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double mix(double a, double b, double t) { return a + (b - a) * t; }

// Coarse random grid sampled bilinearly: cheap band-limited texture.
struct ValueNoise {
  PlaneXd grid;
  double cell = 8.0;

  double at(double x, double y) const {
    const double gx = x / cell, gy = y / cell;
    const long x0 = static_cast<long>(gx), y0 = static_cast<long>(gy);
    const double fx = gx - static_cast<double>(x0), fy = gy - static_cast<double>(y0);
    const double a = grid(y0, x0), b = grid(y0, x0 + 1);
    const double c = grid(y0 + 1, x0), d = grid(y0 + 1, x0 + 1);
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
  }
};

ValueNoise make_noise(Rng& rng, int size, double cell) {
  ValueNoise n;
  n.cell = cell;
  const long g = static_cast<long>(size / cell) + 2;
  n.grid.resize(g, g);
  for (long y = 0; y < g; ++y)
    for (long x = 0; x < g; ++x) n.grid(y, x) = rng.uniform(-1.0, 1.0);
  return n;
}

// Roughly round region with a wobbly boundary (harmonics 2..4 of the polar
// angle) and a soft feathered edge.
struct Patch {
  double cx = 0, cy = 0, radius = 1;
  std::array<double, 3> amp{};
  std::array<double, 3> phase{};

  double alpha(double x, double y, double feather) const {
    const double dx = x - cx, dy = y - cy;
    const double r = std::hypot(dx, dy);
    const double theta = std::atan2(dy, dx);
    double rho = radius;
    for (int h = 0; h < 3; ++h)
      rho += radius * amp[h] * std::sin((h + 2) * theta + phase[h]);
    return smoothstep01((rho - r) / feather);
  }
};

struct Scene {
  double cx = 0, cy = 0, rx = 1, ry = 1;  // fruit ellipse, px
  Hsv bg, skin, lesion, halo_color;
  std::vector<Patch> patches;
  Patch halo;  // enlarged copy of the rot patch; rim = halo minus patch
  bool has_halo = false;
  double feather = 2.0;
  double ring_period = 6.0, ring_phase = 0.0;
  // Smooth hue drift across the fruit. It gives the skin more chroma spread
  // than any lesion, so a spare k-means centroid lands on skin, not lesion.
  double grad_amp = 8.0, grad_dir = 0.0;
};

Patch make_patch(Rng& rng, const Scene& sc, double min_r, double max_r) {
  Patch p;
  double nx, ny;
  do {
    nx = rng.uniform(-0.55, 0.55);
    ny = rng.uniform(-0.55, 0.55);
  } while (nx * nx + ny * ny > 0.55 * 0.55);
  p.cx = sc.cx + nx * sc.rx;
  p.cy = sc.cy + ny * sc.ry;
  const double room = 0.8 * (1.0 - std::hypot(nx, ny)) * std::min(sc.rx, sc.ry);
  p.radius = std::max(1.5, std::min(rng.uniform(min_r, max_r), room));
  for (int h = 0; h < 3; ++h) {
    p.amp[h] = rng.uniform(-0.13, 0.13);
    p.phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return p;
}

}  // namespace

void SynthConfig::validate() const {
  if (size < 32 || size > 2048) fail(Errc::invalid_argument, "sample size must be in [32, 2048]");
  if (per_class < 1) fail(Errc::invalid_argument, "per_class must be >= 1");
  if (noise < 0.0 || noise > 32.0) fail(Errc::invalid_argument, "noise stddev must be in [0, 32]");
}

SynthSample render_sample(SynthClass cls, int size, double noise, Rng& rng) {
  if (size < 32 || size > 2048) fail(Errc::invalid_argument, "sample size must be in [32, 2048]");
  if (noise < 0.0 || noise > 32.0) fail(Errc::invalid_argument, "noise stddev must be in [0, 32]");

  Scene sc;
  sc.cx = size * (0.5 + rng.uniform(-0.03, 0.03));
  sc.cy = size * (0.5 + rng.uniform(-0.03, 0.03));
  sc.rx = size * rng.uniform(0.33, 0.37);
  sc.ry = size * rng.uniform(0.30, 0.34);
  sc.bg = {215.0 + rng.uniform(-10, 10), 0.10 + rng.uniform(-0.02, 0.02),
           0.16 + rng.uniform(-0.03, 0.03)};
  sc.skin = {75.0 + rng.uniform(-6, 6), 0.15 + rng.uniform(-0.03, 0.03),
             0.62 + rng.uniform(-0.04, 0.04)};
  sc.grad_amp = rng.uniform(6.0, 10.0);
  sc.grad_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);

  int n_patches = 1;
  double min_r = 0.1, max_r = 0.2;
  switch (cls) {
    case SynthClass::blotch:
      sc.lesion = {22.0 + rng.uniform(-4, 4), 0.72 + rng.uniform(-0.05, 0.05),
                   0.48 + rng.uniform(-0.04, 0.04)};
      n_patches = rng.range(2, 4);
      min_r = 0.07 * size;
      max_r = 0.12 * size;
      break;
    case SynthClass::rot:
      sc.lesion = {8.0 + rng.uniform(-4, 4), 0.88 + rng.uniform(-0.03, 0.03),
                   0.30 + rng.uniform(-0.03, 0.03)};
      // The halo sits between skin and lesion in chroma so the lesion core
      // stays the stand-out cluster.
      sc.halo_color = {20.0 + rng.uniform(-3, 3), 0.45 + rng.uniform(-0.04, 0.04),
                       0.50 + rng.uniform(-0.03, 0.03)};
      sc.has_halo = true;
      n_patches = 1;
      min_r = 0.13 * size;
      max_r = 0.17 * size;
      // A ring period close to the pattern diameter reads as alternation
      // rather than a smooth edge, which keeps rot apart from blotch.
      sc.ring_period = rng.uniform(2.8, 3.6);
      sc.ring_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      break;
    case SynthClass::scab:
      sc.lesion = {95.0 + rng.uniform(-6, 6), 0.62 + rng.uniform(-0.05, 0.05),
                   0.45 + rng.uniform(-0.04, 0.04)};
      n_patches = rng.range(4, 6);
      min_r = 0.06 * size;
      max_r = 0.09 * size;
      sc.feather = 1.2;  // corky spots end abruptly
      break;
    case SynthClass::normal:
      sc.lesion = {48.0 + rng.uniform(-5, 5), 0.55 + rng.uniform(-0.05, 0.05),
                   0.78 + rng.uniform(-0.04, 0.04)};
      n_patches = 1;
      min_r = 0.14 * size;
      max_r = 0.18 * size;
      sc.feather = 5.0;  // blush fades out instead of ending in a rim
      break;
  }
  for (int i = 0; i < n_patches; ++i) sc.patches.push_back(make_patch(rng, sc, min_r, max_r));
  if (sc.has_halo) {
    sc.halo = sc.patches[0];
    sc.halo.radius *= 1.3;
  }

  const ValueNoise bg_tex = make_noise(rng, size, 5.0);
  const ValueNoise skin_tex = make_noise(rng, size, 3.0);
  // Lesion texture scale is a class signature: blotch mottling sits at a
  // mid frequency, scab corkiness near the pixel scale, normal-skin
  // lenticel dots in between.
  const double tex_cell = cls == SynthClass::blotch ? 4.0
                          : cls == SynthClass::scab ? 1.7
                                                    : 3.0;
  const ValueNoise lesion_tex = make_noise(rng, size, tex_cell);

  SynthSample out{ImageU8(size, size, Colorspace::rgb8), MaskXb::Constant(size, size, false)};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      Hsv c = sc.bg;
      c.v += 0.02 * bg_tex.at(x, y) + 0.02 * (static_cast<double>(y) / size - 0.5);

      const double ex = (x - sc.cx) / sc.rx, ey = (y - sc.cy) / sc.ry;
      const double d = std::hypot(ex, ey);
      const double fruit_a = smoothstep01((1.0 - d) * std::min(sc.rx, sc.ry) / 1.5);
      double lesion_a = 0.0;
      if (fruit_a > 0.0) {
        Hsv f = sc.skin;
        f.h += sc.grad_amp * (ex * std::cos(sc.grad_dir) + ey * std::sin(sc.grad_dir));
        f.v *= 1.0 - 0.18 * d * d;  // shading toward the rim
        f.v += 0.02 * skin_tex.at(x, y);

        const Patch* hit = nullptr;
        for (const auto& p : sc.patches) {
          const double a = p.alpha(x, y, sc.feather);
          if (a > lesion_a) {
            lesion_a = a;
            hit = &p;
          }
        }
        if (sc.has_halo) {
          const double halo_a = sc.halo.alpha(x, y, 2.0 * sc.feather) * (1.0 - lesion_a);
          f.h = mix(f.h, sc.halo_color.h, halo_a);
          f.s = mix(f.s, sc.halo_color.s, halo_a);
          f.v = mix(f.v, sc.halo_color.v, halo_a);
        }
        if (hit) {
          Hsv l = sc.lesion;
          switch (cls) {
            case SynthClass::blotch:
              l.v += 0.07 * lesion_tex.at(x, y);
              l.s += 0.04 * lesion_tex.at(x, y);
              break;
            case SynthClass::rot: {
              const double r = std::hypot(x - hit->cx, y - hit->cy);
              l.v *= 0.80 + 0.40 * smoothstep01(r / hit->radius);
              l.v *= 1.0 + 0.16 * std::sin(2.0 * std::numbers::pi * r / sc.ring_period +
                                           sc.ring_phase);
              break;
            }
            case SynthClass::scab:
              // Corky speckle lives in luma; keeping chroma tight keeps the
              // patches in one segmentation cluster.
              l.v += 0.06 * lesion_tex.at(x, y) + rng.uniform(-0.03, 0.03);
              l.s += rng.uniform(-0.015, 0.015);
              break;
            case SynthClass::normal: {
              // Lenticel speckle: sparse bright dots over a faint broad tint.
              const double t = lesion_tex.at(x, y);
              const double dot = smoothstep01((t - 0.35) / 0.30);
              l.v += 0.09 * dot + 0.015 * t;
              l.s -= 0.05 * dot;
              break;
            }
          }
          f.h = mix(f.h, l.h, lesion_a);
          f.s = mix(f.s, l.s, lesion_a);
          f.v = mix(f.v, l.v, lesion_a);
        }
        c.h = mix(c.h, f.h, fruit_a);
        c.s = mix(c.s, f.s, fruit_a);
        c.v = mix(c.v, f.v, fruit_a);
      }

      const auto rgb = hsv_to_rgb8(c.h, c.s, c.v);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = static_cast<double>(rgb[static_cast<size_t>(ch)]) + rng.normal(0.0, noise);
        out.rgb.at(y, x, ch) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
      out.region(y, x) = fruit_a >= 0.5 && lesion_a >= 0.5;
    }
  return out;
}

std::string generate_dataset(const std::string& root, const SynthConfig& cfg) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(Errc::io_error, "cannot create " + root + ": " + ec.message());

  std::string manifest;
  manifest += "path,label\n";
  for (size_t ci = 0; ci < kSynthClasses.size(); ++ci) {
    const SynthClass cls = kSynthClasses[ci];
    const std::string name = to_string(cls);
    fs::create_directories(fs::path(root) / name, ec);
    if (ec) fail(Errc::io_error, "cannot create class directory: " + ec.message());
    for (int i = 0; i < cfg.per_class; ++i) {
      Rng rng(seed_mix(cfg.seed, seed_stage_gen, static_cast<std::uint64_t>(ci),
                       static_cast<std::uint64_t>(i)));
      const SynthSample sample = render_sample(cls, cfg.size, cfg.noise, rng);
      char file[64];
      std::snprintf(file, sizeof file, "%s_%03d.png", name.c_str(), i);
      const std::string rel = name + "/" + file;
      save_png(sample.rgb, fs::path(root) / rel);
      manifest += csv_quote(rel) + "," + csv_quote(name) + "\n";
    }
  }

  const std::string manifest_path = (fs::path(root) / "manifest.csv").string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + manifest_path);
  out << manifest;
  if (!out) fail(Errc::io_error, "write failed: " + manifest_path);
  return manifest_path;
}

}  // namespace orchard
