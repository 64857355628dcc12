#ifndef AUGSEARCH_IMGDATA_SYNTHETIC_HPP
#define AUGSEARCH_IMGDATA_SYNTHETIC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/imgdata/patching.hpp"
#include "augsearch/rng.hpp"

namespace augsearch::imgdata {

/// Parameters of the synthetic histology-like dataset: class-coloured ellipses on a
/// background (class 0) with additive Gaussian noise.
struct SyntheticConfig {
  int num_images = 80;
  int image_size = 128;
  int num_classes = 6;
  int blobs_min = 4;
  int blobs_max = 9;
  double noise_std = 12.0;
  std::uint64_t seed = 0;
  std::string lab_code = "SY";

  void validate() const {
    if (num_images < 1) throw std::invalid_argument("SyntheticConfig: num_images must be >= 1");
    if (image_size < 32) throw std::invalid_argument("SyntheticConfig: image_size must be >= 32");
    if (num_classes < 2 || num_classes > 255) throw std::invalid_argument("SyntheticConfig: num_classes must lie in [2, 255]");
    if (blobs_min < 0 || blobs_max < blobs_min) throw std::invalid_argument("SyntheticConfig: need 0 <= blobs_min <= blobs_max");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("SyntheticConfig: noise_std must be >= 0");
  }
};

/// Base colour of each class in the synthetic data.
inline std::array<std::uint8_t, 3> synthetic_class_color(int cls) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette{{
      {235, 225, 235},  // background
      {120, 40, 110},   // tumour
      {230, 120, 160},  // stroma
      {40, 40, 140},    // inflammatory
      {170, 170, 60},   // necrosis
      {250, 200, 120},  // other
  }};
  if (cls >= 0 && cls < static_cast<int>(kPalette.size())) return kPalette[cls];
  std::uint64_t s = static_cast<std::uint64_t>(cls);
  const std::uint64_t h = splitmix64(s);
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

namespace detail {

struct Ellipse {
  double cy, cx, a, b, angle;
};

inline Ellipse random_ellipse(Rng& rng, int size) {
  Ellipse e;
  e.cy = rng.uniform(0.0, size);
  e.cx = rng.uniform(0.0, size);
  e.a = rng.uniform(size / 12.0, size / 4.0);
  e.b = rng.uniform(size / 12.0, size / 4.0);
  e.angle = rng.uniform(0.0, std::numbers::pi);
  return e;
}

inline void stamp_ellipse(ClassMask& mask, const Ellipse& e, std::uint8_t cls) {
  const double cs = std::cos(e.angle), sn = std::sin(e.angle);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const double dy = r + 0.5 - e.cy, dx = c + 0.5 - e.cx;
      const double u = (dx * cs + dy * sn) / e.a;
      const double v = (-dx * sn + dy * cs) / e.b;
      if (u * u + v * v <= 1.0) mask.at(r, c) = cls;
    }
  }
}

}  // namespace detail

/// Deterministic for a fixed config. Each image i is named `synth<i>` (zero padded).
/// Every class in [1, num_classes) is guaranteed to appear somewhere in the dataset.
inline std::vector<PatchPair> generate_synthetic_dataset(const SyntheticConfig& config) {
  config.validate();
  const int size = config.image_size;
  std::vector<ClassMask> masks;
  masks.reserve(config.num_images);
  for (int i = 0; i < config.num_images; ++i) {
    Rng rng(derive_seed(config.seed, 2 * static_cast<std::uint64_t>(i)));
    ClassMask mask(size, size, 0);
    const auto blobs = rng.uniform_int(config.blobs_min, config.blobs_max);
    for (std::int64_t b = 0; b < blobs; ++b) {
      const auto cls = static_cast<std::uint8_t>(rng.uniform_int(1, config.num_classes - 1));
      detail::stamp_ellipse(mask, detail::random_ellipse(rng, size), cls);
    }
    masks.push_back(std::move(mask));
  }

  // Top up classes that random placement missed; re-check after each stamp since a
  // stamp can cover the only instance of another class.
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::vector<bool> present(config.num_classes, false);
    for (const auto& m : masks) {
      for (auto l : m.labels) present[l] = true;
    }
    int missing = -1;
    for (int cls = 1; cls < config.num_classes && missing < 0; ++cls) {
      if (!present[cls]) missing = cls;
    }
    if (missing < 0) break;
    if (attempt > 1000) throw std::runtime_error("generate_synthetic_dataset: cannot place every class");
    auto& mask = masks[(static_cast<std::size_t>(missing) + attempt) % masks.size()];
    Rng rng(derive_seed(config.seed ^ 0xa5a5a5a5ULL, attempt));
    detail::Ellipse e = detail::random_ellipse(rng, size);
    e.b = e.a;
    e.cy = std::clamp(e.cy, e.a, size - e.a);
    e.cx = std::clamp(e.cx, e.a, size - e.a);
    detail::stamp_ellipse(mask, e, static_cast<std::uint8_t>(missing));
  }

  std::vector<PatchPair> out;
  out.reserve(masks.size());
  const int digits = std::max<int>(4, static_cast<int>(std::to_string(config.num_images - 1).size()));
  for (int i = 0; i < config.num_images; ++i) {
    Rng noise(derive_seed(config.seed, 2 * static_cast<std::uint64_t>(i) + 1));
    RgbImage image(size, size);
    const auto& mask = masks[i];
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
      const auto color = synthetic_class_color(mask.labels[p]);
      for (int ch = 0; ch < 3; ++ch) {
        const double jitter = config.noise_std > 0.0 ? config.noise_std * noise.normal() : 0.0;
        image.pixels[p * 3 + ch] = clamp_byte(color[ch] + jitter);
      }
    }
    std::string name = std::to_string(i);
    name.insert(0, static_cast<std::size_t>(std::max(0, digits - static_cast<int>(name.size()))), '0');
    out.push_back(PatchPair{std::move(image), masks[i], "synth" + name, config.lab_code, {0, 0}});
  }
  return out;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_SYNTHETIC_HPP
