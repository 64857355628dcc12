#ifndef AUGSEARCH_AUGMENT_KERNELS_HPP
#define AUGSEARCH_AUGMENT_KERNELS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "augsearch/augment/detail/pixel_ops.hpp"
#include "augsearch/augment/instance.hpp"
#include "augsearch/image.hpp"
#include "augsearch/rng.hpp"

namespace augsearch::augment {

struct AugmentedPair {
  RgbImage image;
  ClassMask mask;
};

namespace kernels {

// Photometric kernels. None of them touch the mask.

/// gamma_percent ~ U[min(100, u), max(100, u)]; out = 255 * (in / 255)^(gamma_percent / 100).
inline RgbImage random_gamma(const RgbImage& src, double gamma_limit_upper, Rng& rng) {
  const double lo = std::min(100.0, gamma_limit_upper), hi = std::max(100.0, gamma_limit_upper);
  const double gamma = rng.uniform(lo, hi) / 100.0;
  std::array<std::uint8_t, 256> lut;
  for (int v = 0; v < 256; ++v) lut[v] = clamp_byte(255.0 * std::pow(v / 255.0, gamma));
  RgbImage out = src;
  for (auto& p : out.pixels) p = lut[p];
  return out;
}

/// Contrast-limited adaptive histogram equalisation of the BT.601 luma channel.
///
/// The image is split into a tile_grid x tile_grid grid (capped at one pixel per
/// tile); each tile's histogram is clipped at clip_limit * area / 256 with the excess
/// redistributed uniformly, and pixels bilinearly interpolate the four nearest tile
/// LUTs. clip_limit <= 0 disables clipping. The luma change is added to all three
/// channels, which leaves chroma unchanged.
inline RgbImage clahe(const RgbImage& src, double clip_limit, int tile_grid) {
  const int h = src.height, w = src.width;
  const int gy = std::clamp(tile_grid, 1, h), gx = std::clamp(tile_grid, 1, w);
  std::vector<double> luma(static_cast<std::size_t>(h) * w);
  std::vector<int> bins(luma.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double y = detail::luma(src.at(r, c, 0), src.at(r, c, 1), src.at(r, c, 2));
      luma[static_cast<std::size_t>(r) * w + c] = y;
      bins[static_cast<std::size_t>(r) * w + c] = std::clamp(static_cast<int>(y + 0.5), 0, 255);
    }
  }
  auto row_start = [&](int ty) { return static_cast<int>(static_cast<long long>(ty) * h / gy); };
  auto col_start = [&](int tx) { return static_cast<int>(static_cast<long long>(tx) * w / gx); };

  std::vector<std::array<double, 256>> luts(static_cast<std::size_t>(gy) * gx);
  for (int ty = 0; ty < gy; ++ty) {
    for (int tx = 0; tx < gx; ++tx) {
      std::array<long long, 256> hist{};
      const int r0 = row_start(ty), r1 = row_start(ty + 1);
      const int c0 = col_start(tx), c1 = col_start(tx + 1);
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) ++hist[bins[static_cast<std::size_t>(r) * w + c]];
      }
      const long long area = static_cast<long long>(r1 - r0) * (c1 - c0);
      if (clip_limit > 0.0) {
        const long long limit = std::max<long long>(1, static_cast<long long>(clip_limit * area / 256.0));
        long long excess = 0;
        for (auto& v : hist) {
          if (v > limit) {
            excess += v - limit;
            v = limit;
          }
        }
        const long long per_bin = excess / 256;
        const long long residual = excess - per_bin * 256;
        for (auto& v : hist) v += per_bin;
        if (residual > 0) {
          const long long step = std::max<long long>(256 / residual, 1);
          long long left = residual;
          for (int b = 0; b < 256 && left > 0; b += static_cast<int>(step), --left) ++hist[b];
        }
      }
      auto& lut = luts[static_cast<std::size_t>(ty) * gx + tx];
      long long cum = 0;
      for (int b = 0; b < 256; ++b) {
        cum += hist[b];
        lut[b] = std::min(255.0, static_cast<double>(cum) * 255.0 / static_cast<double>(area));
      }
    }
  }

  const double tile_h = static_cast<double>(h) / gy, tile_w = static_cast<double>(w) / gx;
  RgbImage out(h, w);
  for (int r = 0; r < h; ++r) {
    const double fy = (r + 0.5) / tile_h - 0.5;
    const int ty0 = std::clamp(static_cast<int>(std::floor(fy)), 0, gy - 1);
    const int ty1 = std::min(ty0 + 1, gy - 1);
    const double wy = std::clamp(fy - ty0, 0.0, 1.0);
    for (int c = 0; c < w; ++c) {
      const double fx = (c + 0.5) / tile_w - 0.5;
      const int tx0 = std::clamp(static_cast<int>(std::floor(fx)), 0, gx - 1);
      const int tx1 = std::min(tx0 + 1, gx - 1);
      const double wx = std::clamp(fx - tx0, 0.0, 1.0);
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      const int b = bins[idx];
      const double top = luts[static_cast<std::size_t>(ty0) * gx + tx0][b] * (1 - wx) + luts[static_cast<std::size_t>(ty0) * gx + tx1][b] * wx;
      const double bottom = luts[static_cast<std::size_t>(ty1) * gx + tx0][b] * (1 - wx) + luts[static_cast<std::size_t>(ty1) * gx + tx1][b] * wx;
      const double delta = top * (1 - wy) + bottom * wy - luma[idx];
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = clamp_byte(src.at(r, c, ch) + delta);
    }
  }
  return out;
}

/// Additive HSV shifts drawn per image. Hue is in half-degree units (0..180 per turn),
/// saturation and value in 0..255 units.
inline RgbImage hue_saturation_value(const RgbImage& src, double hue_limit, double sat_limit, double val_limit, Rng& rng) {
  const double dh = rng.uniform(-hue_limit, hue_limit);
  const double ds = rng.uniform(-sat_limit, sat_limit);
  const double dv = rng.uniform(-val_limit, val_limit);
  RgbImage out(src.height, src.width);
  for (std::size_t i = 0; i < src.pixel_count(); ++i) {
    auto hsv = detail::rgb_to_hsv(src.pixels[3 * i], src.pixels[3 * i + 1], src.pixels[3 * i + 2]);
    const double s = std::clamp(hsv[1] * 255.0 + ds, 0.0, 255.0) / 255.0;
    const double v = std::clamp(hsv[2] * 255.0 + dv, 0.0, 255.0) / 255.0;
    const auto rgb = detail::hsv_to_rgb(hsv[0] + 2.0 * dh, s, v);
    for (int ch = 0; ch < 3; ++ch) out.pixels[3 * i + ch] = clamp_byte(rgb[ch]);
  }
  return out;
}

/// Brightness, contrast and saturation factors ~ U[max(0, 1 - v), 1 + v]; hue shift
/// ~ U[-min(v, 0.5), min(v, 0.5)] turns. The four adjustments run in a random order.
inline RgbImage color_jitter(const RgbImage& src, double brightness, double contrast, double saturation, double hue,
                             Rng& rng) {
  auto factor = [&rng](double v) { return rng.uniform(std::max(0.0, 1.0 - v), 1.0 + v); };
  const double fb = factor(brightness);
  const double fc = factor(contrast);
  const double fs = factor(saturation);
  const double hue_bound = std::min(hue, 0.5);
  const double fh = rng.uniform(-hue_bound, hue_bound);
  std::array<int, 4> order{0, 1, 2, 3};
  rng.shuffle(std::span<int>(order));

  detail::FloatImage img(src);
  const std::size_t n = src.pixel_count();
  for (int op : order) {
    switch (op) {
      case 0:
        for (auto& v : img.data) v *= fb;
        break;
      case 1: {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += detail::luma(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
        mean /= static_cast<double>(n);
        for (auto& v : img.data) v = (v - mean) * fc + mean;
        break;
      }
      case 2:
        for (std::size_t i = 0; i < n; ++i) {
          const double g = detail::luma(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
          for (int ch = 0; ch < 3; ++ch) img.data[3 * i + ch] = g + fs * (img.data[3 * i + ch] - g);
        }
        break;
      default:
        for (std::size_t i = 0; i < n; ++i) {
          const auto hsv = detail::rgb_to_hsv(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
          const auto rgb = detail::hsv_to_rgb(hsv[0] + 360.0 * fh, hsv[1], hsv[2]);
          for (int ch = 0; ch < 3; ++ch) img.data[3 * i + ch] = rgb[ch];
        }
        break;
    }
    img.clamp();
  }
  return img.to_bytes();
}

/// Contrast factor ~ U[1 - v, 1 + v] about the image mean.
inline RgbImage random_contrast(const RgbImage& src, double limit, Rng& rng) {
  const double f = rng.uniform(1.0 - limit, 1.0 + limit);
  double mean = 0.0;
  for (auto p : src.pixels) mean += p;
  mean /= static_cast<double>(src.pixels.size());
  RgbImage out(src.height, src.width);
  for (std::size_t i = 0; i < src.pixels.size(); ++i) out.pixels[i] = clamp_byte((src.pixels[i] - mean) * f + mean);
  return out;
}

/// Kernel size is an odd integer drawn from [3, blur_limit] (blur_limit forced odd, at
/// least 3); sigma ~ U(0, sigma_limit], or derived from the kernel size when the limit is 0.
inline RgbImage gaussian_blur(const RgbImage& src, double blur_limit, double sigma_limit, Rng& rng) {
  int upper = static_cast<int>(std::floor(blur_limit));
  if (upper % 2 == 0) --upper;
  upper = std::max(upper, 3);
  const int ksize = 3 + 2 * static_cast<int>(rng.uniform_int(0, (upper - 3) / 2));
  double sigma = sigma_limit > 0.0 ? sigma_limit * (1.0 - rng.uniform()) : 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
  sigma = std::max(sigma, 1e-6);
  detail::FloatImage img(src);
  detail::separable_filter(img.data, img.height, img.width, 3, detail::gaussian_taps(sigma, ksize / 2));
  return img.to_bytes();
}

/// Blend of identity and the 3x3 sharpening kernel [-1 ... 8 + lightness ... -1].
/// The kernel is divided by its sum (= lightness) when lightness >= 1 so the
/// response preserves mean intensity; below 1 the raw kernel is used.
inline RgbImage sharpen(const RgbImage& src, double alpha, double lightness) {
  if (alpha == 0.0) return src;
  const double norm = std::max(lightness, 1.0);
  std::array<double, 9> k;
  for (int i = 0; i < 9; ++i) k[i] = alpha * (i == 4 ? (8.0 + lightness) : -1.0) / norm;
  k[4] += 1.0 - alpha;
  return detail::convolve3x3(src, k);
}

/// Blend of identity and the emboss kernel [[-1-s, -s, 0], [-s, 1, s], [0, s, 1+s]].
inline RgbImage emboss(const RgbImage& src, double alpha, double strength) {
  if (alpha == 0.0) return src;
  const double s = strength;
  const std::array<double, 9> effect{-1 - s, -s, 0, -s, 1, s, 0, s, 1 + s};
  std::array<double, 9> k;
  for (int i = 0; i < 9; ++i) k[i] = alpha * effect[i] + (i == 4 ? 1.0 - alpha : 0.0);
  return detail::convolve3x3(src, k);
}

// Occluding kernels: modify the image only.

/// `num_holes` rectangles of max_h x max_w filled with 255 at uniform positions.
inline RgbImage cutout(const RgbImage& src, int num_holes, int max_h, int max_w, Rng& rng) {
  RgbImage out = src;
  const int hh = std::min(max_h, src.height), hw = std::min(max_w, src.width);
  if (hh <= 0 || hw <= 0) return out;
  for (int i = 0; i < num_holes; ++i) {
    const int y0 = static_cast<int>(rng.uniform_int(0, src.height - hh));
    const int x0 = static_cast<int>(rng.uniform_int(0, src.width - hw));
    for (int r = y0; r < y0 + hh; ++r) {
      std::fill_n(&out.pixels[(static_cast<std::size_t>(r) * src.width + x0) * 3], static_cast<std::size_t>(hw) * 3,
                  std::uint8_t{255});
    }
  }
  return out;
}

/// Regular grid of holes (ratio 0.5 of each unit, no offset) filled with 0.
/// When holes_num > 0 the unit size is width / holes_num (height / holes_num vertically),
/// overriding the unit-size range; otherwise a unit size is drawn from [unit_min, unit_max].
inline RgbImage grid_dropout(const RgbImage& src, int unit_min, int unit_max, int holes_num, Rng& rng) {
  constexpr double kRatio = 0.5;
  int unit_h, unit_w;
  if (holes_num > 0) {
    unit_w = std::max(2, src.width / holes_num);
    unit_h = std::max(2, src.height / holes_num);
  } else {
    const int cap = std::max(2, std::min(src.height, src.width));
    const int lo = std::clamp(unit_min, 2, cap), hi = std::clamp(unit_max, lo, cap);
    unit_w = unit_h = static_cast<int>(rng.uniform_int(lo, hi));
  }
  const int hole_h = std::max(1, static_cast<int>(unit_h * kRatio));
  const int hole_w = std::max(1, static_cast<int>(unit_w * kRatio));
  RgbImage out = src;
  for (int y0 = 0; y0 < src.height; y0 += unit_h) {
    for (int x0 = 0; x0 < src.width; x0 += unit_w) {
      for (int r = y0; r < std::min(y0 + hole_h, src.height); ++r) {
        const int x1 = std::min(x0 + hole_w, src.width);
        std::fill_n(&out.pixels[(static_cast<std::size_t>(r) * src.width + x0) * 3], static_cast<std::size_t>(x1 - x0) * 3,
                    std::uint8_t{0});
      }
    }
  }
  return out;
}

// Geometric kernels: one backward map applied to image (bilinear) and mask (nearest).

/// Random affine (three anchor points jittered by +-alpha_affine) followed by a
/// displacement field alpha * Gaussian(sigma) * U(-1, 1).
inline AugmentedPair elastic_transform(const RgbImage& image, const ClassMask& mask, double alpha, double sigma,
                                       double alpha_affine, Rng& rng) {
  const int h = image.height, w = image.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  // Inverse affine (destination -> source) as a 2x3 matrix; identity when alpha_affine == 0.
  std::array<double, 6> inv{1, 0, 0, 0, 1, 0};
  if (alpha_affine > 0.0) {
    const double cx = w / 2.0, cy = h / 2.0, sq = std::min(h, w) / 3.0;
    const std::array<std::array<double, 2>, 3> src_pts{{{cx + sq, cy + sq}, {cx + sq, cy - sq}, {cx - sq, cy - sq}}};
    std::array<std::array<double, 2>, 3> dst_pts = src_pts;
    for (auto& p : dst_pts) {
      p[0] += rng.uniform(-alpha_affine, alpha_affine);
      p[1] += rng.uniform(-alpha_affine, alpha_affine);
    }
    // Solve for the map dst -> src directly: [x_s, y_s] = A [x_d, y_d, 1].
    const double x1 = dst_pts[0][0], y1 = dst_pts[0][1], x2 = dst_pts[1][0], y2 = dst_pts[1][1];
    const double x3 = dst_pts[2][0], y3 = dst_pts[2][1];
    const double det = x1 * (y2 - y3) - y1 * (x2 - x3) + (x2 * y3 - x3 * y2);
    if (std::fabs(det) > 1e-9) {
      for (int row = 0; row < 2; ++row) {
        const double u1 = src_pts[0][row], u2 = src_pts[1][row], u3 = src_pts[2][row];
        const double a = (u1 * (y2 - y3) - y1 * (u2 - u3) + (u2 * y3 - u3 * y2)) / det;
        const double b = (x1 * (u2 - u3) - u1 * (x2 - x3) + (x2 * u3 - x3 * u2)) / det;
        const double c = (x1 * (y2 * u3 - y3 * u2) - y1 * (x2 * u3 - x3 * u2) + u1 * (x2 * y3 - x3 * y2)) / det;
        inv[row * 3 + 0] = a;
        inv[row * 3 + 1] = b;
        inv[row * 3 + 2] = c;
      }
    }
  }

  std::vector<double> field(2 * n, 0.0);
  if (alpha != 0.0) {
    for (auto& v : field) v = rng.uniform(-1.0, 1.0);
    if (sigma > 0.0) {
      const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
      detail::separable_filter(field, h, w, 2, detail::gaussian_taps(sigma, radius));
    }
    for (auto& v : field) v *= alpha;
  }

  std::vector<double> map_y(n), map_x(n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const double qx = c + field[2 * i], qy = r + field[2 * i + 1];
      map_x[i] = inv[0] * qx + inv[1] * qy + inv[2];
      map_y[i] = inv[3] * qx + inv[4] * qy + inv[5];
    }
  }
  AugmentedPair out;
  detail::remap(image, mask, map_y, map_x, out.image, out.mask);
  return out;
}

/// Radial lens distortion with k1 = k2 = k ~ U[-distort_limit, distort_limit] about a
/// centre shifted by U[-shift_limit, shift_limit] pixels on each axis.
inline AugmentedPair optical_distortion(const RgbImage& image, const ClassMask& mask, double distort_limit,
                                        double shift_limit, Rng& rng) {
  const int h = image.height, w = image.width;
  const double k = rng.uniform(-distort_limit, distort_limit);
  const double cx = w * 0.5 + rng.uniform(-shift_limit, shift_limit);
  const double cy = h * 0.5 + rng.uniform(-shift_limit, shift_limit);
  const double fx = w, fy = h;
  std::vector<double> map_y(static_cast<std::size_t>(h) * w), map_x(map_y.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double u = (c - cx) / fx, v = (r - cy) / fy;
      const double r2 = u * u + v * v;
      const double scale = 1.0 + k * r2 + k * r2 * r2;
      map_x[static_cast<std::size_t>(r) * w + c] = u * scale * fx + cx;
      map_y[static_cast<std::size_t>(r) * w + c] = v * scale * fy + cy;
    }
  }
  AugmentedPair out;
  detail::remap(image, mask, map_y, map_x, out.image, out.mask);
  return out;
}

namespace detail_grid {

/// One axis of the grid-distortion map: num_steps cells (the last absorbs the
/// remainder), cell i stretched by 1 + U[-distort, distort]. Zero distortion is the identity.
inline std::vector<double> axis_map(int length, int num_steps, double distort, Rng& rng) {
  const int step = length / num_steps;
  std::vector<double> out(length, 0.0);
  double origin = 0.0;
  for (int i = 0; i < num_steps; ++i) {
    const double scale = 1.0 + rng.uniform(-distort, distort);
    const int start = i * step;
    const int end = i + 1 == num_steps ? length : start + step;
    for (int x = start; x < end; ++x) out[x] = origin + (x - start) * scale;
    origin += step * scale;
  }
  return out;
}

}  // namespace detail_grid

inline AugmentedPair grid_distortion(const RgbImage& image, const ClassMask& mask, int num_steps, double distort_limit,
                                     Rng& rng) {
  const int h = image.height, w = image.width;
  const int steps_x = std::clamp(num_steps, 1, w), steps_y = std::clamp(num_steps, 1, h);
  const auto xs = detail_grid::axis_map(w, steps_x, distort_limit, rng);
  const auto ys = detail_grid::axis_map(h, steps_y, distort_limit, rng);
  std::vector<double> map_y(static_cast<std::size_t>(h) * w), map_x(map_y.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      map_x[static_cast<std::size_t>(r) * w + c] = xs[c];
      map_y[static_cast<std::size_t>(r) * w + c] = ys[r];
    }
  }
  AugmentedPair out;
  detail::remap(image, mask, map_y, map_x, out.image, out.mask);
  return out;
}

}  // namespace kernels

/// Applies one resolved augmentation. Only geometric kinds modify the mask.
inline AugmentedPair apply_augment(const AugmentInstance& inst, const RgbImage& image, const ClassMask& mask, Rng& rng) {
  require_same_shape(image, mask, "apply_augment");
  auto p = [&inst](std::string_view name) { return inst.param(name); };
  auto pi = [&inst](std::string_view name) { return static_cast<int>(std::lround(inst.param(name))); };
  switch (inst.kind) {
    case AugmentKind::kRandomGamma:
      return {kernels::random_gamma(image, p("gamma_limit_upper"), rng), mask};
    case AugmentKind::kCLAHE:
      return {kernels::clahe(image, p("clip_limit"), pi("tile_grid_size")), mask};
    case AugmentKind::kCutOut:
      return {kernels::cutout(image, pi("num_holes"), pi("max_h_size"), pi("max_w_size"), rng), mask};
    case AugmentKind::kHueSaturationValue:
      return {kernels::hue_saturation_value(image, p("hue_shift_limit"), p("sat_shift_limit"), p("val_shift_limit"), rng),
              mask};
    case AugmentKind::kColorJitter:
      return {kernels::color_jitter(image, p("brightness"), p("contrast"), p("saturation"), p("hue"), rng), mask};
    case AugmentKind::kElasticTransform:
      return kernels::elastic_transform(image, mask, p("alpha"), p("sigma"), p("alpha_affine"), rng);
    case AugmentKind::kOpticalDistortion:
      return kernels::optical_distortion(image, mask, p("distort_limit_high"), p("shift_limit_high"), rng);
    case AugmentKind::kGridDistortion:
      return kernels::grid_distortion(image, mask, pi("num_steps"), p("distort_limit"), rng);
    case AugmentKind::kRandomContrast:
      return {kernels::random_contrast(image, p("contrast_limit_upper"), rng), mask};
    case AugmentKind::kGridDropout:
      return {kernels::grid_dropout(image, pi("unit_size_min"), pi("unit_size_max"), pi("holes_num"), rng), mask};
    case AugmentKind::kGaussianBlur:
      return {kernels::gaussian_blur(image, p("blur_limit"), p("sigma_limit"), rng), mask};
    case AugmentKind::kSharpen:
      return {kernels::sharpen(image, p("alpha"), p("lightness")), mask};
    case AugmentKind::kEmboss:
      return {kernels::emboss(image, p("alpha"), p("strength")), mask};
  }
  return {image, mask};
}

}  // namespace augsearch::augment

#endif  // AUGSEARCH_AUGMENT_KERNELS_HPP
