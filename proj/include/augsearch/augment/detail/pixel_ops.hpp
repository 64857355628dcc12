#ifndef AUGSEARCH_AUGMENT_DETAIL_PIXEL_OPS_HPP
#define AUGSEARCH_AUGMENT_DETAIL_PIXEL_OPS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "augsearch/image.hpp"

namespace augsearch::augment::detail {

/// Reflect-101 border handling (…cb|abcd|cb…); valid for any integer index.
inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Floating-point working copy of an image, values nominally in [0, 255].
struct FloatImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  explicit FloatImage(const RgbImage& img) : height(img.height), width(img.width), data(img.pixels.begin(), img.pixels.end()) {}

  double& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  double at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }

  void clamp() {
    for (auto& v : data) v = std::clamp(v, 0.0, 255.0);
  }

  RgbImage to_bytes() const {
    RgbImage out(height, width);
    for (std::size_t i = 0; i < data.size(); ++i) out.pixels[i] = clamp_byte(data[i]);
    return out;
  }
};

inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// RGB in [0,255] -> (hue degrees in [0,360), saturation [0,1], value [0,1]).
inline std::array<double, 3> rgb_to_hsv(double r, double g, double b) {
  r /= 255.0;
  g /= 255.0;
  b /= 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
  }
  if (h < 0.0) h += 360.0;
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

/// 3x3 convolution (correlation) per channel with reflect-101 borders.
inline RgbImage convolve3x3(const RgbImage& src, const std::array<double, 9>& kernel) {
  RgbImage out(src.height, src.width);
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int rr = reflect101(r + dy, src.height);
          for (int dx = -1; dx <= 1; ++dx) {
            acc += kernel[(dy + 1) * 3 + (dx + 1)] * src.at(rr, reflect101(c + dx, src.width), ch);
          }
        }
        out.at(r, c, ch) = clamp_byte(acc);
      }
    }
  }
  return out;
}

/// Normalised 1-D Gaussian taps of radius `radius`.
inline std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    taps[i + radius] = v;
    sum += v;
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

/// Separable filtering of a planar field (`channels` interleaved values per pixel).
inline void separable_filter(std::vector<double>& field, int height, int width, int channels,
                             const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(field.size());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[k + radius] * field[(static_cast<std::size_t>(r) * width + reflect101(c + k, width)) * channels + ch];
        }
        tmp[(static_cast<std::size_t>(r) * width + c) * channels + ch] = acc;
      }
    }
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[k + radius] * tmp[(static_cast<std::size_t>(reflect101(r + k, height)) * width + c) * channels + ch];
        }
        field[(static_cast<std::size_t>(r) * width + c) * channels + ch] = acc;
      }
    }
  }
}

/// Backward warp: output pixel (r, c) samples the source at (map_y, map_x).
/// Image is sampled bilinearly, mask by nearest neighbour; both with reflect-101 borders.
inline void remap(const RgbImage& image, const ClassMask& mask, const std::vector<double>& map_y,
                  const std::vector<double>& map_x, RgbImage& out_image, ClassMask& out_mask) {
  const int h = image.height, w = image.width;
  out_image = RgbImage(h, w);
  out_mask = ClassMask(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      const double sy = std::clamp(map_y[idx], -1e6, 1e6), sx = std::clamp(map_x[idx], -1e6, 1e6);
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double wy = sy - fy, wx = sx - fx;
      const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
      const int ry0 = reflect101(y0, h), ry1 = reflect101(y0 + 1, h);
      const int rx0 = reflect101(x0, w), rx1 = reflect101(x0 + 1, w);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = image.at(ry0, rx0, ch) * (1.0 - wx) + image.at(ry0, rx1, ch) * wx;
        const double bottom = image.at(ry1, rx0, ch) * (1.0 - wx) + image.at(ry1, rx1, ch) * wx;
        out_image.at(r, c, ch) = clamp_byte(top * (1.0 - wy) + bottom * wy);
      }
      const int ny = reflect101(static_cast<int>(std::floor(sy + 0.5)), h);
      const int nx = reflect101(static_cast<int>(std::floor(sx + 0.5)), w);
      out_mask.at(r, c) = mask.at(ny, nx);
    }
  }
}

}  // namespace augsearch::augment::detail

#endif  // AUGSEARCH_AUGMENT_DETAIL_PIXEL_OPS_HPP
