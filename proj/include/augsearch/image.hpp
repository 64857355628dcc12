#ifndef AUGSEARCH_IMAGE_HPP
#define AUGSEARCH_IMAGE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace augsearch {

/// H x W x 3 interleaved 8-bit image, row-major.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int h, int w, std::uint8_t fill = 0) : height(h), width(w) {
    if (h < 1 || w < 1) throw std::invalid_argument("RgbImage: dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(h) * w * 3, fill);
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  std::uint8_t& at(int r, int c, int ch) { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  std::uint8_t at(int r, int c, int ch) const { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }

  bool operator==(const RgbImage&) const = default;
};

/// H x W label mask; each entry is a class id.
struct ClassMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  ClassMask() = default;
  ClassMask(int h, int w, std::uint8_t fill = 0) : height(h), width(w) {
    if (h < 1 || w < 1) throw std::invalid_argument("ClassMask: dimensions must be positive");
    labels.assign(static_cast<std::size_t>(h) * w, fill);
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }

  bool operator==(const ClassMask&) const = default;
};

inline bool same_shape(const RgbImage& image, const ClassMask& mask) {
  return image.height == mask.height && image.width == mask.width;
}

inline void require_same_shape(const RgbImage& image, const ClassMask& mask, const std::string& where) {
  if (!same_shape(image, mask)) {
    throw std::invalid_argument(where + ": image is " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " but mask is " + std::to_string(mask.height) +
                                "x" + std::to_string(mask.width));
  }
}

inline std::uint8_t clamp_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

/// Bilinear resize (pixel-centre aligned).
inline RgbImage resize_bilinear(const RgbImage& src, int out_h, int out_w) {
  if (src.height == out_h && src.width == out_w) return src;
  RgbImage dst(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.at(y0, x0, ch) * (1 - wx) + src.at(y0, x1, ch) * wx;
        const double bottom = src.at(y1, x0, ch) * (1 - wx) + src.at(y1, x1, ch) * wx;
        dst.at(r, c, ch) = clamp_byte(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return dst;
}

/// Nearest-neighbour resize; never invents labels.
inline ClassMask resize_nearest(const ClassMask& src, int out_h, int out_w) {
  if (src.height == out_h && src.width == out_w) return src;
  ClassMask dst(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    const int sr = std::min(src.height - 1, static_cast<int>((r + 0.5) * src.height / out_h));
    for (int c = 0; c < out_w; ++c) {
      const int sc = std::min(src.width - 1, static_cast<int>((c + 0.5) * src.width / out_w));
      dst.at(r, c) = src.at(sr, sc);
    }
  }
  return dst;
}

}  // namespace augsearch

#endif  // AUGSEARCH_IMAGE_HPP
