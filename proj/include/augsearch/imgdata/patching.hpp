#ifndef AUGSEARCH_IMGDATA_PATCHING_HPP
#define AUGSEARCH_IMGDATA_PATCHING_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/image.hpp"

namespace augsearch::imgdata {

struct PixelOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const PixelOrigin&) const = default;
};

/// One training pair plus its provenance.
struct PatchPair {
  RgbImage image;
  ClassMask mask;
  std::string source_slide;
  std::string lab_code;
  PixelOrigin origin;

  /// `<slide>_r<row>_c<col>`, the stem used for patch files on disk.
  std::string stem() const {
    return source_slide + "_r" + std::to_string(origin.row) + "_c" + std::to_string(origin.col);
  }
};

/// Offsets 0, stride, 2*stride, ... along one axis; the last one is clamped so
/// the final window ends exactly at the border.
inline std::vector<int> patch_offsets(int length, int patch_size, int stride) {
  std::vector<int> offsets;
  for (int o = 0;; o += stride) {
    const int clamped = std::min(o, length - patch_size);
    if (offsets.empty() || offsets.back() != clamped) offsets.push_back(clamped);
    if (o + patch_size >= length) break;
  }
  return offsets;
}

inline std::vector<PatchPair> extract_patches(const RgbImage& image, const ClassMask& mask, int patch_size, int stride,
                                              const std::string& source_slide = {},
                                              const std::string& lab_code = {}) {
  require_same_shape(image, mask, "extract_patches");
  if (patch_size < 1) throw std::invalid_argument("extract_patches: patch_size must be positive");
  if (patch_size > image.height || patch_size > image.width) {
    throw std::invalid_argument("extract_patches: image " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " is smaller than patch size " +
                                std::to_string(patch_size));
  }
  if (stride < 1 || stride > patch_size) {
    throw std::invalid_argument("extract_patches: stride must lie in [1, patch_size]");
  }

  const auto rows = patch_offsets(image.height, patch_size, stride);
  const auto cols = patch_offsets(image.width, patch_size, stride);
  std::vector<PatchPair> out;
  out.reserve(rows.size() * cols.size());
  for (int r0 : rows) {
    for (int c0 : cols) {
      PatchPair p{RgbImage(patch_size, patch_size), ClassMask(patch_size, patch_size), source_slide, lab_code, {r0, c0}};
      for (int r = 0; r < patch_size; ++r) {
        const auto* src = &image.pixels[(static_cast<std::size_t>(r0 + r) * image.width + c0) * 3];
        std::copy(src, src + static_cast<std::size_t>(patch_size) * 3,
                  &p.image.pixels[static_cast<std::size_t>(r) * patch_size * 3]);
        const auto* msrc = &mask.labels[static_cast<std::size_t>(r0 + r) * mask.width + c0];
        std::copy(msrc, msrc + patch_size, &p.mask.labels[static_cast<std::size_t>(r) * patch_size]);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_PATCHING_HPP
