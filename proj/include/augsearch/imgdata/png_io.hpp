#ifndef AUGSEARCH_IMGDATA_PNG_IO_HPP
#define AUGSEARCH_IMGDATA_PNG_IO_HPP

#include <png.h>

#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include "augsearch/image.hpp"
#include "augsearch/imgdata/patching.hpp"

namespace augsearch::imgdata {

namespace detail {

class PngReader {
 public:
  explicit PngReader(const std::string& path) : path_(path) {
    std::memset(&image_, 0, sizeof(image_));
    image_.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image_, path.c_str())) {
      throw std::runtime_error("cannot decode PNG " + path + ": " + image_.message);
    }
  }
  ~PngReader() { png_image_free(&image_); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_image& image() { return image_; }

  void finish(png_uint_32 format, std::uint8_t* buffer) {
    image_.format = format;
    if (!png_image_finish_read(&image_, nullptr, buffer, 0, nullptr)) {
      throw std::runtime_error("cannot decode PNG " + path_ + ": " + image_.message);
    }
  }

 private:
  std::string path_;
  png_image image_;
};

inline void write_png(const std::string& path, int height, int width, png_uint_32 format, const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot write PNG " + path + ": " + message);
  }
}

}  // namespace detail

inline RgbImage load_png_rgb(const std::string& path) {
  detail::PngReader reader(path);
  auto& info = reader.image();
  RgbImage out(static_cast<int>(info.height), static_cast<int>(info.width));
  reader.finish(PNG_FORMAT_RGB, out.pixels.data());
  return out;
}

/// Reads a single-channel 8-bit label PNG; pixel value = class id. Colour or 16-bit files are rejected.
inline ClassMask load_png_mask(const std::string& path) {
  detail::PngReader reader(path);
  auto& info = reader.image();
  if (info.format & PNG_FORMAT_FLAG_COLOR) throw std::runtime_error("mask PNG " + path + " is not single-channel");
  if (info.format & PNG_FORMAT_FLAG_LINEAR) throw std::runtime_error("mask PNG " + path + " is not 8-bit");
  ClassMask out(static_cast<int>(info.height), static_cast<int>(info.width));
  reader.finish(PNG_FORMAT_GRAY, out.labels.data());
  return out;
}

inline void save_png_rgb(const RgbImage& image, const std::string& path) {
  detail::write_png(path, image.height, image.width, PNG_FORMAT_RGB, image.pixels.data());
}

inline void save_png_mask(const ClassMask& mask, const std::string& path) {
  detail::write_png(path, mask.height, mask.width, PNG_FORMAT_GRAY, mask.labels.data());
}

/// Loads an image/mask pair; the slide id is taken from the image file name minus `_img.png`.
inline PatchPair load_pair(const std::string& image_path, const std::string& mask_path, std::string lab_code = {}) {
  PatchPair pair;
  pair.image = load_png_rgb(image_path);
  pair.mask = load_png_mask(mask_path);
  require_same_shape(pair.image, pair.mask, "load_pair(" + image_path + ")");
  std::string stem = std::filesystem::path(image_path).stem().string();
  if (stem.size() > 4 && stem.ends_with("_img")) stem.resize(stem.size() - 4);
  pair.source_slide = std::move(stem);
  pair.lab_code = std::move(lab_code);
  return pair;
}

struct PairPaths {
  std::string image;
  std::string mask;
};

/// Writes `<stem>_img.png` and `<stem>_mask.png` into `dir`. Stem defaults to PatchPair::stem().
inline PairPaths save_pair(const PatchPair& pair, const std::string& dir, std::string stem = {}) {
  require_same_shape(pair.image, pair.mask, "save_pair");
  if (stem.empty()) stem = pair.stem();
  std::filesystem::create_directories(dir);
  PairPaths paths{(std::filesystem::path(dir) / (stem + "_img.png")).string(),
                  (std::filesystem::path(dir) / (stem + "_mask.png")).string()};
  save_png_rgb(pair.image, paths.image);
  save_png_mask(pair.mask, paths.mask);
  return paths;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_PNG_IO_HPP
