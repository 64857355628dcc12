#ifndef AUGSEARCH_IMGDATA_DATASET_DIR_HPP
#define AUGSEARCH_IMGDATA_DATASET_DIR_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/imgdata/class_map.hpp"
#include "augsearch/imgdata/patching.hpp"
#include "augsearch/imgdata/png_io.hpp"
#include "augsearch/imgdata/splits.hpp"

namespace augsearch::imgdata {

// On-disk layout:
//   slide directory:  <slide>_img.png, <slide>_mask.png, manifest.json  {"<slide>": "<lab code>"}
//   patch directory:  <slide>_r<row>_c<col>_{img,mask}.png, splits.json {"<patch stem>": "train"|"val"|"test"}

inline constexpr const char* kSlideManifest = "manifest.json";
inline constexpr const char* kSplitManifest = "splits.json";

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Slide id -> lab code, as read from the slide directory's manifest.
inline std::map<std::string, std::string> read_slide_manifest(const std::filesystem::path& dir) {
  return read_json_file(dir / kSlideManifest).get<std::map<std::string, std::string>>();
}

/// Writes every pair as `<source_slide>_{img,mask}.png` plus the slide manifest.
inline void write_slide_directory(const std::vector<PatchPair>& slides, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::object();
  for (const auto& s : slides) {
    save_pair(s, dir.string(), s.source_slide);
    manifest[s.source_slide] = s.lab_code;
  }
  write_json_file(dir / kSlideManifest, manifest);
}

/// Loads every slide listed in the manifest, sorted by slide id.
inline std::vector<PatchPair> read_slide_directory(const std::filesystem::path& dir) {
  std::vector<PatchPair> out;
  for (const auto& [slide, lab] : read_slide_manifest(dir)) {
    out.push_back(load_pair((dir / (slide + "_img.png")).string(), (dir / (slide + "_mask.png")).string(), lab));
  }
  return out;
}

struct PrepareOptions {
  int patch_size = 800;
  int stride = 400;
  ClassMap class_map = ClassMap::default_map();
  SplitSpec split = SplitSpec::lab_default();
};

struct PrepareSummary {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Slide directory -> collapsed, patched, lab-split patch directory. Never writes into `slide_dir`.
inline PrepareSummary prepare_patch_directory(const std::filesystem::path& slide_dir, const std::filesystem::path& out_dir,
                                              const PrepareOptions& options) {
  options.split.validate();
  std::filesystem::create_directories(out_dir);
  nlohmann::json splits = nlohmann::json::object();
  PrepareSummary summary;
  for (const auto& [slide, lab] : read_slide_manifest(slide_dir)) {
    PatchPair pair =
        load_pair((slide_dir / (slide + "_img.png")).string(), (slide_dir / (slide + "_mask.png")).string(), lab);
    const ClassMask grouped = collapse_classes(pair.mask, options.class_map);
    Subset subset;
    try {
      subset = subset_of(options.split, lab);
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("prepare: slide " + slide + " has unassigned lab code " + lab);
    }
    for (auto& patch : extract_patches(pair.image, grouped, options.patch_size, options.stride, slide, lab)) {
      save_pair(patch, out_dir.string());
      splits[patch.stem()] = to_string(subset);
      switch (subset) {
        case Subset::kTrain: ++summary.train; break;
        case Subset::kVal: ++summary.val; break;
        case Subset::kTest: ++summary.test; break;
      }
    }
  }
  write_json_file(out_dir / kSplitManifest, splits);
  return summary;
}

/// Reads a prepared patch directory back into train/val/test sets (sorted by patch stem).
inline SplitResult read_patch_directory(const std::filesystem::path& dir) {
  SplitResult out;
  const auto splits = read_json_file(dir / kSplitManifest).get<std::map<std::string, std::string>>();
  for (const auto& [stem, subset] : splits) {
    PatchPair p = load_pair((dir / (stem + "_img.png")).string(), (dir / (stem + "_mask.png")).string());
    p.source_slide = stem;
    if (subset == "train") {
      out.train.push_back(std::move(p));
    } else if (subset == "val") {
      out.val.push_back(std::move(p));
    } else if (subset == "test") {
      out.test.push_back(std::move(p));
    } else {
      throw std::invalid_argument("splits.json: patch " + stem + " has unknown subset '" + subset + "'");
    }
  }
  return out;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_DATASET_DIR_HPP
