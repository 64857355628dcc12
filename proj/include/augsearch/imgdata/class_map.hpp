#ifndef AUGSEARCH_IMGDATA_CLASS_MAP_HPP
#define AUGSEARCH_IMGDATA_CLASS_MAP_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/image.hpp"

namespace augsearch::imgdata {

inline constexpr int kGroupedClasses = 6;
inline constexpr int kRawClasses = 22;

/// Total mapping from raw annotation ids to the six grouped classes.
struct ClassMap {
  std::map<int, int> raw_to_grouped;
  std::vector<std::string> class_names;

  void validate() const {
    if (class_names.size() != kGroupedClasses) {
      throw std::invalid_argument("ClassMap: expected 6 class_names, got " + std::to_string(class_names.size()));
    }
    for (const auto& [raw, grouped] : raw_to_grouped) {
      if (raw < 0 || raw > 255) throw std::invalid_argument("ClassMap: raw id " + std::to_string(raw) + " out of byte range");
      if (grouped < 0 || grouped >= kGroupedClasses) {
        throw std::invalid_argument("ClassMap: raw id " + std::to_string(raw) + " maps to " + std::to_string(grouped) +
                                    ", outside 0..5");
      }
    }
  }

  static ClassMap identity(int num_classes = kGroupedClasses) {
    ClassMap map = default_map();
    map.raw_to_grouped.clear();
    for (int c = 0; c < num_classes; ++c) map.raw_to_grouped[c] = c;
    return map;
  }

  /// Six-way grouping of the 22 raw annotation classes.
  ///
  /// Raw numbering follows the public dataset's label table:
  ///  0 outside_roi, 1 tumor, 2 stroma, 3 lymphocytic_infiltrate, 4 necrosis_or_debris,
  ///  5 glandular_secretions, 6 blood, 7 exclude, 8 metaplasia_NOS, 9 fat, 10 plasma_cells,
  ///  11 other_immune_infiltrate, 12 mucoid_material, 13 normal_acinus_or_duct, 14 lymphatics,
  ///  15 undetermined, 16 nerve, 17 skin_adnexa, 18 blood_vessel, 19 angioinvasion, 20 dcis, 21 other.
  /// Replace data/class_map_default.json if the upstream ids differ.
  static ClassMap default_map() {
    ClassMap map;
    map.class_names = {"Out of scope", "Tumourous", "Stroma", "Inflammatory infiltration", "Necrosis",
                       "Other tissues"};
    for (int raw = 0; raw < kRawClasses; ++raw) map.raw_to_grouped[raw] = 5;
    map.raw_to_grouped[0] = 0;
    for (int raw : {1, 19, 20}) map.raw_to_grouped[raw] = 1;
    map.raw_to_grouped[2] = 2;
    for (int raw : {3, 10, 11}) map.raw_to_grouped[raw] = 3;
    map.raw_to_grouped[4] = 4;
    return map;
  }
};

inline nlohmann::json to_json(const ClassMap& map) {
  nlohmann::json raw = nlohmann::json::object();
  for (const auto& [k, v] : map.raw_to_grouped) raw[std::to_string(k)] = v;
  return {{"raw_to_grouped", raw}, {"class_names", map.class_names}};
}

inline ClassMap class_map_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("ClassMap: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "raw_to_grouped" && key != "class_names") throw std::invalid_argument("ClassMap: unknown key '" + key + "'");
  }
  ClassMap map;
  for (const auto& [key, value] : j.at("raw_to_grouped").items()) {
    std::size_t used = 0;
    int raw = -1;
    try {
      raw = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) throw std::invalid_argument("ClassMap: raw id '" + key + "' is not an integer");
    map.raw_to_grouped[raw] = value.get<int>();
  }
  map.class_names = j.at("class_names").get<std::vector<std::string>>();
  map.validate();
  return map;
}

inline ClassMap load_class_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open class map " + path);
  return class_map_from_json(nlohmann::json::parse(in));
}

/// Relabels every pixel through `map`. Throws naming the first unmapped id and its pixel index.
inline ClassMask collapse_classes(const ClassMask& mask, const ClassMap& map) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (const auto& [raw, grouped] : map.raw_to_grouped) {
    if (raw >= 0 && raw < 256) lut[raw] = grouped;
  }
  ClassMask out = mask;
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    const int g = lut[mask.labels[i]];
    if (g < 0) {
      throw std::invalid_argument("collapse_classes: raw id " + std::to_string(mask.labels[i]) +
                                  " at pixel index " + std::to_string(i) + " is not in the class map");
    }
    out.labels[i] = static_cast<std::uint8_t>(g);
  }
  return out;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_CLASS_MAP_HPP
