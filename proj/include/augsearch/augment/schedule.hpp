#ifndef AUGSEARCH_AUGMENT_SCHEDULE_HPP
#define AUGSEARCH_AUGMENT_SCHEDULE_HPP

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace augsearch::augment {

/// The thirteen augmentation kinds, in application order.
enum class AugmentKind {
  kRandomGamma,
  kCLAHE,
  kCutOut,
  kHueSaturationValue,
  kColorJitter,
  kElasticTransform,
  kOpticalDistortion,
  kGridDistortion,
  kRandomContrast,
  kGridDropout,
  kGaussianBlur,
  kSharpen,
  kEmboss,
};

inline constexpr int kNumKinds = 13;
inline constexpr int kNumLevels = 30;
inline constexpr int kMaxLevel = kNumLevels - 1;

inline constexpr std::array<AugmentKind, kNumKinds> kAllKinds{
    AugmentKind::kRandomGamma,      AugmentKind::kCLAHE,          AugmentKind::kCutOut,
    AugmentKind::kHueSaturationValue, AugmentKind::kColorJitter,  AugmentKind::kElasticTransform,
    AugmentKind::kOpticalDistortion, AugmentKind::kGridDistortion, AugmentKind::kRandomContrast,
    AugmentKind::kGridDropout,      AugmentKind::kGaussianBlur,   AugmentKind::kSharpen,
    AugmentKind::kEmboss,
};

inline constexpr std::string_view kind_name(AugmentKind kind) {
  constexpr std::array<std::string_view, kNumKinds> names{
      "RandomGamma",     "CLAHE",          "CutOut",      "HueSaturationValue", "ColorJitter",
      "ElasticTransform", "OpticalDistortion", "GridDistortion", "RandomContrast", "GridDropout",
      "GaussianBlur",    "Sharpen",        "Emboss"};
  return names[static_cast<int>(kind)];
}

inline std::optional<AugmentKind> kind_from_name(std::string_view name) {
  for (auto kind : kAllKinds) {
    if (kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

/// Spatial warps; these are the only kinds that touch the mask.
inline constexpr bool is_geometric(AugmentKind kind) {
  return kind == AugmentKind::kElasticTransform || kind == AugmentKind::kOpticalDistortion ||
         kind == AugmentKind::kGridDistortion;
}

inline constexpr bool is_occluding(AugmentKind kind) {
  return kind == AugmentKind::kCutOut || kind == AugmentKind::kGridDropout;
}

struct ParamRange {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool integer = false;
};

/// lower + (upper - lower) * level / 29, rounded half-up when `as_int`.
inline double schedule_value(double lower, double upper, int level, bool as_int) {
  if (level < 0 || level > kMaxLevel) {
    throw std::out_of_range("schedule_value: level " + std::to_string(level) + " outside [0, 29]");
  }
  if (lower > upper) throw std::invalid_argument("schedule_value: lower bound exceeds upper bound");
  const double v = lower + (upper - lower) * level / static_cast<double>(kMaxLevel);
  return as_int ? std::floor(v + 0.5) : v;
}

/// Per-kind parameter ranges; level M selects one of 30 equally spaced values.
class MagnitudeSchedule {
 public:
  /// The published schedule. OpticalDistortion's limits are real-valued here (see README).
  static const MagnitudeSchedule& defaults() {
    static const MagnitudeSchedule schedule = [] {
      MagnitudeSchedule s;
      auto set = [&s](AugmentKind k, std::vector<ParamRange> p) { s.params_[static_cast<int>(k)] = std::move(p); };
      set(AugmentKind::kRandomGamma, {{"gamma_limit_upper", 0, 120, true}});
      set(AugmentKind::kCLAHE, {{"clip_limit", 0, 10, true}, {"tile_grid_size", 8, 64, true}});
      set(AugmentKind::kCutOut, {{"num_holes", 0, 30, true}, {"max_h_size", 0, 20, true}, {"max_w_size", 0, 20, true}});
      set(AugmentKind::kHueSaturationValue,
          {{"hue_shift_limit", 0, 50, true}, {"sat_shift_limit", 0, 50, true}, {"val_shift_limit", 0, 50, true}});
      set(AugmentKind::kColorJitter, {{"brightness", 0, 1.0, false},
                                      {"contrast", 0, 1.0, false},
                                      {"saturation", 0, 1.0, false},
                                      {"hue", 0, 1.0, false}});
      set(AugmentKind::kElasticTransform, {{"alpha", 0, 1000, true}, {"sigma", 0, 50, true}, {"alpha_affine", 0, 60, true}});
      set(AugmentKind::kOpticalDistortion, {{"distort_limit_high", 0, 0.5, false}, {"shift_limit_high", 0, 0.5, false}});
      set(AugmentKind::kGridDistortion, {{"num_steps", 4, 20, true}, {"distort_limit", 0, 1.0, false}});
      set(AugmentKind::kRandomContrast, {{"contrast_limit_upper", 0, 1.0, false}});
      set(AugmentKind::kGridDropout,
          {{"unit_size_min", 10, 210, true}, {"unit_size_max", 10, 210, true}, {"holes_num", 0, 100, true}});
      set(AugmentKind::kGaussianBlur, {{"blur_limit", 0, 10, false}, {"sigma_limit", 0.0, 5.0, false}});
      set(AugmentKind::kSharpen, {{"alpha", 0.0, 1.0, false}, {"lightness", 0, 10, false}});
      set(AugmentKind::kEmboss, {{"alpha", 0.0, 1.0, false}, {"strength", 0.0, 2.0, false}});
      return s;
    }();
    return schedule;
  }

  const std::vector<ParamRange>& params(AugmentKind kind) const { return params_[static_cast<int>(kind)]; }

  /// Parses {kind: {param: {lower, upper, int}}}. Kinds and parameter names must match the defaults exactly.
  static MagnitudeSchedule from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("schedule: expected a JSON object");
    MagnitudeSchedule s;
    for (const auto& [kind_str, params] : j.items()) {
      const auto kind = kind_from_name(kind_str);
      if (!kind) throw std::invalid_argument("schedule: unknown augmentation '" + kind_str + "'");
      const auto& reference = defaults().params(*kind);
      if (!params.is_object() || params.size() != reference.size()) {
        throw std::invalid_argument("schedule: " + kind_str + " must list exactly " + std::to_string(reference.size()) +
                                    " parameters");
      }
      std::vector<ParamRange> ranges;
      for (const auto& ref : reference) {
        if (!params.contains(ref.name)) throw std::invalid_argument("schedule: " + kind_str + " lacks " + ref.name);
        const auto& p = params.at(ref.name);
        for (const auto& [key, _] : p.items()) {
          if (key != "lower" && key != "upper" && key != "int") {
            throw std::invalid_argument("schedule: " + kind_str + "." + ref.name + " has unknown key " + key);
          }
        }
        ParamRange r{ref.name, p.at("lower").get<double>(), p.at("upper").get<double>(), p.at("int").get<bool>()};
        if (r.lower > r.upper) throw std::invalid_argument("schedule: " + kind_str + "." + ref.name + " has lower > upper");
        ranges.push_back(r);
      }
      s.params_[static_cast<int>(*kind)] = std::move(ranges);
    }
    for (auto kind : kAllKinds) {
      if (s.params(kind).empty()) throw std::invalid_argument("schedule: missing augmentation " + std::string(kind_name(kind)));
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (auto kind : kAllKinds) {
      nlohmann::json params = nlohmann::json::object();
      for (const auto& p : this->params(kind)) params[p.name] = {{"lower", p.lower}, {"upper", p.upper}, {"int", p.integer}};
      j[std::string(kind_name(kind))] = params;
    }
    return j;
  }

  static MagnitudeSchedule load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schedule " + path);
    return from_json(nlohmann::json::parse(in));
  }

 private:
  std::array<std::vector<ParamRange>, kNumKinds> params_;
};

}  // namespace augsearch::augment

#endif  // AUGSEARCH_AUGMENT_SCHEDULE_HPP
