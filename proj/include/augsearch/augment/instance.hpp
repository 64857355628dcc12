#ifndef AUGSEARCH_AUGMENT_INSTANCE_HPP
#define AUGSEARCH_AUGMENT_INSTANCE_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/schedule.hpp"

namespace augsearch::augment {

struct ResolvedParam {
  std::string name;
  double value = 0.0;
  bool integer = false;
  bool operator==(const ResolvedParam&) const = default;
};

/// An augmentation kind with every parameter fixed at one magnitude level.
struct AugmentInstance {
  AugmentKind kind{};
  std::vector<ResolvedParam> params;

  bool geometric() const { return is_geometric(kind); }
  bool occluding() const { return is_occluding(kind); }

  double param(std::string_view name) const {
    for (const auto& p : params) {
      if (p.name == name) return p.value;
    }
    throw std::out_of_range(std::string(kind_name(kind)) + " has no parameter " + std::string(name));
  }

  bool operator==(const AugmentInstance&) const = default;
};

inline AugmentInstance resolve_instance(AugmentKind kind, int level,
                                        const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  AugmentInstance out{kind, {}};
  for (const auto& range : schedule.params(kind)) {
    out.params.push_back({range.name, schedule_value(range.lower, range.upper, level, range.integer), range.integer});
  }
  return out;
}

/// Builds an instance with explicit parameter values (e.g. an identity-strength
/// Sharpen). Names must match the schedule's parameter list.
inline AugmentInstance make_instance(AugmentKind kind, const std::vector<std::pair<std::string, double>>& values,
                                     const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  AugmentInstance out = resolve_instance(kind, 0, schedule);
  for (const auto& [name, value] : values) {
    bool found = false;
    for (auto& p : out.params) {
      if (p.name == name) {
        p.value = value;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument(std::string(kind_name(kind)) + " has no parameter " + name);
  }
  return out;
}

/// {"type": <kind>, <param>: <value>..., "p": 1.0}; integer parameters are emitted as JSON integers.
inline nlohmann::json to_json(const AugmentInstance& inst) {
  nlohmann::json j = nlohmann::json::object();
  j["type"] = std::string(kind_name(inst.kind));
  for (const auto& p : inst.params) {
    if (p.integer) {
      j[p.name] = static_cast<long long>(p.value);
    } else {
      j[p.name] = p.value;
    }
  }
  j["p"] = 1.0;
  return j;
}

inline AugmentInstance instance_from_json(const nlohmann::json& j,
                                          const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  const auto type = j.at("type").get<std::string>();
  const auto kind = kind_from_name(type);
  if (!kind) throw std::invalid_argument("unknown augmentation type '" + type + "'");
  AugmentInstance out = resolve_instance(*kind, 0, schedule);
  for (auto& p : out.params) {
    if (!j.contains(p.name)) throw std::invalid_argument(type + " lacks parameter " + p.name);
    p.value = j.at(p.name).get<double>();
  }
  for (const auto& [key, _] : j.items()) {
    if (key == "type" || key == "p") continue;
    bool known = false;
    for (const auto& p : out.params) known = known || p.name == key;
    if (!known) throw std::invalid_argument(type + " has unknown parameter " + key);
  }
  if (j.contains("p") && j.at("p").get<double>() != 1.0) throw std::invalid_argument(type + ": only p = 1.0 is supported");
  return out;
}

}  // namespace augsearch::augment

#endif  // AUGSEARCH_AUGMENT_INSTANCE_HPP
