#ifndef AUGSEARCH_AUGMENT_POLICY_HPP
#define AUGSEARCH_AUGMENT_POLICY_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/instance.hpp"
#include "augsearch/augment/kernels.hpp"
#include "augsearch/augment/schedule.hpp"
#include "augsearch/rng.hpp"

namespace augsearch::augment {

/// N distinct augmentation kinds, each resolved at the shared magnitude level.
/// Instances are kept in AugmentKind order, which is also the application order.
struct Policy {
  int magnitude = 0;
  std::vector<AugmentInstance> instances;

  int count() const { return static_cast<int>(instances.size()); }

  std::vector<AugmentKind> kinds() const {
    std::vector<AugmentKind> out;
    for (const auto& i : instances) out.push_back(i.kind);
    return out;
  }

  bool operator==(const Policy&) const = default;
};

/// Policy over an explicit set of kinds (sorted, duplicates rejected).
inline Policy make_policy(std::vector<AugmentKind> kinds, int magnitude,
                          const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  if (magnitude < 0 || magnitude > kMaxLevel) throw std::out_of_range("policy magnitude must lie in [0, 29]");
  std::sort(kinds.begin(), kinds.end());
  if (std::adjacent_find(kinds.begin(), kinds.end()) != kinds.end()) {
    throw std::invalid_argument("policy kinds must be distinct");
  }
  Policy p{magnitude, {}};
  for (auto k : kinds) p.instances.push_back(resolve_instance(k, magnitude, schedule));
  return p;
}

/// Draws N of the 13 kinds uniformly without replacement, all resolved at level M.
inline Policy sample_policy(int n, int magnitude, Rng& rng,
                            const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  if (n < 1 || n > kNumKinds) throw std::out_of_range("sample_policy: N must lie in [1, 13], got " + std::to_string(n));
  std::array<AugmentKind, kNumKinds> pool = kAllKinds;
  // Partial Fisher-Yates: the first n slots become a uniform n-subset.
  for (int i = 0; i < n; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(kNumKinds - i)));
    std::swap(pool[i], pool[j]);
  }
  return make_policy(std::vector<AugmentKind>(pool.begin(), pool.begin() + n), magnitude, schedule);
}

/// Applies every instance, in kind order, each with probability 1.
inline AugmentedPair apply_policy(const Policy& policy, const RgbImage& image, const ClassMask& mask, Rng& rng) {
  AugmentedPair current{image, mask};
  for (const auto& inst : policy.instances) current = apply_augment(inst, current.image, current.mask, rng);
  return current;
}

/// Per-image generator for parallel application: independent of scheduling order.
inline Rng image_rng(std::uint64_t trial_seed, std::uint64_t image_index) {
  return Rng(derive_seed(trial_seed, image_index));
}

/// List of instance dumps, one object per augmentation (type, parameters, p = 1.0).
inline nlohmann::json to_json(const Policy& policy) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& inst : policy.instances) j.push_back(to_json(inst));
  return j;
}

/// Parses a policy dump. The magnitude is recovered as the unique level at which every
/// listed instance matches the schedule; dumps that match no level are rejected.
inline Policy policy_from_json(const nlohmann::json& j,
                               const MagnitudeSchedule& schedule = MagnitudeSchedule::defaults()) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("policy dump must be a non-empty array");
  std::vector<AugmentInstance> instances;
  for (const auto& item : j) instances.push_back(instance_from_json(item, schedule));
  std::vector<AugmentKind> kinds;
  for (const auto& i : instances) kinds.push_back(i.kind);
  for (int level = 0; level <= kMaxLevel; ++level) {
    bool all = true;
    for (const auto& inst : instances) {
      const auto ref = resolve_instance(inst.kind, level, schedule);
      for (std::size_t k = 0; k < ref.params.size() && all; ++k) {
        all = std::abs(ref.params[k].value - inst.params[k].value) <= 1e-9 * std::max(1.0, std::abs(ref.params[k].value));
      }
      if (!all) break;
    }
    if (all) return make_policy(kinds, level, schedule);
  }
  throw std::invalid_argument("policy dump does not correspond to any magnitude level");
}

}  // namespace augsearch::augment

#endif  // AUGSEARCH_AUGMENT_POLICY_HPP
