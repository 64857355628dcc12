#ifndef AUGSEARCH_IMGDATA_SPLITS_HPP
#define AUGSEARCH_IMGDATA_SPLITS_HPP

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/imgdata/patching.hpp"
#include "augsearch/rng.hpp"

namespace augsearch::imgdata {

enum class Subset { kTrain, kVal, kTest };

inline const char* to_string(Subset s) {
  switch (s) {
    case Subset::kTrain: return "train";
    case Subset::kVal: return "val";
    case Subset::kTest: return "test";
  }
  return "?";
}

/// Lab-code allocation of patches to subsets. The three sets must be disjoint.
struct SplitSpec {
  std::set<std::string> train_labs;
  std::set<std::string> val_labs;
  std::set<std::string> test_labs;

  void validate() const {
    for (const auto& lab : train_labs) {
      if (val_labs.count(lab) || test_labs.count(lab)) throw std::invalid_argument("SplitSpec: lab " + lab + " assigned twice");
    }
    for (const auto& lab : val_labs) {
      if (test_labs.count(lab)) throw std::invalid_argument("SplitSpec: lab " + lab + " assigned twice");
    }
  }

  /// Training labs are every lab outside validation and test; E2 is held out for testing.
  static SplitSpec lab_default() {
    return SplitSpec{{"E9", "GI", "HN", "D8", "BH", "C8", "A7", "A8", "AC", "AN", "AO", "AQ", "AR", "A1", "A2"},
                     {"OL", "LL", "EW", "GM", "S3"},
                     {"E2"}};
  }
};

struct SplitResult {
  std::vector<PatchPair> train;
  std::vector<PatchPair> val;
  std::vector<PatchPair> test;
};

inline Subset subset_of(const SplitSpec& spec, const std::string& lab) {
  if (spec.train_labs.count(lab)) return Subset::kTrain;
  if (spec.val_labs.count(lab)) return Subset::kVal;
  if (spec.test_labs.count(lab)) return Subset::kTest;
  throw std::out_of_range(lab);
}

/// Partitions patches by lab code. Rejects (listing all of them) lab codes no set claims.
inline SplitResult split_by_lab(std::vector<PatchPair> patches, const SplitSpec& spec) {
  spec.validate();
  std::set<std::string> unassigned;
  for (const auto& p : patches) {
    if (!spec.train_labs.count(p.lab_code) && !spec.val_labs.count(p.lab_code) && !spec.test_labs.count(p.lab_code)) {
      unassigned.insert(p.lab_code);
    }
  }
  if (!unassigned.empty()) {
    std::string list;
    for (const auto& lab : unassigned) list += (list.empty() ? "" : ", ") + lab;
    throw std::invalid_argument("split_by_lab: unassigned lab codes: " + list);
  }
  SplitResult out;
  for (auto& p : patches) {
    switch (subset_of(spec, p.lab_code)) {
      case Subset::kTrain: out.train.push_back(std::move(p)); break;
      case Subset::kVal: out.val.push_back(std::move(p)); break;
      case Subset::kTest: out.test.push_back(std::move(p)); break;
    }
  }
  return out;
}

/// Fraction of pixels per class over all masks; entries sum to 1.
inline std::vector<double> pixel_class_distribution(std::span<const ClassMask> masks, int num_classes) {
  if (masks.empty()) throw std::invalid_argument("pixel_class_distribution: no masks");
  if (num_classes < 1) throw std::invalid_argument("pixel_class_distribution: num_classes must be positive");
  std::vector<std::uint64_t> counts(num_classes, 0);
  std::uint64_t total = 0;
  for (const auto& m : masks) {
    for (auto label : m.labels) {
      if (label >= num_classes) {
        throw std::invalid_argument("pixel_class_distribution: label " + std::to_string(label) + " >= " +
                                    std::to_string(num_classes));
      }
      ++counts[label];
    }
    total += m.labels.size();
  }
  if (total == 0) throw std::invalid_argument("pixel_class_distribution: masks contain no pixels");
  std::vector<double> out(num_classes);
  for (int c = 0; c < num_classes; ++c) out[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  return out;
}

/// k disjoint index sets covering 0..n-1. Sizes differ by at most one; the
/// first n % k folds carry the extra item.
using FoldPlan = std::vector<std::vector<std::size_t>>;

inline FoldPlan make_fold_plan(std::size_t n_items, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_fold_plan: k must be at least 2");
  if (k > n_items) {
    throw std::invalid_argument("make_fold_plan: k=" + std::to_string(k) + " exceeds n_items=" + std::to_string(n_items));
  }
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  FoldPlan folds(k);
  const std::size_t base = n_items / k;
  const std::size_t extra = n_items % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

/// Complement of fold `held_out` within 0..n-1, ascending.
inline std::vector<std::size_t> fold_complement(const FoldPlan& plan, std::size_t held_out) {
  std::size_t n = 0;
  for (const auto& f : plan) n += f.size();
  std::vector<bool> excluded(n, false);
  for (auto i : plan.at(held_out)) excluded[i] = true;
  std::vector<std::size_t> out;
  out.reserve(n - plan[held_out].size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!excluded[i]) out.push_back(i);
  }
  return out;
}

}  // namespace augsearch::imgdata

#endif  // AUGSEARCH_IMGDATA_SPLITS_HPP
