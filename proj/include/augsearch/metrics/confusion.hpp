#ifndef AUGSEARCH_METRICS_CONFUSION_HPP
#define AUGSEARCH_METRICS_CONFUSION_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/image.hpp"

namespace augsearch::metrics {

/// Pixel confusion counts, row = ground truth, column = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes, std::optional<int> ignore_class = 0)
      : num_classes_(num_classes), ignore_class_(ignore_class) {
    if (num_classes < 1 || num_classes > 256) throw std::invalid_argument("ConfusionMatrix: num_classes must lie in [1, 256]");
    if (ignore_class && (*ignore_class < 0 || *ignore_class >= num_classes)) {
      throw std::invalid_argument("ConfusionMatrix: ignore_class out of range");
    }
    counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  }

  int num_classes() const { return num_classes_; }
  std::optional<int> ignore_class() const { return ignore_class_; }

  std::uint64_t count(int truth, int pred) const { return counts_.at(static_cast<std::size_t>(truth) * num_classes_ + pred); }

  void add(int truth, int pred, std::uint64_t n = 1) {
    if (truth < 0 || truth >= num_classes_ || pred < 0 || pred >= num_classes_) {
      throw std::out_of_range("ConfusionMatrix: label out of range");
    }
    if (ignore_class_ && truth == *ignore_class_) return;
    counts_[static_cast<std::size_t>(truth) * num_classes_ + pred] += n;
  }

  void accumulate(const ClassMask& pred, const ClassMask& truth) {
    if (pred.height != truth.height || pred.width != truth.width) {
      throw std::invalid_argument("accumulate: prediction is " + std::to_string(pred.height) + "x" +
                                  std::to_string(pred.width) + " but truth is " + std::to_string(truth.height) + "x" +
                                  std::to_string(truth.width));
    }
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
      const int t = truth.labels[i], p = pred.labels[i];
      if (t >= num_classes_ || p >= num_classes_) {
        throw std::out_of_range("accumulate: label " + std::to_string(std::max(t, p)) + " at pixel index " +
                                std::to_string(i) + " exceeds num_classes");
      }
      if (ignore_class_ && t == *ignore_class_) continue;
      ++counts_[static_cast<std::size_t>(t) * num_classes_ + p];
    }
  }

  void merge(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_ || other.ignore_class_ != ignore_class_) {
      throw std::invalid_argument("merge: incompatible confusion matrices");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : counts_) s += v;
    return s;
  }

  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (int c = 0; c < num_classes_; ++c) s += count(c, c);
    return s;
  }

  std::uint64_t true_positives(int c) const { return count(c, c); }

  std::uint64_t false_positives(int c) const {
    std::uint64_t s = 0;
    for (int t = 0; t < num_classes_; ++t) {
      if (t != c) s += count(t, c);
    }
    return s;
  }

  std::uint64_t false_negatives(int c) const {
    std::uint64_t s = 0;
    for (int p = 0; p < num_classes_; ++p) {
      if (p != c) s += count(c, p);
    }
    return s;
  }

  const std::vector<std::uint64_t>& raw() const { return counts_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_classes_;
  std::optional<int> ignore_class_;
  std::vector<std::uint64_t> counts_;
};

/// Percent Dice for class c; empty when the class is absent from prediction and truth.
inline std::optional<double> dice(const ConfusionMatrix& conf, int c) {
  const auto tp = conf.true_positives(c), fp = conf.false_positives(c), fn = conf.false_negatives(c);
  if (tp + fp + fn == 0) return std::nullopt;
  return 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline std::optional<double> iou(const ConfusionMatrix& conf, int c) {
  const auto tp = conf.true_positives(c), fp = conf.false_positives(c), fn = conf.false_negatives(c);
  if (tp + fp + fn == 0) return std::nullopt;
  return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
}

inline double accuracy(const ConfusionMatrix& conf) {
  const auto total = conf.total();
  if (total == 0) throw std::domain_error("accuracy: no accumulated pixels");
  return 100.0 * static_cast<double>(conf.trace()) / static_cast<double>(total);
}

inline double iou_from_dice(double dice_pct) { return 100.0 * dice_pct / (200.0 - dice_pct); }

}  // namespace augsearch::metrics

#endif  // AUGSEARCH_METRICS_CONFUSION_HPP
