#ifndef AUGSEARCH_TOYSEG_LOSS_HPP
#define AUGSEARCH_TOYSEG_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "augsearch/image.hpp"
#include "augsearch/toyseg/network.hpp"

namespace augsearch::toyseg {

enum class LossType { kCrossEntropy, kFocal, kDice, kTversky };

inline std::string_view loss_name(LossType t) {
  switch (t) {
    case LossType::kCrossEntropy: return "cross_entropy";
    case LossType::kFocal: return "focal";
    case LossType::kDice: return "dice";
    case LossType::kTversky: return "tversky";
  }
  return "?";
}

inline std::optional<LossType> loss_from_name(std::string_view name) {
  for (auto t : {LossType::kCrossEntropy, LossType::kFocal, LossType::kDice, LossType::kTversky}) {
    if (loss_name(t) == name) return t;
  }
  return std::nullopt;
}

struct LossSpec {
  LossType type = LossType::kCrossEntropy;
  double gamma = 2.0;   // focal
  double alpha = 0.3;   // tversky, false-positive weight
  double beta = 0.7;    // tversky, false-negative weight
  double epsilon = 1e-6;

  void validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("loss.gamma must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("loss.alpha must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("loss.beta must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("loss.epsilon must be > 0");
  }

  bool operator==(const LossSpec&) const = default;
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  std::vector<FeatureMap<T>> dlogits;
};

/// Batch loss and its gradient with respect to every logit.
///
/// Pixels whose truth equals ignore_class contribute nothing. CE and Focal average over the
/// remaining pixels. Dice and Tversky sum over the whole batch per channel and average over
/// channels that are not the ignore class and occur in the batch truth.
template <typename T>
LossResult<T> loss_and_dlogits(std::span<const FeatureMap<T>> logits, std::span<const ClassMask> truth,
                               const LossSpec& spec, std::optional<int> ignore_class) {
  if (logits.size() != truth.size() || logits.empty()) throw std::invalid_argument("loss: batch size mismatch or empty batch");
  const int nc = logits[0].channels;
  auto ignored = [&](int label) { return ignore_class && label == *ignore_class; };

  std::size_t valid = 0;
  for (std::size_t b = 0; b < truth.size(); ++b) {
    if (logits[b].height != truth[b].height || logits[b].width != truth[b].width || logits[b].channels != nc) {
      throw std::invalid_argument("loss: logits and mask shapes differ");
    }
    for (auto l : truth[b].labels) {
      if (l >= nc) throw std::out_of_range("loss: label " + std::to_string(l) + " exceeds num_classes");
      valid += !ignored(l);
    }
  }
  if (valid == 0) throw std::invalid_argument("loss: batch contains only ignored pixels");

  LossResult<T> out;
  std::vector<FeatureMap<T>> probs;
  for (const auto& z : logits) {
    probs.push_back(softmax(z));
    out.dlogits.emplace_back(z.height, z.width, nc);
  }
  std::vector<double> g(nc);

  // d(loss)/d(z_k) = p_k (g_k - sum_j p_j g_j) where g = d(loss)/d(p)
  auto softmax_backward = [&](const T* p, T* dz) {
    double dot = 0.0;
    for (int k = 0; k < nc; ++k) dot += static_cast<double>(p[k]) * g[k];
    for (int k = 0; k < nc; ++k) dz[k] = static_cast<T>(static_cast<double>(p[k]) * (g[k] - dot));
  };

  if (spec.type == LossType::kCrossEntropy || spec.type == LossType::kFocal) {
    const double gamma = spec.type == LossType::kFocal ? spec.gamma : 0.0;
    const double inv = 1.0 / static_cast<double>(valid);
    double total = 0.0;
    for (std::size_t b = 0; b < logits.size(); ++b) {
      for (std::size_t i = 0; i < truth[b].pixel_count(); ++i) {
        const int t = truth[b].labels[i];
        if (ignored(t)) continue;
        const T* z = logits[b].data.data() + i * nc;
        const T* p = probs[b].data.data() + i * nc;
        double mx = static_cast<double>(z[0]);
        for (int k = 1; k < nc; ++k) mx = std::max(mx, static_cast<double>(z[k]));
        double s = 0.0;
        for (int k = 0; k < nc; ++k) s += std::exp(static_cast<double>(z[k]) - mx);
        const double log_q = static_cast<double>(z[t]) - mx - std::log(s);
        const double q = std::exp(log_q);
        const double one_minus = std::max(0.0, 1.0 - q);
        const double modulator = gamma == 0.0 ? 1.0 : std::pow(one_minus, gamma);
        total += -modulator * log_q;
        // dL/dz_k = [gamma (1-q)^(gamma-1) q log q - (1-q)^gamma] (delta_kt - p_k)
        const double slope = (gamma == 0.0 || one_minus == 0.0) ? 0.0 : gamma * std::pow(one_minus, gamma - 1.0) * q * log_q;
        const double coeff = (slope - modulator) * inv;
        T* dz = out.dlogits[b].data.data() + i * nc;
        for (int k = 0; k < nc; ++k) {
          dz[k] = static_cast<T>(coeff * ((k == t ? 1.0 : 0.0) - static_cast<double>(p[k])));
        }
      }
    }
    out.loss = total * inv;
    return out;
  }

  // Overlap losses: per-channel soft sums over the valid pixels of the batch.
  std::vector<double> inter(nc, 0.0), psum(nc, 0.0), tsum(nc, 0.0);
  for (std::size_t b = 0; b < logits.size(); ++b) {
    for (std::size_t i = 0; i < truth[b].pixel_count(); ++i) {
      const int t = truth[b].labels[i];
      if (ignored(t)) continue;
      const T* p = probs[b].data.data() + i * nc;
      for (int k = 0; k < nc; ++k) psum[k] += static_cast<double>(p[k]);
      inter[t] += static_cast<double>(p[t]);
      tsum[t] += 1.0;
    }
  }
  std::vector<int> active;
  for (int k = 0; k < nc; ++k) {
    if (!ignored(k) && tsum[k] > 0.0) active.push_back(k);
  }
  if (active.empty()) throw std::invalid_argument("loss: no supervised class in batch");
  const double scale = -1.0 / static_cast<double>(active.size());
  const double eps = spec.epsilon;

  // For each active channel: score_c and the two partial derivatives d score / d p at t=1 and t=0.
  std::vector<double> d_pos(nc, 0.0), d_neg(nc, 0.0);
  double score_sum = 0.0;
  for (int k : active) {
    const double I = inter[k], P = psum[k], Tt = tsum[k];
    if (spec.type == LossType::kDice) {
      const double den = P + Tt + eps;
      score_sum += 2.0 * I / den;
      d_pos[k] = 2.0 / den - 2.0 * I / (den * den);
      d_neg[k] = -2.0 * I / (den * den);
    } else {
      const double a = spec.alpha, bb = spec.beta;
      // I + a (P - I) + b (T - I) + eps
      const double den = (1.0 - a - bb) * I + a * P + bb * Tt + eps;
      score_sum += I / den;
      d_pos[k] = 1.0 / den - I * (1.0 - bb) / (den * den);
      d_neg[k] = -I * a / (den * den);
    }
  }
  out.loss = 1.0 - score_sum / static_cast<double>(active.size());

  for (std::size_t b = 0; b < logits.size(); ++b) {
    for (std::size_t i = 0; i < truth[b].pixel_count(); ++i) {
      const int t = truth[b].labels[i];
      if (ignored(t)) continue;
      std::fill(g.begin(), g.end(), 0.0);
      for (int k : active) g[k] = scale * (k == t ? d_pos[k] : d_neg[k]);
      softmax_backward(probs[b].data.data() + i * nc, out.dlogits[b].data.data() + i * nc);
    }
  }
  return out;
}

}  // namespace augsearch::toyseg

#endif  // AUGSEARCH_TOYSEG_LOSS_HPP
