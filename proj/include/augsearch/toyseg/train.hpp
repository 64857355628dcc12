#ifndef AUGSEARCH_TOYSEG_TRAIN_HPP
#define AUGSEARCH_TOYSEG_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/policy.hpp"
#include "augsearch/errors.hpp"
#include "augsearch/imgdata/patching.hpp"
#include "augsearch/metrics/confusion.hpp"
#include "augsearch/metrics/report.hpp"
#include "augsearch/rng.hpp"
#include "augsearch/toyseg/loss.hpp"
#include "augsearch/toyseg/lr_schedule.hpp"
#include "augsearch/toyseg/network.hpp"
#include "augsearch/toyseg/params.hpp"

namespace augsearch::toyseg {

struct TrainConfig {
  int iterations = 200;
  int batch_size = 4;
  LrSchedule schedule{LrScheduleType::kOneCycle, 0.1};
  LossSpec loss;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int resize_to = 64;
  std::uint64_t seed = 0;
  std::optional<int> ignore_class = 0;
  int num_classes = 6;
  int target_class = 1;
  int eval_every = 0;  // 0: evaluate once, after the last step
  InputNorm norm;

  void validate() const {
    if (iterations < 1) throw ConfigError("train.iterations", "must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
    if (resize_to < 32) throw ConfigError("train.resize_to", "must be >= 32");
    if (num_classes < 2 || num_classes > 255) throw ConfigError("train.num_classes", "must lie in [2, 255]");
    if (ignore_class && (*ignore_class < 0 || *ignore_class >= num_classes)) {
      throw ConfigError("train.ignore_class", "must be a valid class id or null");
    }
    if (target_class < 0 || target_class >= num_classes) throw ConfigError("train.target_class", "must be a valid class id");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay", "must be >= 0");
    if (eval_every < 0) throw ConfigError("train.eval_every", "must be >= 0");
    try {
      schedule.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("train.lr", e.what());
    }
    try {
      loss.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("train.loss", e.what());
    }
    for (int ch = 0; ch < 3; ++ch) {
      if (!(norm.std[ch] > 0.0)) throw ConfigError("train.norm_std", "entries must be > 0");
    }
  }
};

/// An image/mask pair at training resolution.
struct Sample {
  RgbImage image;
  ClassMask mask;
};

inline Sample make_sample(const RgbImage& image, const ClassMask& mask, int size) {
  require_same_shape(image, mask, "make_sample");
  return {resize_bilinear(image, size, size), resize_nearest(mask, size, size)};
}

inline std::vector<Sample> prepare_samples(std::span<const imgdata::PatchPair> pairs, int size) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_sample(p.image, p.mask, size));
  return out;
}

struct EvalRecord {
  int step = 0;
  double train_loss = 0.0;  // mean loss over the steps since the previous evaluation
  metrics::MetricReport report;
  std::optional<double> target_dice;
};

inline nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json j = {{"step", r.step}, {"train_loss", r.train_loss}, {"metrics", metrics::to_json(r.report)}};
  j["target_dice"] = r.target_dice ? nlohmann::json(*r.target_dice) : nlohmann::json(nullptr);
  return j;
}

struct TrainResult {
  SegmenterParams<float> params;
  std::vector<EvalRecord> history;

  /// Objective of the final evaluation.
  std::optional<double> final_target_dice() const { return history.empty() ? std::nullopt : history.back().target_dice; }
};

struct TrainHooks {
  /// Sees every image fed to the network during evaluation, before normalisation.
  std::function<void(const RgbImage&)> on_eval_input;
  /// Sees every training image after augmentation.
  std::function<void(int step, const RgbImage&)> on_train_input;
};

template <typename T>
ClassMask predict(const SegmenterParams<T>& params, const RgbImage& image, const InputNorm& norm = {}) {
  return argmax(forward(params, to_input<T>(image, norm)));
}

template <typename T>
metrics::ConfusionMatrix evaluate(const SegmenterParams<T>& params, std::span<const Sample> val, const TrainConfig& cfg,
                                  const TrainHooks& hooks = {}) {
  metrics::ConfusionMatrix conf(cfg.num_classes, cfg.ignore_class);
  for (const auto& s : val) {
    if (hooks.on_eval_input) hooks.on_eval_input(s.image);
    conf.accumulate(predict(params, s.image, cfg.norm), s.mask);
  }
  return conf;
}

/// Tumour-class Dice (percent) of a confusion matrix; empty when the class never occurs in the truth.
inline std::optional<double> target_dice(const metrics::ConfusionMatrix& conf, int target_class) {
  std::uint64_t present = 0;
  for (int p = 0; p < conf.num_classes(); ++p) present += conf.count(target_class, p);
  if (present == 0) return std::nullopt;
  return metrics::dice(conf, target_class);
}

template <typename T>
std::optional<double> objective_dice(const SegmenterParams<T>& params, std::span<const Sample> val, const TrainConfig& cfg,
                                     const TrainHooks& hooks = {}) {
  return target_dice(evaluate(params, val, cfg, hooks), cfg.target_class);
}

/// One SGD step: v = momentum * v + (grad + wd * w); w -= lr * v.
template <typename T>
void sgd_step(SegmenterParams<T>& params, const SegmenterParams<T>& grad, std::vector<T>& velocity, double lr,
              double momentum, double weight_decay) {
  if (velocity.size() != params.data.size()) velocity.assign(params.data.size(), T(0));
  for (std::size_t i = 0; i < params.data.size(); ++i) {
    const T g = grad.data[i] + static_cast<T>(weight_decay) * params.data[i];
    velocity[i] = static_cast<T>(momentum) * velocity[i] + g;
    params.data[i] -= static_cast<T>(lr) * velocity[i];
  }
}

/// Loss and full parameter gradient for a batch.
template <typename T>
std::pair<double, SegmenterParams<T>> loss_and_grad(const SegmenterParams<T>& params, std::span<const RgbImage> images,
                                                    std::span<const ClassMask> masks, const LossSpec& loss,
                                                    std::optional<int> ignore_class, const InputNorm& norm = {}) {
  std::vector<Activations<T>> acts(images.size());
  std::vector<FeatureMap<T>> logits;
  for (std::size_t b = 0; b < images.size(); ++b) {
    forward(params, to_input<T>(images[b], norm), acts[b]);
    logits.push_back(acts[b].logits);
  }
  auto res = loss_and_dlogits<T>(logits, masks, loss, ignore_class);
  SegmenterParams<T> grad(params.num_classes);
  for (std::size_t b = 0; b < images.size(); ++b) backward(params, acts[b], res.dlogits[b], grad);
  return {res.loss, std::move(grad)};
}

/// Trains from a seed-determined initialisation. Batches are drawn from per-epoch shuffles of
/// the training set; with a policy, each drawn sample is augmented by its own generator
/// derived from (seed, global sample index). Validation data is never augmented.
inline TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, const TrainConfig& cfg,
                         const std::optional<augment::Policy>& policy = std::nullopt, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (val_set.empty()) throw std::invalid_argument("train: empty validation set");

  TrainResult result{init_params<float>(cfg.num_classes, derive_seed(cfg.seed, 0)), {}};
  auto& params = result.params;
  Rng sampler(derive_seed(cfg.seed, 1));
  const std::uint64_t aug_seed = derive_seed(cfg.seed, 2);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  sampler.shuffle(std::span<std::size_t>(order));
  std::size_t cursor = 0;

  std::vector<float> velocity;
  std::vector<RgbImage> images(cfg.batch_size);
  std::vector<ClassMask> masks(cfg.batch_size);
  double loss_acc = 0.0;
  int loss_steps = 0;

  for (int step = 0; step < cfg.iterations; ++step) {
    for (int slot = 0; slot < cfg.batch_size; ++slot) {
      if (cursor == order.size()) {
        sampler.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const Sample& s = train_set[order[cursor++]];
      if (policy) {
        Rng rng = augment::image_rng(aug_seed, static_cast<std::uint64_t>(step) * cfg.batch_size + slot);
        auto aug = augment::apply_policy(*policy, s.image, s.mask, rng);
        images[slot] = std::move(aug.image);
        masks[slot] = std::move(aug.mask);
      } else {
        images[slot] = s.image;
        masks[slot] = s.mask;
      }
      if (hooks.on_train_input) hooks.on_train_input(step, images[slot]);
    }

    double loss = 0.0;
    SegmenterParams<float> grad;
    try {
      std::tie(loss, grad) = loss_and_grad<float>(params, images, masks, cfg.loss, cfg.ignore_class, cfg.norm);
    } catch (const std::invalid_argument&) {
      continue;  // batch without supervised pixels: nothing to learn from
    }
    if (!std::isfinite(loss) || !grad.all_finite()) {
      throw DivergenceError("training diverged at step " + std::to_string(step));
    }
    sgd_step(params, grad, velocity, lr_at(cfg.schedule, step, cfg.iterations), cfg.momentum, cfg.weight_decay);
    if (!params.all_finite()) throw DivergenceError("parameters became non-finite at step " + std::to_string(step));
    loss_acc += loss;
    ++loss_steps;

    const bool last = step + 1 == cfg.iterations;
    if (last || (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0)) {
      const auto conf = evaluate(params, val_set, cfg, hooks);
      EvalRecord rec;
      rec.step = step + 1;
      rec.train_loss = loss_steps ? loss_acc / loss_steps : 0.0;
      rec.report = metrics::make_report(conf);
      rec.target_dice = target_dice(conf, cfg.target_class);
      result.history.push_back(std::move(rec));
      loss_acc = 0.0;
      loss_steps = 0;
    }
  }
  if (result.history.empty() || result.history.back().step != cfg.iterations) {
    const auto conf = evaluate(params, val_set, cfg, hooks);
    result.history.push_back({cfg.iterations, 0.0, metrics::make_report(conf), target_dice(conf, cfg.target_class)});
  }
  return result;
}

}  // namespace augsearch::toyseg

#endif  // AUGSEARCH_TOYSEG_TRAIN_HPP
