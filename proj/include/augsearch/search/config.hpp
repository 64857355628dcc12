#ifndef AUGSEARCH_SEARCH_CONFIG_HPP
#define AUGSEARCH_SEARCH_CONFIG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/policy.hpp"
#include "augsearch/errors.hpp"
#include "augsearch/imgdata/synthetic.hpp"
#include "augsearch/toyseg/train.hpp"
#include "augsearch/tpe/tpe.hpp"

namespace augsearch::search {

enum class Protocol { kBaseline, kAugSearch, kAblation, kKfold };

inline std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kBaseline: return "baseline";
    case Protocol::kAugSearch: return "aug_search";
    case Protocol::kAblation: return "ablation";
    case Protocol::kKfold: return "kfold";
  }
  return "?";
}

inline std::optional<Protocol> protocol_from_name(std::string_view name) {
  for (auto p : {Protocol::kBaseline, Protocol::kAugSearch, Protocol::kAblation, Protocol::kKfold}) {
    if (protocol_name(p) == name) return p;
  }
  return std::nullopt;
}

enum class DataSource { kSynthetic, kDirectory };

/// Where images come from. Synthetic data is split by position: the last val_count images validate.
struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  imgdata::SyntheticConfig synthetic;
  int val_count = 20;
  std::string directory;  // prepared patch directory (splits.json)

  bool operator==(const DataConfig& o) const {
    const auto& a = synthetic;
    const auto& b = o.synthetic;
    return source == o.source && val_count == o.val_count && directory == o.directory && a.num_images == b.num_images &&
           a.image_size == b.image_size && a.num_classes == b.num_classes && a.blobs_min == b.blobs_min &&
           a.blobs_max == b.blobs_max && a.noise_std == b.noise_std && a.seed == b.seed && a.lab_code == b.lab_code;
  }
};

struct ExperimentConfig {
  Protocol protocol = Protocol::kAugSearch;
  std::uint64_t seed = 0;
  DataConfig data;
  toyseg::TrainConfig train;
  tpe::TpeConfig tpe;
  tpe::SearchSpace space = tpe::SearchSpace::defaults();
  int trial_budget = 10;
  int search_batch = 1;  // suggestions evaluated concurrently per TPE round
  int baseline_trials = 10;
  int ablation_trials = 10;
  int folds = 10;
  std::optional<int> fixed_m;
  std::optional<augment::Policy> fixed_policy;
  std::optional<std::vector<double>> baseline_scores;
  std::string model_name = "ToySegmenter";

  void validate() const;
};

namespace detail {

/// Walks one JSON object, remembering which keys were read so leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be a JSON object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const auto* v = find(key);
    if (!v) return;
    out = convert<T>(*v, field(key));
  }

  template <typename T>
  void read_optional(const std::string& key, std::optional<T>& out) {
    const auto* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
    } else {
      out = convert<T>(*v, field(key));
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

  template <typename T>
  static T convert(const nlohmann::json& v, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) throw ConfigError(field, "must be >= 0");
        return static_cast<T>(v.get<std::int64_t>());
      } else {
        const auto x = v.get<std::int64_t>();
        if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) throw ConfigError(field, "out of range");
        return static_cast<T>(x);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(field, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], field + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::array<double, 3> read_triple(ObjectReader& r, const std::string& key, std::array<double, 3> fallback) {
  std::vector<double> v(fallback.begin(), fallback.end());
  r.read(key, v);
  if (v.size() != 3) throw ConfigError(r.field(key), "expected exactly 3 values");
  return {v[0], v[1], v[2]};
}

inline void read_data(const nlohmann::json& j, DataConfig& d) {
  ObjectReader r(j, "data");
  std::string source = d.source == DataSource::kSynthetic ? "synthetic" : "directory";
  r.read("source", source);
  if (source == "synthetic") {
    d.source = DataSource::kSynthetic;
  } else if (source == "directory") {
    d.source = DataSource::kDirectory;
  } else {
    throw ConfigError("data.source", "must be 'synthetic' or 'directory'");
  }
  if (const auto* s = r.find("synthetic")) {
    ObjectReader sr(*s, "data.synthetic");
    auto& c = d.synthetic;
    sr.read("num_images", c.num_images);
    sr.read("image_size", c.image_size);
    sr.read("num_classes", c.num_classes);
    sr.read("blobs_min", c.blobs_min);
    sr.read("blobs_max", c.blobs_max);
    sr.read("noise_std", c.noise_std);
    sr.read("seed", c.seed);
    sr.read("lab_code", c.lab_code);
    sr.finish();
  }
  r.read("val_count", d.val_count);
  r.read("directory", d.directory);
  r.finish();
}

inline void read_train(const nlohmann::json& j, toyseg::TrainConfig& t) {
  ObjectReader r(j, "train");
  r.read("iterations", t.iterations);
  r.read("batch_size", t.batch_size);
  std::string schedule(toyseg::schedule_name(t.schedule.type));
  r.read("lr_schedule", schedule);
  const auto schedule_type = toyseg::schedule_from_name(schedule);
  if (!schedule_type) throw ConfigError("train.lr_schedule", "must be 'constant' or 'one_cycle'");
  t.schedule.type = *schedule_type;
  r.read("lr", t.schedule.lr);
  r.read("pct_start", t.schedule.pct_start);
  r.read("div", t.schedule.div);
  r.read("final_div", t.schedule.final_div);
  std::string loss(toyseg::loss_name(t.loss.type));
  r.read("loss", loss);
  const auto loss_type = toyseg::loss_from_name(loss);
  if (!loss_type) throw ConfigError("train.loss", "must be one of cross_entropy, focal, dice, tversky");
  t.loss.type = *loss_type;
  r.read("focal_gamma", t.loss.gamma);
  r.read("tversky_alpha", t.loss.alpha);
  r.read("tversky_beta", t.loss.beta);
  r.read("loss_epsilon", t.loss.epsilon);
  r.read("momentum", t.momentum);
  r.read("weight_decay", t.weight_decay);
  r.read("resize_to", t.resize_to);
  r.read_optional("ignore_class", t.ignore_class);
  r.read("num_classes", t.num_classes);
  r.read("target_class", t.target_class);
  r.read("eval_every", t.eval_every);
  t.norm.mean = read_triple(r, "norm_mean", t.norm.mean);
  t.norm.std = read_triple(r, "norm_std", t.norm.std);
  r.finish();
}

inline void read_tpe(const nlohmann::json& j, tpe::TpeConfig& c) {
  ObjectReader r(j, "tpe");
  r.read("n_startup", c.n_startup);
  r.read("gamma_fraction", c.gamma_fraction);
  r.read("n_candidates", c.n_candidates);
  r.read("bandwidth_m", c.bandwidth_m);
  r.read("bandwidth_n", c.bandwidth_n);
  r.read("prior_weight", c.prior_weight);
  r.finish();
}

inline void read_space(const nlohmann::json& j, tpe::SearchSpace& s) {
  ObjectReader r(j, "space");
  r.read("m_values", s.m_values);
  r.read("n_values", s.n_values);
  r.finish();
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  if (data.source == DataSource::kSynthetic) {
    try {
      data.synthetic.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("data.synthetic", e.what());
    }
    if (data.val_count < 1 || data.val_count >= data.synthetic.num_images) {
      throw ConfigError("data.val_count", "must lie in [1, data.synthetic.num_images)");
    }
    if (data.synthetic.num_classes != train.num_classes) {
      throw ConfigError("train.num_classes", "must equal data.synthetic.num_classes");
    }
  } else if (data.directory.empty()) {
    throw ConfigError("data.directory", "required when data.source is 'directory'");
  }
  train.validate();
  tpe.validate();
  space.validate();
  if (trial_budget < 1) throw ConfigError("trial_budget", "must be >= 1");
  if (search_batch < 1) throw ConfigError("search_batch", "must be >= 1");
  if (baseline_trials < 1) throw ConfigError("baseline_trials", "must be >= 1");
  if (ablation_trials < 1) throw ConfigError("ablation_trials", "must be >= 1");
  if (folds < 2) throw ConfigError("folds", "must be >= 2");
  if (fixed_m && (*fixed_m < 0 || *fixed_m > augment::kMaxLevel)) throw ConfigError("fixed_m", "must lie in [0, 29]");
  if (protocol == Protocol::kAblation && !fixed_m) throw ConfigError("fixed_m", "required by the ablation protocol");
  if (baseline_scores && baseline_scores->empty()) throw ConfigError("baseline_scores", "must not be empty");
  if (model_name.empty()) throw ConfigError("model_name", "must not be empty");
}

/// Full, explicit JSON form of a config. Every field is present.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& s = c.data.synthetic;
  const auto& t = c.train;
  nlohmann::json j;
  j["protocol"] = std::string(protocol_name(c.protocol));
  j["seed"] = c.seed;
  j["data"] = {{"source", c.data.source == DataSource::kSynthetic ? "synthetic" : "directory"},
               {"synthetic",
                {{"num_images", s.num_images},
                 {"image_size", s.image_size},
                 {"num_classes", s.num_classes},
                 {"blobs_min", s.blobs_min},
                 {"blobs_max", s.blobs_max},
                 {"noise_std", s.noise_std},
                 {"seed", s.seed},
                 {"lab_code", s.lab_code}}},
               {"val_count", c.data.val_count},
               {"directory", c.data.directory}};
  j["train"] = {{"iterations", t.iterations},
                {"batch_size", t.batch_size},
                {"lr_schedule", std::string(toyseg::schedule_name(t.schedule.type))},
                {"lr", t.schedule.lr},
                {"pct_start", t.schedule.pct_start},
                {"div", t.schedule.div},
                {"final_div", t.schedule.final_div},
                {"loss", std::string(toyseg::loss_name(t.loss.type))},
                {"focal_gamma", t.loss.gamma},
                {"tversky_alpha", t.loss.alpha},
                {"tversky_beta", t.loss.beta},
                {"loss_epsilon", t.loss.epsilon},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"resize_to", t.resize_to},
                {"ignore_class", t.ignore_class ? nlohmann::json(*t.ignore_class) : nlohmann::json(nullptr)},
                {"num_classes", t.num_classes},
                {"target_class", t.target_class},
                {"eval_every", t.eval_every},
                {"norm_mean", t.norm.mean},
                {"norm_std", t.norm.std}};
  j["tpe"] = {{"n_startup", c.tpe.n_startup},
              {"gamma_fraction", c.tpe.gamma_fraction},
              {"n_candidates", c.tpe.n_candidates},
              {"bandwidth_m", c.tpe.bandwidth_m},
              {"bandwidth_n", c.tpe.bandwidth_n},
              {"prior_weight", c.tpe.prior_weight}};
  j["space"] = {{"m_values", c.space.m_values}, {"n_values", c.space.n_values}};
  j["trial_budget"] = c.trial_budget;
  j["search_batch"] = c.search_batch;
  j["baseline_trials"] = c.baseline_trials;
  j["ablation_trials"] = c.ablation_trials;
  j["folds"] = c.folds;
  j["fixed_m"] = c.fixed_m ? nlohmann::json(*c.fixed_m) : nlohmann::json(nullptr);
  j["fixed_policy"] = c.fixed_policy ? augment::to_json(*c.fixed_policy) : nlohmann::json(nullptr);
  j["baseline_scores"] = c.baseline_scores ? nlohmann::json(*c.baseline_scores) : nlohmann::json(nullptr);
  j["model_name"] = c.model_name;
  return j;
}

/// Parses a (possibly partial) config, fills defaults and validates. Unknown keys and type
/// mismatches raise ConfigError naming the field.
inline ExperimentConfig validate_config(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::ObjectReader r(j, "");
  std::string protocol(protocol_name(c.protocol));
  r.read("protocol", protocol);
  const auto p = protocol_from_name(protocol);
  if (!p) throw ConfigError("protocol", "must be one of baseline, aug_search, ablation, kfold");
  c.protocol = *p;
  r.read("seed", c.seed);
  if (const auto* v = r.find("data")) detail::read_data(*v, c.data);
  if (const auto* v = r.find("train")) detail::read_train(*v, c.train);
  if (const auto* v = r.find("tpe")) detail::read_tpe(*v, c.tpe);
  if (const auto* v = r.find("space")) detail::read_space(*v, c.space);
  r.read("trial_budget", c.trial_budget);
  r.read("search_batch", c.search_batch);
  r.read("baseline_trials", c.baseline_trials);
  r.read("ablation_trials", c.ablation_trials);
  r.read("folds", c.folds);
  r.read_optional("fixed_m", c.fixed_m);
  if (const auto* v = r.find("fixed_policy"); v && !v->is_null()) {
    try {
      c.fixed_policy = augment::policy_from_json(*v);
    } catch (const std::exception& e) {
      throw ConfigError("fixed_policy", e.what());
    }
  }
  r.read_optional("baseline_scores", c.baseline_scores);
  r.read("model_name", c.model_name);
  r.finish();
  c.validate();
  return c;
}

}  // namespace augsearch::search

#endif  // AUGSEARCH_SEARCH_CONFIG_HPP
