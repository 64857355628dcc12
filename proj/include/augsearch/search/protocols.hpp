#ifndef AUGSEARCH_SEARCH_PROTOCOLS_HPP
#define AUGSEARCH_SEARCH_PROTOCOLS_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/policy.hpp"
#include "augsearch/errors.hpp"
#include "augsearch/imgdata/dataset_dir.hpp"
#include "augsearch/imgdata/splits.hpp"
#include "augsearch/imgdata/synthetic.hpp"
#include "augsearch/metrics/stats.hpp"
#include "augsearch/rng.hpp"
#include "augsearch/search/config.hpp"
#include "augsearch/toyseg/train.hpp"
#include "augsearch/tpe/tpe.hpp"

namespace augsearch::search {

using toyseg::Sample;

inline constexpr std::uint64_t kSuggestStream = 101;
inline constexpr std::uint64_t kPolicyStream = 102;
inline constexpr std::uint64_t kFoldStream = 103;

struct DataSplits {
  std::vector<Sample> train;
  std::vector<Sample> val;

  /// Training then validation samples, for cross-validation over everything available.
  std::vector<Sample> all() const {
    std::vector<Sample> out(train);
    out.insert(out.end(), val.begin(), val.end());
    return out;
  }
};

/// Loads the configured data and resizes it to the training resolution. Never writes to the source.
inline DataSplits load_data(const ExperimentConfig& cfg) {
  DataSplits out;
  const int size = cfg.train.resize_to;
  if (cfg.data.source == DataSource::kSynthetic) {
    const auto pairs = imgdata::generate_synthetic_dataset(cfg.data.synthetic);
    const auto n_train = pairs.size() - static_cast<std::size_t>(cfg.data.val_count);
    out.train = toyseg::prepare_samples(std::span(pairs).first(n_train), size);
    out.val = toyseg::prepare_samples(std::span(pairs).subspan(n_train), size);
  } else {
    const auto split = imgdata::read_patch_directory(cfg.data.directory);
    out.train = toyseg::prepare_samples(split.train, size);
    out.val = toyseg::prepare_samples(split.val, size);
  }
  if (out.train.empty() || out.val.empty()) throw ProtocolError("data: training and validation sets must both be non-empty");
  return out;
}

struct EvalRequest {
  std::span<const Sample> train;
  std::span<const Sample> val;
  std::optional<augment::Policy> policy;
  std::uint64_t seed = 0;
};

/// Outcome of one training. An empty objective means the target class was absent from validation.
struct EvalResult {
  std::optional<double> objective;
  nlohmann::json history = nlohmann::json::array();
  nlohmann::json checkpoint;
};

/// Maps a training request to its objective. Throws DivergenceError for a diverged run.
/// Must be safe to call concurrently.
using Evaluator = std::function<EvalResult(const EvalRequest&)>;

inline Evaluator training_evaluator(toyseg::TrainConfig base) {
  return [base](const EvalRequest& r) {
    auto cfg = base;
    cfg.seed = r.seed;
    const auto res = toyseg::train(r.train, r.val, cfg, r.policy);
    EvalResult out;
    out.objective = res.final_target_dice();
    for (const auto& rec : res.history) out.history.push_back(toyseg::to_json(rec));
    out.checkpoint = toyseg::checkpoint_json(res.params);
    return out;
  };
}

struct TrialOutcome {
  std::string label;
  std::uint64_t seed = 0;
  std::optional<double> objective;
  tpe::TrialStatus status = tpe::TrialStatus::kComplete;

  /// Diverged runs score 0.
  double score() const { return status == tpe::TrialStatus::kDiverged ? 0.0 : objective.value_or(0.0); }
  bool defined() const { return status == tpe::TrialStatus::kDiverged || objective.has_value(); }
};

/// Per-trial artifacts destined for history.jsonl and checkpoints/.
struct TrialLog {
  std::string label;
  nlohmann::json record;
  nlohmann::json checkpoint;
};

struct RunOptions {
  int jobs = 1;
  std::function<void(const std::string&)> log;
};

namespace detail {

inline void log_line(const RunOptions& opt, const std::string& line) {
  static std::mutex mu;
  if (!opt.log) return;
  std::lock_guard<std::mutex> lock(mu);
  opt.log(line);
}

inline std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string padded(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

/// Runs fn(0..n-1) on up to `jobs` threads. Results must be written by index; the lowest-index
/// exception is rethrown, so behaviour matches sequential execution.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::pair<TrialOutcome, TrialLog> run_trial(const Evaluator& evaluate, const EvalRequest& req, std::string label,
                                                   const RunOptions& opt) {
  TrialOutcome out{label, req.seed, std::nullopt, tpe::TrialStatus::kComplete};
  TrialLog log{label, nlohmann::json::object(), nullptr};
  nlohmann::json history = nlohmann::json::array();
  try {
    auto res = evaluate(req);
    out.objective = res.objective;
    history = std::move(res.history);
    log.checkpoint = std::move(res.checkpoint);
  } catch (const DivergenceError& e) {
    out.status = tpe::TrialStatus::kDiverged;
    log_line(opt, label + ": diverged (" + e.what() + ")");
  }
  log.record = {{"label", label},
                {"seed", req.seed},
                {"status", std::string(tpe::status_name(out.status))},
                {"objective", out.objective ? nlohmann::json(*out.objective) : nlohmann::json(nullptr)}};
  if (req.policy) log.record["policy"] = augment::to_json(*req.policy);
  log.record["history"] = std::move(history);
  if (out.status == tpe::TrialStatus::kComplete) {
    log_line(opt, label + ": " + (out.objective ? "dice " + fmt(*out.objective) : std::string("undefined")));
  }
  return {std::move(out), std::move(log)};
}

inline void require_defined(const TrialOutcome& t) {
  if (!t.defined()) throw ProtocolError(t.label + ": target class absent from the validation set");
}

inline std::vector<double> running_max(const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs) out.push_back(out.empty() ? x : std::max(out.back(), x));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Baseline

struct BaselineReport {
  std::vector<TrialOutcome> trials;
  std::vector<double> scores;
  metrics::Summary summary;
  std::vector<double> best_so_far;
  std::vector<TrialLog> logs;
};

/// baseline_trials un-augmented trainings; trial i uses seed + i.
inline BaselineReport run_baseline(const DataSplits& data, const ExperimentConfig& cfg, const Evaluator& evaluate,
                                   const RunOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(cfg.baseline_trials);
  BaselineReport rep;
  rep.trials.resize(n);
  rep.logs.resize(n);
  detail::parallel_for(n, opt.jobs, [&](std::size_t i) {
    EvalRequest req{data.train, data.val, std::nullopt, cfg.seed + i};
    std::tie(rep.trials[i], rep.logs[i]) = detail::run_trial(evaluate, req, "baseline_" + detail::padded(i, 2), opt);
  });
  bool any_complete = false;
  for (const auto& t : rep.trials) {
    detail::require_defined(t);
    any_complete |= t.status == tpe::TrialStatus::kComplete;
    rep.scores.push_back(t.score());
  }
  if (!any_complete) throw ProtocolError("baseline: every trial diverged");
  rep.summary = metrics::mean_std(rep.scores);
  rep.best_so_far = detail::running_max(rep.scores);
  return rep;
}

// ---------------------------------------------------------------------------------------------
// TPE augmentation search

struct SearchTrial {
  tpe::TrialRecord record;
  augment::Policy policy;
};

struct AugSearchReport {
  std::vector<SearchTrial> trials;  // execution order
  std::vector<std::vector<int>> batches;
  std::vector<double> best_so_far;
  std::size_t winner = 0;
  std::optional<std::vector<double>> baseline_scores;
  std::vector<TrialLog> logs;

  /// Trial indices by objective, highest first; earlier trials win ties.
  std::vector<std::size_t> ranking() const {
    std::vector<std::size_t> order(trials.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return trials[a].record.objective > trials[b].record.objective;
    });
    return order;
  }
};

/// Suggest -> sample policy -> train -> observe, trial_budget times. Trial t uses seed + t for
/// training and derives its suggestion and policy draws from that seed. With search_batch > 1,
/// each round's suggestions share the same history and are evaluated concurrently.
inline AugSearchReport run_aug_search(const DataSplits& data, const ExperimentConfig& cfg, const Evaluator& evaluate,
                                      const RunOptions& opt = {}) {
  AugSearchReport rep;
  rep.baseline_scores = cfg.baseline_scores;
  std::vector<tpe::TrialRecord> history;
  const auto budget = static_cast<std::size_t>(cfg.trial_budget);
  while (rep.trials.size() < budget) {
    const std::size_t first = rep.trials.size();
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.search_batch), budget - first);
    std::vector<SearchTrial> round(count);
    std::vector<TrialOutcome> outcomes(count);
    std::vector<TrialLog> logs(count);
    rep.batches.emplace_back();
    for (std::size_t b = 0; b < count; ++b) {
      const std::uint64_t seed = cfg.seed + first + b;
      Rng suggest_rng(derive_seed(seed, kSuggestStream));
      const auto [m, n] = tpe::suggest(history, cfg.space, cfg.tpe, suggest_rng);
      Rng policy_rng(derive_seed(seed, kPolicyStream));
      round[b].policy = augment::sample_policy(n, m, policy_rng);
      round[b].record = {static_cast<int>(first + b), m, n, 0.0, tpe::TrialStatus::kComplete, seed};
      rep.batches.back().push_back(static_cast<int>(first + b));
    }
    detail::parallel_for(count, opt.jobs, [&](std::size_t b) {
      EvalRequest req{data.train, data.val, round[b].policy, round[b].record.seed};
      const auto& r = round[b].record;
      std::tie(outcomes[b], logs[b]) = detail::run_trial(
          evaluate, req,
          "search_" + detail::padded(first + b, 3) + "_M" + std::to_string(r.m) + "_N" + std::to_string(r.n), opt);
    });
    for (std::size_t b = 0; b < count; ++b) {
      detail::require_defined(outcomes[b]);
      round[b].record.objective = outcomes[b].score();
      round[b].record.status = outcomes[b].status;
      logs[b].record["m"] = round[b].record.m;
      logs[b].record["n"] = round[b].record.n;
      history.push_back(round[b].record);
      rep.trials.push_back(std::move(round[b]));
      rep.logs.push_back(std::move(logs[b]));
    }
  }
  std::vector<double> objectives;
  for (const auto& t : rep.trials) objectives.push_back(t.record.objective);
  rep.best_so_far = detail::running_max(objectives);
  rep.winner = rep.ranking().front();
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Per-augmentation ablation

struct AblationRow {
  augment::AugmentKind kind{};
  std::vector<double> scores;
  metrics::Summary summary;
  double pct_diff = 0.0;
  std::optional<double> p_value;
};

struct AblationReport {
  int fixed_m = 0;
  std::vector<double> baseline_scores;
  metrics::Summary baseline;
  std::vector<AblationRow> rows;  // ranked
  std::vector<double> best_so_far;  // running max of row means, in kind order
  std::vector<TrialLog> logs;
};

/// Mean descending, then std ascending (a missing std counts as 0); full ties keep kind order.
inline void rank_ablation_rows(std::vector<AblationRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    if (a.summary.mean != b.summary.mean) return a.summary.mean > b.summary.mean;
    return a.summary.std.value_or(0.0) < b.summary.std.value_or(0.0);
  });
}

/// Fills a row's statistics from its scores against the baseline vector.
inline AblationRow make_ablation_row(augment::AugmentKind kind, std::vector<double> scores,
                                     std::span<const double> baseline_scores) {
  AblationRow row;
  row.kind = kind;
  row.scores = std::move(scores);
  row.summary = metrics::mean_std(row.scores);
  row.pct_diff = metrics::pct_diff(row.summary.mean, metrics::mean(baseline_scores));
  if (row.scores.size() >= 2 && baseline_scores.size() >= 2) row.p_value = metrics::welch_t_test(row.scores, baseline_scores);
  return row;
}

/// Each of the 13 kinds alone at fixed_m, ablation_trials times (trial j uses seed + j, the
/// same seeds as the baseline). The baseline is cfg.baseline_scores when stored, otherwise it
/// is run here first.
inline AblationReport run_ablation(const DataSplits& data, const ExperimentConfig& cfg, const Evaluator& evaluate,
                                   const RunOptions& opt = {}) {
  if (!cfg.fixed_m) throw ConfigError("fixed_m", "required by the ablation protocol");
  AblationReport rep;
  rep.fixed_m = *cfg.fixed_m;
  if (cfg.baseline_scores) {
    rep.baseline_scores = *cfg.baseline_scores;
  } else {
    auto base = run_baseline(data, cfg, evaluate, opt);
    rep.baseline_scores = base.scores;
    rep.logs = std::move(base.logs);
  }
  rep.baseline = metrics::mean_std(rep.baseline_scores);
  if (rep.baseline.mean <= 0.0) throw ProtocolError("ablation: baseline mean must be positive");

  const auto per_kind = static_cast<std::size_t>(cfg.ablation_trials);
  const std::size_t total = per_kind * augment::kNumKinds;
  std::vector<TrialOutcome> outcomes(total);
  std::vector<TrialLog> logs(total);
  detail::parallel_for(total, opt.jobs, [&](std::size_t i) {
    const auto kind = augment::kAllKinds[i / per_kind];
    const std::size_t j = i % per_kind;
    EvalRequest req{data.train, data.val, augment::make_policy({kind}, rep.fixed_m), cfg.seed + j};
    std::tie(outcomes[i], logs[i]) = detail::run_trial(
        evaluate, req, "ablation_" + std::string(augment::kind_name(kind)) + "_" + detail::padded(j, 2), opt);
  });
  std::vector<double> means;
  for (std::size_t k = 0; k < augment::kNumKinds; ++k) {
    std::vector<double> scores;
    for (std::size_t j = 0; j < per_kind; ++j) {
      detail::require_defined(outcomes[k * per_kind + j]);
      scores.push_back(outcomes[k * per_kind + j].score());
    }
    rep.rows.push_back(make_ablation_row(augment::kAllKinds[k], std::move(scores), rep.baseline_scores));
    means.push_back(rep.rows.back().summary.mean);
  }
  rep.best_so_far = detail::running_max(means);
  rank_ablation_rows(rep.rows);
  for (auto& l : logs) rep.logs.push_back(std::move(l));
  return rep;
}

/// The n highest-ranked kinds of an ablation, resolved at its fixed magnitude.
inline augment::Policy select_top_n(const AblationReport& rep, int n) {
  if (n < 1 || n > augment::kNumKinds) throw std::invalid_argument("select_top_n: n must lie in [1, 13]");
  if (rep.rows.size() < static_cast<std::size_t>(n)) throw std::invalid_argument("select_top_n: report has too few rows");
  std::vector<augment::AugmentKind> kinds;
  for (int i = 0; i < n; ++i) kinds.push_back(rep.rows[i].kind);
  return augment::make_policy(kinds, rep.fixed_m);
}

// ---------------------------------------------------------------------------------------------
// k-fold cross-validation

struct FoldRow {
  int fold = 0;
  std::vector<std::size_t> val_indices;
  TrialOutcome bl;
  std::optional<TrialOutcome> wa;

  bool defined() const { return bl.defined() && (!wa || wa->defined()); }
};

struct KfoldReport {
  std::string model;
  std::optional<augment::Policy> policy;
  std::vector<FoldRow> folds;
  std::vector<double> bl_scores;  // defined folds only
  std::vector<double> wa_scores;
  metrics::Summary bl;
  std::optional<metrics::Summary> wa;
  std::optional<double> p_value;
  std::vector<double> best_so_far;
  std::vector<TrialLog> logs;
};

/// Fold f trains on the complement of fold f with seed + f, once without augmentation (BL)
/// and, when cfg.fixed_policy is set, once with it (WA). Folds whose validation part lacks the
/// target class are reported but excluded from the statistics.
inline KfoldReport run_kfold(std::span<const Sample> all, const ExperimentConfig& cfg, const Evaluator& evaluate,
                             const RunOptions& opt = {}) {
  const auto k = static_cast<std::size_t>(cfg.folds);
  const auto plan = imgdata::make_fold_plan(all.size(), k, derive_seed(cfg.seed, kFoldStream));
  std::vector<std::vector<Sample>> train_sets(k), val_sets(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (auto i : imgdata::fold_complement(plan, f)) train_sets[f].push_back(all[i]);
    for (auto i : plan[f]) val_sets[f].push_back(all[i]);
  }
  const bool with_policy = cfg.fixed_policy.has_value();
  const std::size_t arms = with_policy ? 2 : 1;
  std::vector<TrialOutcome> outcomes(k * arms);
  std::vector<TrialLog> logs(k * arms);
  detail::parallel_for(k * arms, opt.jobs, [&](std::size_t i) {
    const std::size_t f = i / arms;
    const bool wa = i % arms == 1;
    EvalRequest req{train_sets[f], val_sets[f], wa ? cfg.fixed_policy : std::nullopt, cfg.seed + f};
    std::tie(outcomes[i], logs[i]) =
        detail::run_trial(evaluate, req, std::string(wa ? "kfold_wa_" : "kfold_bl_") + detail::padded(f, 2), opt);
  });

  KfoldReport rep;
  rep.model = cfg.model_name;
  rep.policy = cfg.fixed_policy;
  std::vector<double> trace;
  for (std::size_t f = 0; f < k; ++f) {
    FoldRow row;
    row.fold = static_cast<int>(f);
    row.val_indices = plan[f];
    row.bl = outcomes[f * arms];
    if (with_policy) row.wa = outcomes[f * arms + 1];
    if (row.defined()) {
      rep.bl_scores.push_back(row.bl.score());
      if (row.wa) rep.wa_scores.push_back(row.wa->score());
      trace.push_back(row.wa ? row.wa->score() : row.bl.score());
    } else {
      detail::log_line(opt, "warning: fold " + std::to_string(f) + " has no target pixels in validation; excluded");
    }
    rep.folds.push_back(std::move(row));
  }
  if (rep.bl_scores.empty()) throw ProtocolError("kfold: no fold has target pixels in its validation part");
  rep.bl = metrics::mean_std(rep.bl_scores);
  if (with_policy) {
    rep.wa = metrics::mean_std(rep.wa_scores);
    if (rep.bl_scores.size() >= 2) rep.p_value = metrics::welch_t_test(rep.wa_scores, rep.bl_scores);
  }
  rep.best_so_far = detail::running_max(trace);
  rep.logs = std::move(logs);
  return rep;
}

}  // namespace augsearch::search

#endif  // AUGSEARCH_SEARCH_PROTOCOLS_HPP
