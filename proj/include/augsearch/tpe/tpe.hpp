#ifndef AUGSEARCH_TPE_TPE_HPP
#define AUGSEARCH_TPE_TPE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augsearch/augment/schedule.hpp"
#include "augsearch/errors.hpp"
#include "augsearch/rng.hpp"

namespace augsearch::tpe {

/// Discrete (M, N) grid searched by the sampler.
struct SearchSpace {
  std::vector<int> m_values;
  std::vector<int> n_values;

  /// Odd magnitudes 1..29 and counts 1..10.
  static SearchSpace defaults() {
    SearchSpace s;
    for (int m = 1; m <= augment::kMaxLevel; m += 2) s.m_values.push_back(m);
    for (int n = 1; n <= 10; ++n) s.n_values.push_back(n);
    return s;
  }

  void validate() const {
    auto check = [](const std::vector<int>& v, int lo, int hi, const char* field) {
      if (v.empty()) throw ConfigError(field, "must not be empty");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < lo || v[i] > hi) {
          throw ConfigError(field, "values must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        if (i > 0 && v[i] <= v[i - 1]) throw ConfigError(field, "values must be strictly increasing");
      }
    };
    check(m_values, 0, augment::kMaxLevel, "space.m_values");
    check(n_values, 1, augment::kNumKinds, "space.n_values");
  }

  std::size_t size() const { return m_values.size() * n_values.size(); }

  bool contains(int m, int n) const {
    return std::binary_search(m_values.begin(), m_values.end(), m) && std::binary_search(n_values.begin(), n_values.end(), n);
  }

  bool operator==(const SearchSpace&) const = default;
};

enum class TrialStatus { kComplete, kDiverged };

inline std::string_view status_name(TrialStatus s) { return s == TrialStatus::kComplete ? "complete" : "diverged"; }

struct TrialRecord {
  int trial = 0;
  int m = 0;
  int n = 0;
  double objective = 0.0;  // percent Dice; 0 for diverged trials
  TrialStatus status = TrialStatus::kComplete;
  std::uint64_t seed = 0;

  bool operator==(const TrialRecord&) const = default;
};

inline nlohmann::json to_json(const TrialRecord& r) {
  return {{"trial", r.trial}, {"m", r.m}, {"n", r.n}, {"objective", r.objective},
          {"status", std::string(status_name(r.status))}, {"seed", r.seed}};
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial = j.at("trial").get<int>();
  r.m = j.at("m").get<int>();
  r.n = j.at("n").get<int>();
  r.objective = j.at("objective").get<double>();
  const auto status = j.at("status").get<std::string>();
  if (status == "complete") {
    r.status = TrialStatus::kComplete;
  } else if (status == "diverged") {
    r.status = TrialStatus::kDiverged;
  } else {
    throw std::invalid_argument("trial status must be complete or diverged, got '" + status + "'");
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

struct TpeConfig {
  int n_startup = 5;
  double gamma_fraction = 0.25;
  int n_candidates = 24;
  double bandwidth_m = 2.0;  // in grid steps
  double bandwidth_n = 1.0;
  double prior_weight = 1.0;

  void validate() const {
    if (n_startup < 0) throw ConfigError("tpe.n_startup", "must be >= 0");
    if (!(gamma_fraction > 0.0 && gamma_fraction < 1.0)) throw ConfigError("tpe.gamma_fraction", "must lie in (0, 1)");
    if (n_candidates < 1) throw ConfigError("tpe.n_candidates", "must be >= 1");
    if (!(bandwidth_m > 0.0)) throw ConfigError("tpe.bandwidth_m", "must be > 0");
    if (!(bandwidth_n > 0.0)) throw ConfigError("tpe.bandwidth_n", "must be > 0");
    if (!(prior_weight > 0.0)) throw ConfigError("tpe.prior_weight", "must be > 0");
  }

  bool operator==(const TpeConfig&) const = default;
};

/// Indices of the good (top ceil(gamma * n) by objective, earlier trial first on ties) and bad trials.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_trials(std::span<const TrialRecord> history,
                                                                                  double gamma_fraction) {
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history[a].objective > history[b].objective; });
  const auto n_good = std::min(
      history.size(), static_cast<std::size_t>(std::ceil(gamma_fraction * static_cast<double>(history.size()) - 1e-12)));
  std::vector<std::size_t> good(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_good));
  std::vector<std::size_t> bad(order.begin() + static_cast<std::ptrdiff_t>(n_good), order.end());
  std::sort(good.begin(), good.end());
  std::sort(bad.begin(), bad.end());
  return {good, bad};
}

inline std::size_t grid_index(std::span<const int> grid, int value) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), value);
  if (it == grid.end() || *it != value) throw std::invalid_argument("value " + std::to_string(value) + " is not on the grid");
  return static_cast<std::size_t>(it - grid.begin());
}

/// Mixture of one grid-normalised Gaussian kernel per observation (distance measured in grid
/// steps) and a uniform prior of weight prior_weight, normalised to a pmf over the grid.
inline std::vector<double> parzen_pmf(std::span<const int> observed, std::span<const int> grid, double bandwidth,
                                      double prior_weight) {
  if (grid.empty()) throw std::invalid_argument("parzen_pmf: empty grid");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("parzen_pmf: bandwidth must be > 0");
  const std::size_t g = grid.size();
  std::vector<double> pmf(g, 0.0);
  if (observed.empty()) {
    std::fill(pmf.begin(), pmf.end(), 1.0 / static_cast<double>(g));
    return pmf;
  }
  const double total_weight = static_cast<double>(observed.size()) + prior_weight;
  std::vector<double> kernel(g);
  for (int value : observed) {
    const double centre = static_cast<double>(grid_index(grid, value));
    double norm = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      const double z = (static_cast<double>(i) - centre) / bandwidth;
      kernel[i] = std::exp(-0.5 * z * z);
      norm += kernel[i];
    }
    for (std::size_t i = 0; i < g; ++i) pmf[i] += kernel[i] / norm / total_weight;
  }
  for (std::size_t i = 0; i < g; ++i) pmf[i] += prior_weight / static_cast<double>(g) / total_weight;
  return pmf;
}

inline std::size_t sample_index(const std::vector<double>& pmf, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc) return i;
  }
  return pmf.size() - 1;
}

/// Next (m, n) to evaluate.
inline std::pair<int, int> suggest(std::span<const TrialRecord> history, const SearchSpace& space, const TpeConfig& cfg,
                                   Rng& rng) {
  if (history.size() < static_cast<std::size_t>(cfg.n_startup)) {
    const int m = space.m_values[rng.below(space.m_values.size())];
    const int n = space.n_values[rng.below(space.n_values.size())];
    return {m, n};
  }
  const auto [good, bad] = split_trials(history, cfg.gamma_fraction);
  auto axis = [&](const std::vector<std::size_t>& idx, bool m_axis) {
    std::vector<int> v;
    for (auto i : idx) v.push_back(m_axis ? history[i].m : history[i].n);
    return v;
  };
  const auto l_m = parzen_pmf(axis(good, true), space.m_values, cfg.bandwidth_m, cfg.prior_weight);
  const auto l_n = parzen_pmf(axis(good, false), space.n_values, cfg.bandwidth_n, cfg.prior_weight);
  const auto g_m = parzen_pmf(axis(bad, true), space.m_values, cfg.bandwidth_m, cfg.prior_weight);
  const auto g_n = parzen_pmf(axis(bad, false), space.n_values, cfg.bandwidth_n, cfg.prior_weight);

  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_score = -1.0;
  for (int c = 0; c < cfg.n_candidates; ++c) {
    const auto im = sample_index(l_m, rng);
    const auto in = sample_index(l_n, rng);
    const double score = l_m[im] * l_n[in] / std::max(g_m[im] * g_n[in], 1e-12);
    if (score > best_score) {
      best_score = score;
      best = {im, in};
    }
  }
  return {space.m_values[best.first], space.n_values[best.second]};
}

}  // namespace augsearch::tpe

#endif  // AUGSEARCH_TPE_TPE_HPP
