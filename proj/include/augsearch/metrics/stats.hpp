#ifndef AUGSEARCH_METRICS_STATS_HPP
#define AUGSEARCH_METRICS_STATS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace augsearch::metrics {

inline double pct_diff(double value, double baseline) {
  if (!(baseline > 0.0)) throw std::invalid_argument("pct_diff: baseline must be positive");
  return 100.0 * (value - baseline) / baseline;
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: no values");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Sample (n - 1) variance.
inline double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample_variance: at least two values required");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

inline double sample_std(std::span<const double> values) { return std::sqrt(sample_variance(values)); }

struct Summary {
  double mean = 0.0;
  std::optional<double> std;  // absent for a single value
};

inline Summary mean_std(std::span<const double> values) {
  Summary s{mean(values), std::nullopt};
  if (values.size() >= 2) s.std = sample_std(values);
  return s;
}

/// Two-sided Welch t-test from summary statistics.
inline double welch_t_test(double mean_x, double var_x, std::size_t n_x, double mean_y, double var_y, std::size_t n_y) {
  if (n_x < 2 || n_y < 2) throw std::invalid_argument("welch_t_test: each sample needs at least two values");
  const double ax = var_x / static_cast<double>(n_x), ay = var_y / static_cast<double>(n_y);
  const double se2 = ax + ay;
  if (!(se2 > 0.0)) return mean_x == mean_y ? 1.0 : 0.0;
  const double t = (mean_x - mean_y) / std::sqrt(se2);
  const double df = se2 * se2 / (ax * ax / static_cast<double>(n_x - 1) + ay * ay / static_cast<double>(n_y - 1));
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return std::min(1.0, p);
}

inline double welch_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("welch_t_test: each sample needs at least two values");
  return welch_t_test(mean(xs), sample_variance(xs), xs.size(), mean(ys), sample_variance(ys), ys.size());
}

}  // namespace augsearch::metrics

#endif  // AUGSEARCH_METRICS_STATS_HPP
