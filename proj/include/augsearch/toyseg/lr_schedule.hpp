#ifndef AUGSEARCH_TOYSEG_LR_SCHEDULE_HPP
#define AUGSEARCH_TOYSEG_LR_SCHEDULE_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace augsearch::toyseg {

enum class LrScheduleType { kConstant, kOneCycle };

inline std::string_view schedule_name(LrScheduleType t) { return t == LrScheduleType::kConstant ? "constant" : "one_cycle"; }

inline std::optional<LrScheduleType> schedule_from_name(std::string_view name) {
  if (name == "constant") return LrScheduleType::kConstant;
  if (name == "one_cycle") return LrScheduleType::kOneCycle;
  return std::nullopt;
}

/// constant(lr) or one_cycle(max_lr): linear warm-up from max_lr / div over the first
/// pct_start of the steps, then cosine annealing to max_lr / (div * final_div).
struct LrSchedule {
  LrScheduleType type = LrScheduleType::kOneCycle;
  double lr = 1e-3;
  double pct_start = 0.3;
  double div = 25.0;
  double final_div = 1e4;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
    if (!(pct_start > 0.0 && pct_start < 1.0)) throw std::invalid_argument("pct_start must lie in (0, 1)");
    if (!(div >= 1.0) || !(final_div >= 1.0)) throw std::invalid_argument("div and final_div must be >= 1");
  }

  bool operator==(const LrSchedule&) const = default;
};

inline double lr_at(const LrSchedule& s, long step, long total_steps) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + ")");
  }
  if (s.type == LrScheduleType::kConstant) return s.lr;
  if (total_steps == 1) return s.lr;
  const double initial = s.lr / s.div;
  const double final_lr = initial / s.final_div;
  const double peak = s.pct_start * static_cast<double>(total_steps);
  const double last = static_cast<double>(total_steps - 1);
  const double x = static_cast<double>(step);
  if (x <= peak && peak < last) return initial + (s.lr - initial) * x / peak;
  const double span = last - peak;
  const double frac = span > 0.0 ? (x - peak) / span : 1.0;
  return final_lr + (s.lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace augsearch::toyseg

#endif  // AUGSEARCH_TOYSEG_LR_SCHEDULE_HPP
