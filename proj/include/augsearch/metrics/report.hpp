#ifndef AUGSEARCH_METRICS_REPORT_HPP
#define AUGSEARCH_METRICS_REPORT_HPP

#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "augsearch/metrics/confusion.hpp"

namespace augsearch::metrics {

struct ClassScores {
  double dice = 0.0;
  double iou = 0.0;
  bool operator==(const ClassScores&) const = default;
};

struct MetricReport {
  std::map<int, ClassScores> per_class;  // defined classes only
  double accuracy = 0.0;
  double mean_dice = 0.0;
  double mean_iou = 0.0;

  bool operator==(const MetricReport&) const = default;
};

/// Per-class scores for every defined class other than the ignore class; means over those.
inline MetricReport make_report(const ConfusionMatrix& conf) {
  MetricReport r;
  r.accuracy = accuracy(conf);
  for (int c = 0; c < conf.num_classes(); ++c) {
    if (conf.ignore_class() && *conf.ignore_class() == c) continue;
    const auto d = dice(conf, c);
    if (!d) continue;
    r.per_class[c] = {*d, *iou(conf, c)};
  }
  if (!r.per_class.empty()) {
    for (const auto& [_, s] : r.per_class) {
      r.mean_dice += s.dice;
      r.mean_iou += s.iou;
    }
    r.mean_dice /= static_cast<double>(r.per_class.size());
    r.mean_iou /= static_cast<double>(r.per_class.size());
  }
  return r;
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, s] : r.per_class) per[std::to_string(c)] = {{"dice", s.dice}, {"iou", s.iou}};
  return {{"per_class", per}, {"accuracy", r.accuracy}, {"mean_dice", r.mean_dice}, {"mean_iou", r.mean_iou}};
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  for (const auto& [key, v] : j.at("per_class").items()) {
    r.per_class[std::stoi(key)] = {v.at("dice").get<double>(), v.at("iou").get<double>()};
  }
  r.accuracy = j.at("accuracy").get<double>();
  r.mean_dice = j.at("mean_dice").get<double>();
  r.mean_iou = j.at("mean_iou").get<double>();
  return r;
}

inline std::string csv_header() { return "model,Dice,IoU,Acc"; }

inline std::string to_csv_row(const std::string& model, const MetricReport& r) {
  std::ostringstream os;
  os << model << ',' << nlohmann::json(r.mean_dice).dump() << ',' << nlohmann::json(r.mean_iou).dump() << ','
     << nlohmann::json(r.accuracy).dump();
  return os.str();
}

}  // namespace augsearch::metrics

#endif  // AUGSEARCH_METRICS_REPORT_HPP
