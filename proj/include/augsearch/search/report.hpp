#ifndef AUGSEARCH_SEARCH_REPORT_HPP
#define AUGSEARCH_SEARCH_REPORT_HPP

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/search/config.hpp"
#include "augsearch/search/protocols.hpp"

namespace augsearch::search {

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::optional<double> opt_double(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline tpe::TrialStatus status_from_name(const std::string& s) {
  if (s == "complete") return tpe::TrialStatus::kComplete;
  if (s == "diverged") return tpe::TrialStatus::kDiverged;
  throw std::invalid_argument("unknown trial status '" + s + "'");
}

inline nlohmann::json summary_json(const metrics::Summary& s, const std::vector<double>& scores) {
  return {{"mean", s.mean}, {"std", opt_json(s.std)}, {"scores", scores}};
}

inline nlohmann::json outcome_json(const TrialOutcome& t) {
  return {{"label", t.label},
          {"seed", t.seed},
          {"status", std::string(tpe::status_name(t.status))},
          {"objective", opt_json(t.objective)}};
}

inline TrialOutcome outcome_from_json(const nlohmann::json& j) {
  return {j.at("label").get<std::string>(), j.at("seed").get<std::uint64_t>(), opt_double(j.at("objective")),
          status_from_name(j.at("status").get<std::string>())};
}

inline std::vector<std::string> kind_names(const augment::Policy& p) {
  std::vector<std::string> out;
  for (auto k : p.kinds()) out.emplace_back(augment::kind_name(k));
  return out;
}

inline augment::AugmentKind kind_from_json(const nlohmann::json& j) {
  const auto name = j.get<std::string>();
  const auto k = augment::kind_from_name(name);
  if (!k) throw std::invalid_argument("unknown augmentation '" + name + "'");
  return *k;
}

/// Shortest text that parses back to the same double; empty for null.
inline std::string csv_number(const nlohmann::json& v) {
  if (v.is_null()) return "";
  return v.dump();
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

// ---- baseline

inline nlohmann::json to_json(const BaselineReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) trials.push_back(detail::outcome_json(t));
  return {{"trials", trials},
          {"mean", r.summary.mean},
          {"std", detail::opt_json(r.summary.std)},
          {"scores", r.scores},
          {"best_so_far", r.best_so_far}};
}

inline BaselineReport baseline_report_from_json(const nlohmann::json& j) {
  BaselineReport r;
  for (const auto& t : j.at("trials")) r.trials.push_back(detail::outcome_from_json(t));
  r.scores = j.at("scores").get<std::vector<double>>();
  r.summary = {j.at("mean").get<double>(), detail::opt_double(j.at("std"))};
  r.best_so_far = j.at("best_so_far").get<std::vector<double>>();
  return r;
}

// ---- aug_search

inline nlohmann::json to_json(const AugSearchReport& r) {
  auto row = [&](const SearchTrial& t) {
    return nlohmann::json{{"M", t.record.m},
                          {"N", t.record.n},
                          {"Final Dice Score", t.record.objective},
                          {"trial", t.record.trial},
                          {"seed", t.record.seed},
                          {"status", std::string(tpe::status_name(t.record.status))},
                          {"augmentations", detail::kind_names(t.policy)},
                          {"policy", augment::to_json(t.policy)}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (auto i : r.ranking()) rows.push_back(row(r.trials[i]));
  nlohmann::json j = {{"rows", rows}, {"best_so_far", r.best_so_far}, {"batches", r.batches}};
  j["winner"] = row(r.trials.at(r.winner));
  if (r.baseline_scores) {
    j["baseline"] = detail::summary_json(metrics::mean_std(*r.baseline_scores), *r.baseline_scores);
  } else {
    j["baseline"] = nullptr;
  }
  return j;
}

inline AugSearchReport aug_search_report_from_json(const nlohmann::json& j) {
  AugSearchReport r;
  for (const auto& row : j.at("rows")) {
    SearchTrial t;
    t.record = {row.at("trial").get<int>(),
                row.at("M").get<int>(),
                row.at("N").get<int>(),
                row.at("Final Dice Score").get<double>(),
                detail::status_from_name(row.at("status").get<std::string>()),
                row.at("seed").get<std::uint64_t>()};
    t.policy = augment::policy_from_json(row.at("policy"));
    r.trials.push_back(std::move(t));
  }
  std::sort(r.trials.begin(), r.trials.end(),
            [](const SearchTrial& a, const SearchTrial& b) { return a.record.trial < b.record.trial; });
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    if (r.trials[i].record.trial != static_cast<int>(i)) throw std::invalid_argument("search report: trial ids must be 0..n-1");
  }
  r.batches = j.at("batches").get<std::vector<std::vector<int>>>();
  r.best_so_far = j.at("best_so_far").get<std::vector<double>>();
  r.winner = static_cast<std::size_t>(j.at("winner").at("trial").get<int>());
  if (!j.at("baseline").is_null()) r.baseline_scores = j.at("baseline").at("scores").get<std::vector<double>>();
  return r;
}

// ---- ablation

inline nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"Augmentation", std::string(augment::kind_name(row.kind))},
                    {"Mean DS", row.summary.mean},
                    {"% Diff. in DS", row.pct_diff},
                    {"Std DS", detail::opt_json(row.summary.std)},
                    {"p-val", detail::opt_json(row.p_value)},
                    {"scores", row.scores}});
  }
  return {{"fixed_m", r.fixed_m},
          {"baseline", detail::summary_json(r.baseline, r.baseline_scores)},
          {"rows", rows},
          {"best_so_far", r.best_so_far}};
}

inline AblationReport ablation_report_from_json(const nlohmann::json& j) {
  AblationReport r;
  r.fixed_m = j.at("fixed_m").get<int>();
  r.baseline_scores = j.at("baseline").at("scores").get<std::vector<double>>();
  r.baseline = {j.at("baseline").at("mean").get<double>(), detail::opt_double(j.at("baseline").at("std"))};
  for (const auto& row : j.at("rows")) {
    AblationRow a;
    a.kind = detail::kind_from_json(row.at("Augmentation"));
    a.scores = row.at("scores").get<std::vector<double>>();
    a.summary = {row.at("Mean DS").get<double>(), detail::opt_double(row.at("Std DS"))};
    a.pct_diff = row.at("% Diff. in DS").get<double>();
    a.p_value = detail::opt_double(row.at("p-val"));
    r.rows.push_back(std::move(a));
  }
  r.best_so_far = j.at("best_so_far").get<std::vector<double>>();
  return r;
}

// ---- kfold

inline nlohmann::json to_json(const KfoldReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"val_indices", f.val_indices},
                     {"defined", f.defined()},
                     {"BL", detail::outcome_json(f.bl)},
                     {"WA", f.wa ? detail::outcome_json(*f.wa) : nlohmann::json(nullptr)}});
  }
  nlohmann::json summary = {{"Model", r.model},
                            {"BL Mean", r.bl.mean},
                            {"BL Std", detail::opt_json(r.bl.std)},
                            {"WA Mean", r.wa ? nlohmann::json(r.wa->mean) : nlohmann::json(nullptr)},
                            {"WA Std", r.wa ? detail::opt_json(r.wa->std) : nlohmann::json(nullptr)},
                            {"p-val", detail::opt_json(r.p_value)}};
  return {{"model", r.model},
          {"policy", r.policy ? augment::to_json(*r.policy) : nlohmann::json(nullptr)},
          {"folds", folds},
          {"bl_scores", r.bl_scores},
          {"wa_scores", r.wa_scores},
          {"summary", summary},
          {"best_so_far", r.best_so_far}};
}

inline KfoldReport kfold_report_from_json(const nlohmann::json& j) {
  KfoldReport r;
  r.model = j.at("model").get<std::string>();
  if (!j.at("policy").is_null()) r.policy = augment::policy_from_json(j.at("policy"));
  for (const auto& f : j.at("folds")) {
    FoldRow row;
    row.fold = f.at("fold").get<int>();
    row.val_indices = f.at("val_indices").get<std::vector<std::size_t>>();
    row.bl = detail::outcome_from_json(f.at("BL"));
    if (!f.at("WA").is_null()) row.wa = detail::outcome_from_json(f.at("WA"));
    r.folds.push_back(std::move(row));
  }
  r.bl_scores = j.at("bl_scores").get<std::vector<double>>();
  r.wa_scores = j.at("wa_scores").get<std::vector<double>>();
  const auto& s = j.at("summary");
  r.bl = {s.at("BL Mean").get<double>(), detail::opt_double(s.at("BL Std"))};
  if (!s.at("WA Mean").is_null()) r.wa = metrics::Summary{s.at("WA Mean").get<double>(), detail::opt_double(s.at("WA Std"))};
  r.p_value = detail::opt_double(s.at("p-val"));
  r.best_so_far = j.at("best_so_far").get<std::vector<double>>();
  return r;
}

// ---- envelope and CSV

/// Canonical report document: protocol id, resolved config snapshot, protocol result.
inline nlohmann::json make_report(const ExperimentConfig& cfg, const nlohmann::json& result) {
  return {{"protocol", std::string(protocol_name(cfg.protocol))}, {"config", to_json(cfg)}, {"result", result}};
}

/// Table-shaped CSV of a report document. Numbers are written so that they parse back exactly.
inline std::string render_csv(const nlohmann::json& report) {
  const auto protocol = protocol_from_name(report.at("protocol").get<std::string>());
  if (!protocol) throw std::invalid_argument("report: unknown protocol");
  const auto& res = report.at("result");
  std::ostringstream out;
  auto line = [&](std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out << ',';
      out << c;
      first = false;
    }
    out << '\n';
  };
  using detail::csv_number;
  switch (*protocol) {
    case Protocol::kBaseline:
      line({"Trial", "Seed", "Final Dice Score"});
      for (std::size_t i = 0; i < res.at("trials").size(); ++i) {
        const auto& t = res["trials"][i];
        line({std::to_string(i), csv_number(t.at("seed")), csv_number(res.at("scores")[i])});
      }
      break;
    case Protocol::kAugSearch:
      line({"M", "N", "Final Dice Score"});
      for (const auto& r : res.at("rows")) {
        line({csv_number(r.at("M")), csv_number(r.at("N")), csv_number(r.at("Final Dice Score"))});
      }
      break;
    case Protocol::kAblation:
      line({"Augmentation", "Mean DS", "% Diff. in DS", "Std DS", "p-val"});
      for (const auto& r : res.at("rows")) {
        line({detail::csv_text(r.at("Augmentation").get<std::string>()), csv_number(r.at("Mean DS")),
              csv_number(r.at("% Diff. in DS")), csv_number(r.at("Std DS")), csv_number(r.at("p-val"))});
      }
      break;
    case Protocol::kKfold: {
      const auto& s = res.at("summary");
      line({"Model", "BL Mean", "BL Std", "WA Mean", "WA Std", "p-val"});
      line({detail::csv_text(s.at("Model").get<std::string>()), csv_number(s.at("BL Mean")), csv_number(s.at("BL Std")),
            csv_number(s.at("WA Mean")), csv_number(s.at("WA Std")), csv_number(s.at("p-val"))});
      break;
    }
  }
  return out.str();
}

}  // namespace augsearch::search

#endif  // AUGSEARCH_SEARCH_REPORT_HPP
