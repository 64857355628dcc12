#ifndef AUGSEARCH_SEARCH_RUN_DIR_HPP
#define AUGSEARCH_SEARCH_RUN_DIR_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/search/config.hpp"
#include "augsearch/search/protocols.hpp"
#include "augsearch/search/report.hpp"

namespace augsearch::search {

inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kHistoryFile = "history.jsonl";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kCheckpointDir = "checkpoints";

struct RunOutput {
  nlohmann::json report;
  std::vector<TrialLog> logs;
};

/// Runs the configured protocol on already loaded data.
inline RunOutput run_protocol(const ExperimentConfig& cfg, const DataSplits& data, const Evaluator& evaluate,
                              const RunOptions& opt = {}) {
  cfg.validate();
  RunOutput out;
  nlohmann::json result;
  switch (cfg.protocol) {
    case Protocol::kBaseline: {
      auto r = run_baseline(data, cfg, evaluate, opt);
      result = to_json(r);
      out.logs = std::move(r.logs);
      break;
    }
    case Protocol::kAugSearch: {
      auto r = run_aug_search(data, cfg, evaluate, opt);
      result = to_json(r);
      out.logs = std::move(r.logs);
      break;
    }
    case Protocol::kAblation: {
      auto r = run_ablation(data, cfg, evaluate, opt);
      result = to_json(r);
      out.logs = std::move(r.logs);
      break;
    }
    case Protocol::kKfold: {
      const auto all = data.all();
      auto r = run_kfold(all, cfg, evaluate, opt);
      result = to_json(r);
      out.logs = std::move(r.logs);
      break;
    }
  }
  out.report = make_report(cfg, result);
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("error writing " + path.string());
}

/// config.json, history.jsonl, report.json, report.csv and checkpoints/<label>.json. Contents
/// depend only on the config and data, so a replay reproduces them byte for byte.
inline void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunOutput& out) {
  std::filesystem::create_directories(dir / kCheckpointDir);
  write_text_file(dir / kConfigFile, to_json(cfg).dump(2) + "\n");
  std::string history;
  for (const auto& log : out.logs) history += log.record.dump() + "\n";
  write_text_file(dir / kHistoryFile, history);
  for (const auto& log : out.logs) {
    if (!log.checkpoint.is_null()) write_text_file(dir / kCheckpointDir / (log.label + ".json"), log.checkpoint.dump() + "\n");
  }
  write_text_file(dir / kReportJson, out.report.dump(2) + "\n");
  write_text_file(dir / kReportCsv, render_csv(out.report));
}

}  // namespace augsearch::search

#endif  // AUGSEARCH_SEARCH_RUN_DIR_HPP
