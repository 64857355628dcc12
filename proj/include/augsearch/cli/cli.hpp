#ifndef AUGSEARCH_CLI_CLI_HPP
#define AUGSEARCH_CLI_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "augsearch/errors.hpp"
#include "augsearch/imgdata/dataset_dir.hpp"
#include "augsearch/imgdata/png_io.hpp"
#include "augsearch/imgdata/synthetic.hpp"
#include "augsearch/search/config.hpp"
#include "augsearch/search/protocols.hpp"
#include "augsearch/search/report.hpp"
#include "augsearch/search/run_dir.hpp"

namespace augsearch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Bad input from the caller: unreadable files, malformed JSON, inconsistent flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string format = "json";
  std::string input;
  std::string baseline_report;
  std::string search_report;
  std::string ablation_report;
  int top_n = 0;
  int fixed_m = -1;
  std::string slides;
  std::string class_map;
  std::string split_file;
  int patch_size = 800;
  int stride = 400;
};

namespace detail {

inline nlohmann::json read_json(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + what + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(what + " '" + path + "' is not valid JSON: " + e.what());
  }
}

inline nlohmann::json read_report(const std::string& path, search::Protocol expected) {
  auto j = read_json(path, "report");
  if (!j.is_object() || !j.contains("protocol") || !j.contains("result")) throw UsageError("'" + path + "' is not a report");
  if (j["protocol"] != std::string(search::protocol_name(expected))) {
    throw UsageError("'" + path + "' is a " + j["protocol"].dump() + " report, expected " +
                     std::string(search::protocol_name(expected)));
  }
  return j;
}

inline imgdata::SplitSpec read_split_file(const std::string& path) {
  const auto j = read_json(path, "split file");
  imgdata::SplitSpec s;
  try {
    s.train_labs = j.at("train").get<std::set<std::string>>();
    s.val_labs = j.at("val").get<std::set<std::string>>();
    s.test_labs = j.at("test").get<std::set<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("split file '" + path + "' must hold string arrays train, val and test: " + e.what());
  }
  return s;
}

/// Config file (or {}) with the subcommand's protocol and flag overrides applied, then validated.
inline search::ExperimentConfig resolve(const Options& o, const CLI::App& sub, search::Protocol protocol) {
  nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_json(o.config, "config");
  if (!j.is_object()) throw ConfigError("<root>", "must be a JSON object");
  j["protocol"] = std::string(search::protocol_name(protocol));
  if (sub.count("--seed")) j["seed"] = o.seed;
  if (!o.baseline_report.empty()) {
    j["baseline_scores"] = read_report(o.baseline_report, search::Protocol::kBaseline)["result"]["scores"];
  }
  if (!o.search_report.empty()) {
    const auto winner = read_report(o.search_report, search::Protocol::kAugSearch)["result"]["winner"];
    if (protocol == search::Protocol::kAblation) j["fixed_m"] = winner["M"];
    if (protocol == search::Protocol::kKfold) j["fixed_policy"] = winner["policy"];
  }
  if (o.fixed_m >= 0) j["fixed_m"] = o.fixed_m;
  if (!o.ablation_report.empty()) {
    if (o.top_n < 1) throw UsageError("--ablation needs --top-n");
    const auto rep = search::ablation_report_from_json(read_report(o.ablation_report, search::Protocol::kAblation)["result"]);
    try {
      j["fixed_policy"] = augment::to_json(search::select_top_n(rep, o.top_n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--top-n: ") + e.what());
    }
  }
  return search::validate_config(j);
}

inline int run_protocol_command(const Options& o, const CLI::App& sub, search::Protocol protocol, std::ostream& out,
                                std::ostream& err) {
  const auto cfg = resolve(o, sub, protocol);
  search::RunOptions opt{o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())),
                         [&](const std::string& line) { err << line << std::endl; }};
  err << "running " << search::protocol_name(protocol) << " (seed " << cfg.seed << ", " << opt.jobs << " jobs)" << std::endl;
  const auto data = search::load_data(cfg);
  const auto result = search::run_protocol(cfg, data, search::training_evaluator(cfg.train), opt);
  search::write_run_directory(o.out, cfg, result);

  const auto& res = result.report["result"];
  switch (protocol) {
    case search::Protocol::kBaseline:
      out << "baseline mean " << search::detail::fmt(res["mean"].get<double>()) << '\n';
      break;
    case search::Protocol::kAugSearch:
      out << "best M=" << res["winner"]["M"] << " N=" << res["winner"]["N"] << " dice "
          << search::detail::fmt(res["winner"]["Final Dice Score"].get<double>()) << '\n';
      break;
    case search::Protocol::kAblation:
      out << "best augmentation " << res["rows"][0]["Augmentation"].get<std::string>() << " mean "
          << search::detail::fmt(res["rows"][0]["Mean DS"].get<double>()) << '\n';
      break;
    case search::Protocol::kKfold:
      out << search::render_csv(result.report);
      break;
  }
  out << "wrote " << o.out << '\n';
  return kExitOk;
}

inline int synth_command(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto cfg = resolve(o, sub, search::Protocol::kBaseline);
  auto syn = cfg.data.synthetic;
  if (sub.count("--seed")) syn.seed = o.seed;
  const auto pairs = imgdata::generate_synthetic_dataset(syn);
  const auto n_train = pairs.size() - static_cast<std::size_t>(cfg.data.val_count);
  std::filesystem::create_directories(o.out);
  nlohmann::json splits = nlohmann::json::object();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    imgdata::save_pair(pairs[i], o.out);
    splits[pairs[i].stem()] = i < n_train ? "train" : "val";
  }
  imgdata::write_json_file(std::filesystem::path(o.out) / imgdata::kSplitManifest, splits);
  out << "wrote " << n_train << " train and " << pairs.size() - n_train << " val images to " << o.out << '\n';
  return kExitOk;
}

inline int prepare_command(const Options& o, std::ostream& out) {
  imgdata::PrepareOptions p;
  p.patch_size = o.patch_size;
  p.stride = o.stride;
  if (!o.class_map.empty()) p.class_map = imgdata::load_class_map(o.class_map);
  if (!o.split_file.empty()) p.split = read_split_file(o.split_file);
  if (std::filesystem::weakly_canonical(o.slides) == std::filesystem::weakly_canonical(o.out)) {
    throw UsageError("--out must differ from --slides");
  }
  const auto s = imgdata::prepare_patch_directory(o.slides, o.out, p);
  out << "patches: train " << s.train << ", val " << s.val << ", test " << s.test << '\n';
  return kExitOk;
}

inline int report_command(const Options& o, std::ostream& out) {
  const auto j = read_json(o.input, "report");
  if (!j.is_object() || !j.contains("protocol") || !j.contains("result")) throw UsageError("'" + o.input + "' is not a report");
  if (o.format == "csv") {
    out << search::render_csv(j);
  } else {
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

inline void print_error(std::ostream& err, const char* kind, const std::string& message, const std::string& field = {}) {
  nlohmann::json e = {{"error", kind}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  err << e.dump() << std::endl;
}

}  // namespace detail

/// Entry point: 0 on success, 2 for usage or config errors, 3 for runtime failures.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"RandAugment + TPE augmentation search for semantic segmentation"};
  app.name("augsearch");
  app.require_subcommand(1, 1);
  Options o;

  auto add_config = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Experiment config (JSON)");
    s->add_option("--seed", o.seed, "Override the master seed");
  };
  auto add_run = [&](CLI::App* s) {
    add_config(s);
    s->add_option("--out", o.out, "Run directory")->required();
    s->add_option("--jobs", o.jobs, "Worker threads (default: all cores; 1 = sequential)")->check(CLI::NonNegativeNumber);
  };

  auto* prepare = app.add_subcommand("prepare", "Patch and split a slide directory");
  prepare->add_option("--slides", o.slides, "Slide directory with manifest.json")->required()->check(CLI::ExistingDirectory);
  prepare->add_option("--out", o.out, "Patch directory to create")->required();
  prepare->add_option("--class-map", o.class_map, "Class map JSON")->check(CLI::ExistingFile);
  prepare->add_option("--split-file", o.split_file, "Lab split JSON {train, val, test}")->check(CLI::ExistingFile);
  prepare->add_option("--patch-size", o.patch_size, "Patch side in pixels")->check(CLI::PositiveNumber);
  prepare->add_option("--stride", o.stride, "Patch stride in pixels")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as a patch directory");
  add_config(synth);
  synth->add_option("--out", o.out, "Patch directory to create")->required();

  auto* baseline = app.add_subcommand("baseline", "Repeated un-augmented trainings");
  add_run(baseline);

  auto* search_cmd = app.add_subcommand("search", "TPE search over (M, N)");
  add_run(search_cmd);
  search_cmd->add_option("--baseline", o.baseline_report, "Baseline report.json stored for reporting");

  auto* ablate = app.add_subcommand("ablate", "Each augmentation alone at a fixed magnitude");
  add_run(ablate);
  ablate->add_option("--baseline", o.baseline_report, "Baseline report.json to compare against");
  ablate->add_option("--from-search", o.search_report, "Take the magnitude from a search report.json");
  ablate->add_option("--fixed-m", o.fixed_m, "Magnitude level")->check(CLI::Range(0, augment::kMaxLevel));

  auto* kfold = app.add_subcommand("kfold", "k-fold cross-validation with and without a policy");
  add_run(kfold);
  kfold->add_option("--from-search", o.search_report, "Use the winning policy of a search report.json");
  kfold->add_option("--ablation", o.ablation_report, "Build the policy from an ablation report.json");
  kfold->add_option("--top-n", o.top_n, "Number of top ablation kinds in the policy")->check(CLI::Range(1, augment::kNumKinds));

  auto* report = app.add_subcommand("report", "Render a stored report");
  report->add_option("input", o.input, "report.json")->required();
  report->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*prepare) return detail::prepare_command(o, out);
    if (*synth) return detail::synth_command(o, *synth, out);
    if (*baseline) return detail::run_protocol_command(o, *baseline, search::Protocol::kBaseline, out, err);
    if (*search_cmd) return detail::run_protocol_command(o, *search_cmd, search::Protocol::kAugSearch, out, err);
    if (*ablate) return detail::run_protocol_command(o, *ablate, search::Protocol::kAblation, out, err);
    if (*kfold) {
      if (!o.search_report.empty() && !o.ablation_report.empty()) throw UsageError("use either --from-search or --ablation");
      return detail::run_protocol_command(o, *kfold, search::Protocol::kKfold, out, err);
    }
    if (*report) return detail::report_command(o, out);
  } catch (const ConfigError& e) {
    detail::print_error(err, "config", e.what(), e.field());
    return kExitUsage;
  } catch (const UsageError& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    detail::print_error(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace augsearch::cli

#endif  // AUGSEARCH_CLI_CLI_HPP
