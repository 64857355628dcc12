#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "augsearch/cli/cli.hpp"
#include "test_util.hpp"

using namespace augsearch;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "augsearch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json last_error(const std::string& err) {
  const auto start = err.rfind('{');
  return nlohmann::json::parse(err.substr(start));
}

/// Small synthetic experiment written to `dir/config.json`.
std::string write_config(const fs::path& dir, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j = {{"seed", 3},
                      {"data", {{"synthetic", {{"num_images", 10}, {"image_size", 32}}}, {"val_count", 3}}},
                      {"train", {{"iterations", 10}, {"batch_size", 2}, {"resize_to", 32}}},
                      {"trial_budget", 3},
                      {"baseline_trials", 2},
                      {"ablation_trials", 1},
                      {"folds", 3}};
  j.merge_patch(extra);
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path.string();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, SynthIsDeterministic) {
  test::TempDir a, b;
  ASSERT_EQ(run_cli({"synth", "--out", a.path().string(), "--seed", "7"}).code, 0);
  ASSERT_EQ(run_cli({"synth", "--out", b.path().string(), "--seed", "7"}).code, 0);
  const auto sa = test::snapshot_directory(a.path());
  EXPECT_EQ(sa, test::snapshot_directory(b.path()));
  EXPECT_EQ(sa.size(), 2u * 80 + 1);
  test::TempDir c;
  ASSERT_EQ(run_cli({"synth", "--out", c.path().string(), "--seed", "8"}).code, 0);
  EXPECT_NE(sa, test::snapshot_directory(c.path()));
}

TEST(Cli, SearchSmokeAndReplay) {
  test::TempDir dir;
  const auto config = write_config(dir.path());
  const auto run = (dir.path() / "run").string();
  const auto r = run_cli({"search", "--config", config, "--out", run, "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best M="), std::string::npos);
  const auto rows = parse_csv(test::read_file(fs::path(run) / "report.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"M", "N", "Final Dice Score"}));

  // Rerunning on the resolved config reproduces the report exactly.
  const auto replay = (dir.path() / "replay").string();
  ASSERT_EQ(run_cli({"search", "--config", run + "/config.json", "--out", replay, "--jobs", "1"}).code, 0);
  EXPECT_EQ(test::snapshot_directory(run), test::snapshot_directory(replay));
}

TEST(Cli, ReportCsvMatchesJson) {
  test::TempDir dir;
  const auto config = write_config(dir.path());
  const auto base = (dir.path() / "base").string();
  const auto abl = (dir.path() / "abl").string();
  ASSERT_EQ(run_cli({"baseline", "--config", config, "--out", base, "--jobs", "1"}).code, 0);
  const auto r = run_cli({"ablate", "--config", config, "--out", abl, "--baseline", base + "/report.json", "--fixed-m", "5"});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto report = nlohmann::json::parse(test::read_file(fs::path(abl) / "report.json"));
  EXPECT_EQ(report["config"]["baseline_scores"],
            nlohmann::json::parse(test::read_file(fs::path(base) / "report.json"))["result"]["scores"]);
  const auto csv = run_cli({"report", abl + "/report.json", "--format", "csv"});
  ASSERT_EQ(csv.code, 0);
  const auto rows = parse_csv(csv.out);
  ASSERT_EQ(rows.size(), 14u);
  const std::vector<std::string> cols{"Augmentation", "Mean DS", "% Diff. in DS", "Std DS", "p-val"};
  EXPECT_EQ(rows[0], cols);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = report["result"]["rows"][i - 1];
    EXPECT_EQ(rows[i][0], row["Augmentation"].get<std::string>());
    for (std::size_t c = 1; c < cols.size(); ++c) {
      if (row[cols[c]].is_null()) {
        EXPECT_TRUE(rows[i][c].empty());
      } else {
        EXPECT_EQ(std::stod(rows[i][c]), row[cols[c]].get<double>()) << cols[c];
      }
    }
  }
  EXPECT_EQ(run_cli({"report", abl + "/report.json"}).out, report.dump(2) + "\n");
}

TEST(Cli, KfoldFromSearchWinner) {
  test::TempDir dir;
  const auto config = write_config(dir.path());
  const auto s = (dir.path() / "s").string();
  const auto k = (dir.path() / "k").string();
  ASSERT_EQ(run_cli({"search", "--config", config, "--out", s}).code, 0);
  const auto r = run_cli({"kfold", "--config", config, "--out", k, "--from-search", s + "/report.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(test::read_file(fs::path(k) / "report.json"));
  const auto search = nlohmann::json::parse(test::read_file(fs::path(s) / "report.json"));
  EXPECT_EQ(report["result"]["policy"], search["result"]["winner"]["policy"]);
  EXPECT_EQ(report["result"]["folds"].size(), 3u);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "Model,BL Mean,BL Std,WA Mean,WA Std,p-val");
}

TEST(Cli, DirectoryDataMatchesSyntheticAndIsNotModified) {
  test::TempDir dir;
  const auto data = (dir.path() / "data").string();
  const auto config = write_config(dir.path());
  ASSERT_EQ(run_cli({"synth", "--config", config, "--out", data}).code, 0);
  const auto before = test::snapshot_directory(data);

  const auto direct = (dir.path() / "direct").string();
  ASSERT_EQ(run_cli({"baseline", "--config", config, "--out", direct}).code, 0);
  const auto dir_config = write_config(dir.path() / "dir_source", {{"data", {{"source", "directory"}, {"directory", data}}}});
  const auto via_dir = (dir.path() / "via_dir").string();
  const auto r = run_cli({"baseline", "--config", dir_config, "--out", via_dir});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(test::read_file(fs::path(direct) / "report.json"))["result"],
            nlohmann::json::parse(test::read_file(fs::path(via_dir) / "report.json"))["result"]);
  EXPECT_EQ(before, test::snapshot_directory(data));
}

TEST(Cli, SeedFlagOverridesConfig) {
  test::TempDir dir;
  const auto config = write_config(dir.path());
  const auto run = (dir.path() / "run").string();
  ASSERT_EQ(run_cli({"baseline", "--config", config, "--out", run, "--seed", "99"}).code, 0);
  EXPECT_EQ(nlohmann::json::parse(test::read_file(fs::path(run) / "config.json"))["seed"], 99);
}

TEST(Cli, ExitCodes) {
  test::TempDir dir;
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"search", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"search", "--config", (dir.path() / "missing.json").string(), "--out", "x"}).code, cli::kExitUsage);

  const auto bad = write_config(dir.path(), {{"tpe", {{"gamma_fraction", 1.5}}}});
  const auto r = run_cli({"search", "--config", bad, "--out", (dir.path() / "o").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(last_error(r.err)["field"], "tpe.gamma_fraction");

  std::ofstream(dir.path() / "garbage.json") << "{not json";
  EXPECT_EQ(run_cli({"baseline", "--config", (dir.path() / "garbage.json").string(), "--out", "x"}).code, cli::kExitUsage);

  const auto missing_data =
      write_config(dir.path(), {{"data", {{"source", "directory"}, {"directory", (dir.path() / "nowhere").string()}}}});
  const auto rt = run_cli({"baseline", "--config", missing_data, "--out", (dir.path() / "o2").string()});
  EXPECT_EQ(rt.code, cli::kExitRuntime);
  EXPECT_EQ(last_error(rt.err)["error"], "runtime");

  EXPECT_EQ(run_cli({"ablate", "--out", (dir.path() / "o3").string()}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}
