#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "websight/raster.hpp"

namespace websight {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kFixtures = fs::path(WEBSIGHT_SOURCE_DIR) / "tests" / "fixtures";

struct Result {
  int exit_code = -1;
  std::string output;
};

std::string quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

Result run_cli(const std::vector<std::string>& args, const std::string& scratch) {
  std::string command = quote(WEBSIGHT_CLI);
  for (const auto& a : args) command += " " + quote(a);
  const std::string log = scratch + "/cli.log";
  command += " > " + quote(log) + " 2>&1";
  const int status = std::system(command.c_str());
  Result r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_file(log);
  return r;
}

json load_json(const fs::path& path) { return json::parse(read_file(path.string())); }

// Copies a fixture config into the scratch dir with absolute paths.
std::string staged_config(const std::string& fixture, const std::string& scratch,
                          const std::function<void(json&)>& edit = {}) {
  json config = load_json(kFixtures / fixture);
  config["output_dir"] = scratch + "/out";
  if (config.contains("environment") && config["environment"].contains("page_graph")) {
    config["environment"]["page_graph"] = (kFixtures / "shop_graph.json").string();
  }
  if (edit) edit(config);
  const std::string path = scratch + "/config.json";
  write_file(path, config.dump(2));
  return path;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(CliRun, SimulatedSmokeCompletes) {
  const std::string dir = testing::scratch_dir("cli-run");
  const Result r = run_cli({"run", "Search for mugs", "--config", staged_config("config_smoke.json", dir),
                            "--out", dir + "/run"},
                           dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("status: complete"), std::string::npos) << r.output;
  ASSERT_TRUE(fs::exists(dir + "/run/trajectory.jsonl"));
  const auto lines = lines_of(read_file(dir + "/run/trajectory.jsonl"));
  EXPECT_EQ(json::parse(lines.back())["final_state"].value("status", ""), "complete");
}

TEST(CliRun, MissingRoleIsConfigError) {
  const std::string dir = testing::scratch_dir("cli-missing-role");
  const std::string config =
      staged_config("config_smoke.json", dir, [](json& c) { c["roles"].erase("grounder"); });
  const Result r = run_cli({"run", "Search", "--config", config}, dir);
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("grounder"), std::string::npos) << r.output;
}

TEST(CliRun, ZeroDeadlineTimesOut) {
  const std::string dir = testing::scratch_dir("cli-deadline");
  const std::string config = staged_config("config_smoke.json", dir,
                                           [](json& c) { c["limits"]["deadline_seconds"] = 0; });
  const Result r = run_cli({"run", "Search", "--config", config, "--out", dir + "/run"}, dir);
  EXPECT_EQ(r.exit_code, 1) << r.output;
  const auto lines = lines_of(read_file(dir + "/run/trajectory.jsonl"));
  EXPECT_EQ(json::parse(lines.back())["final_state"].value("status", ""), "timed_out");
}

TEST(CliRun, MissingConfigFile) {
  const std::string dir = testing::scratch_dir("cli-no-config");
  EXPECT_EQ(run_cli({"run", "Search", "--config", dir + "/absent.json"}, dir).exit_code, 2);
}

TEST(CliBench, ShowdownWithOracleScoresEverything) {
  const std::string dir = testing::scratch_dir("cli-showdown");
  const Result r = run_cli({"bench", "showdown", "--dataset", (kFixtures / "showdown" / "samples.jsonl").string(),
                            "--config", staged_config("config_showdown_oracle.json", dir), "--report",
                            dir + "/report.json"},
                           dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("Top-1 accuracy: 100.00%"), std::string::npos) << r.output;
  const json report = load_json(dir + "/report.json");
  EXPECT_EQ(report.value("total", 0), 4);
  EXPECT_TRUE(fs::exists(dir + "/report.md"));
}

TEST(CliBench, WebVoyagerReportsHistogram) {
  const std::string dir = testing::scratch_dir("cli-voyager");
  const Result r = run_cli({"bench", "webvoyager", "--dataset", (kFixtures / "voyager_tasks.jsonl").string(),
                            "--config", staged_config("config_voyager.json", dir), "--report",
                            dir + "/report.json"},
                           dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("Success rate: 50.00%"), std::string::npos) << r.output;
  const json report = load_json(dir + "/report.json");
  EXPECT_EQ(report["status_histogram"].value("complete", 0), 2);
  EXPECT_EQ(report["per_task"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir + "/out/tasks/Shop--0/trajectory.jsonl"));
}

TEST(CliBench, MissingDatasetIsUsageError) {
  const std::string dir = testing::scratch_dir("cli-bad-dataset");
  const Result r = run_cli({"bench", "webvoyager", "--dataset", dir + "/nope.jsonl", "--config",
                            staged_config("config_voyager.json", dir)},
                           dir);
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(CliAugment, ReminderEntryYieldsThreeSamples) {
  const std::string dir = testing::scratch_dir("cli-augment");
  const Result r = run_cli({"augment", "--in", (kFixtures / "reminder_annotation.jsonl").string(), "--seed", "7",
                            "--out", dir + "/train.jsonl"},
                           dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("samples out: 3"), std::string::npos) << r.output;
  std::set<std::string> instructions;
  for (const auto& line : lines_of(read_file(dir + "/train.jsonl"))) {
    instructions.insert(json::parse(line)["messages"][0]["content"][1]["text"].get<std::string>());
  }
  EXPECT_EQ(instructions, (std::set<std::string>{"Click button to set reminders", "Tap reminder for management",
                                                 "Select reminder button"}));
  const json summary = load_json(dir + "/train.summary.json");
  EXPECT_EQ(summary.value("samples_out", 0), 3);
}

TEST(CliAugment, SameSeedSameBytes) {
  const std::string dir = testing::scratch_dir("cli-augment-seed");
  const std::string in = (kFixtures / "reminder_annotation.jsonl").string();
  ASSERT_EQ(run_cli({"augment", "--in", in, "--seed", "11", "--out", dir + "/a.jsonl"}, dir).exit_code, 0);
  ASSERT_EQ(run_cli({"augment", "--in", in, "--seed", "11", "--out", dir + "/b.jsonl"}, dir).exit_code, 0);
  EXPECT_EQ(read_file(dir + "/a.jsonl"), read_file(dir + "/b.jsonl"));
}

TEST(CliAugment, EmptyInput) {
  const std::string dir = testing::scratch_dir("cli-augment-empty");
  write_file(dir + "/empty.jsonl", "");
  const Result r = run_cli({"augment", "--in", dir + "/empty.jsonl", "--out", dir + "/train.jsonl"}, dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("samples out: 0"), std::string::npos) << r.output;
}

class CliReplay : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir("cli-replay");
    const Result r = run_cli({"run", "Search", "--config", staged_config("config_stuck_loop.json", dir_), "--out",
                              dir_ + "/run"},
                             dir_);
    ASSERT_EQ(r.exit_code, 1) << r.output;
    trajectory_ = dir_ + "/run/trajectory.jsonl";
  }
  std::string dir_;
  std::string trajectory_;
};

TEST_F(CliReplay, StepCountMatchesFooter) {
  const Result r = run_cli({"replay", "--trajectory", trajectory_}, dir_);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const auto lines = lines_of(read_file(trajectory_));
  const int footer_steps = json::parse(lines.back()).value("step_count", -1);
  int printed = 0;
  for (const auto& line : lines_of(r.output)) printed += line.rfind("step ", 0) == 0;
  EXPECT_EQ(printed, footer_steps);
  EXPECT_NE(r.output.find("final: loop_detected"), std::string::npos) << r.output;
  EXPECT_EQ(json::parse(lines.back()).value("failure_attribution", ""), "action");
}

TEST_F(CliReplay, AttributeNamesComponent) {
  const Result r = run_cli({"replay", "--trajectory", trajectory_, "--attribute", "--page-graph",
                            (kFixtures / "shop_graph.json").string()},
                           dir_);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("attribution: action"), std::string::npos) << r.output;
}

TEST_F(CliReplay, StepDetail) {
  const Result r = run_cli({"replay", "--trajectory", trajectory_, "--step", "2"}, dir_);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("<point>10 10</point>"), std::string::npos) << r.output;
}

TEST_F(CliReplay, TruncatedFileIsRejected) {
  auto lines = lines_of(read_file(trajectory_));
  lines.pop_back();
  std::string cut;
  for (const auto& l : lines) cut += l + "\n";
  write_file(dir_ + "/cut.jsonl", cut);
  EXPECT_EQ(run_cli({"replay", "--trajectory", dir_ + "/cut.jsonl"}, dir_).exit_code, 2);
}

}  // namespace
}  // namespace websight
