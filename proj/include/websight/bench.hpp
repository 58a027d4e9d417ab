#pragma once

// Benchmark harnesses: click-grounding accuracy over a labelled sample set and
// end-to-end task success over a task suite.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/orchestrator.hpp"

namespace websight {

inline constexpr int kDefaultBenchConcurrency = 4;

struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ClickSample {
  std::string id;
  std::string image_ref;  // file path; relative paths resolve against the dataset file
  std::string instruction;
  BBox bbox;
};

// Inclusive point-in-box. Throws Error(kSpaceMismatch) for model-space points.
bool score_click(const ClickSample& sample, Point predicted);

// 100 * part / whole rounded half away from zero to two decimals.
double percent_2dp(long long part, long long whole);

struct LatencySummary {
  double mean = 0.0;
  double p50 = 0.0;  // nearest-rank percentiles
  double p90 = 0.0;
};

LatencySummary summarize_latency(std::vector<double> samples_ms);

struct SampleResult {
  std::string id;
  std::optional<Point> predicted;  // pixel space
  std::string action;              // serialized grounder action, if any
  bool hit = false;
  double latency_ms = 0.0;
  std::string note;                // "wrong action: scroll", error text, ...
};

struct ShowdownReport {
  int total = 0;
  int correct = 0;
  double accuracy_percent = 0.0;
  LatencySummary latency_ms;
  std::vector<SampleResult> per_sample;  // input order
  int error_notes = 0;                   // samples that failed to run at all
};

struct ShowdownOptions {
  int concurrency = kDefaultBenchConcurrency;
  Extent model_extent = kDefaultModelExtent;
};

// One grounder call per sample; parse failures and non-click actions are
// misses with a note. Never throws for per-sample failures.
ShowdownReport run_showdown(const std::vector<ClickSample>& samples, const ModelRole& grounder,
                            const ShowdownOptions& options = {});

// The instruction embedded in a grounder request (the text under
// "## User Instruction"); empty when absent.
std::string grounder_instruction(const ChatRequest& request);

// Grounder that clicks the bbox center of the sample whose instruction it is
// asked about; unknown instructions get finished(content='STUCK').
std::shared_ptr<Backend> oracle_grounder(const std::vector<ClickSample>& samples,
                                         Extent model_extent = kDefaultModelExtent);

// --- WebVoyager -------------------------------------------------------------

struct VoyagerTask {
  std::string web_name;
  std::string task_id;
  std::string question;
  std::string start_url;
  std::optional<std::string> reference_answer;
};

// Answer judging: normalized match against the reference, then the optional
// model judge.
struct Judge {
  std::optional<ModelRole> backend;
};

// Lowercase, trim, collapse whitespace, strip surrounding punctuation.
std::string normalize_answer(std::string_view text);

// Throws Error(kJudgeUnavailable) without a reference and without a backend,
// and Error(kInvalidArgument) for an empty answer.
bool judge_answer(const VoyagerTask& task, std::string_view answer, const Judge& judge);

// Everything one task run needs. Produced fresh per task by the harness.
struct TaskSetup {
  std::unique_ptr<Environment> env;
  RoleBackends roles;
  RunOptions options;
  // Owns per-task objects referenced from `options` (clock, store).
  std::vector<std::shared_ptr<void>> keep_alive;
  std::optional<AttributionProbes> probes;
};

using TaskSetupFactory = std::function<TaskSetup(const VoyagerTask&)>;

struct TaskResult {
  std::string task_id;
  std::string web_name;
  TaskStatus status = TaskStatus::kStuck;
  std::optional<std::string> answer;
  bool judged_correct = false;
  double wall_seconds = 0.0;
  int steps = 0;
  std::optional<Component> attribution;
  std::string note;
};

struct VoyagerReport {
  int total = 0;
  int success = 0;
  double success_percent = 0.0;
  int answered = 0;
  int answered_correct = 0;
  std::optional<double> answered_accuracy_percent;  // absent when answered == 0
  std::map<std::string, int> status_histogram;
  std::map<std::string, int> attribution_histogram;
  std::vector<TaskResult> per_task;  // input order
  int error_notes = 0;
};

struct VoyagerOptions {
  int concurrency = kDefaultBenchConcurrency;
  int deadline_seconds = 600;
};

VoyagerReport run_webvoyager(const std::vector<VoyagerTask>& tasks, const TaskSetupFactory& setup,
                             const Judge& judge, const VoyagerOptions& options = {});

// --- Ingest and output ---------------------------------------------------------

// JSONL, one {id?, image, instruction, bbox:[x1,y1,x2,y2]} per line. Records
// in the published dataset layout ({instruction, image|image_path, x1, y1,
// x2, y2}) are accepted too. Throws Error(kIoFailure) / Error(kInvalidArgument).
std::vector<ClickSample> load_showdown_samples(const std::string& path);

// JSON array or JSONL of {web_name, id, ques, web, answer?}.
std::vector<VoyagerTask> load_voyager_tasks(const std::string& path);

nlohmann::json to_json(const ShowdownReport& report);
nlohmann::json to_json(const VoyagerReport& report);
std::string format_table(const ShowdownReport& report, std::string_view model_name);
std::string format_table(const VoyagerReport& report, std::string_view agent_name);

}  // namespace websight
