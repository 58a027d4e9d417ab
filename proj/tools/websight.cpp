// websight: run tasks, benchmarks, augmentation and trajectory replay.
//
// Exit codes: 0 success, 1 agent or benchmark failure, 2 operator error.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "websight/bench.hpp"
#include "websight/config.hpp"
#include "websight/data_augment.hpp"
#include "websight/error.hpp"
#include "websight/orchestrator.hpp"
#include "websight/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace websight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitOperator = 2;

std::string fixed2(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.2f", value);
  return buffer;
}

// Task ids become directory names.
std::string safe_name(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() || out == "." || out == ".." ? "task" : out;
}

std::string table_path(const std::string& report_path) {
  return fs::path(report_path).replace_extension(".md").string();
}

void write_report(const json& report, const std::string& table, const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_file(path, report.dump(2) + "\n");
  write_file(table_path(path), table);
}

RunOptions run_options(const Config& config) {
  RunOptions options;
  options.limits = config.limits;
  options.memory_capacity = config.memory_capacity;
  options.model_extent = config.model_extent;
  options.config_snapshot = config.snapshot;
  return options;
}

// --- run ---------------------------------------------------------------------

struct RunArgs {
  std::string instruction;
  std::string url;
  std::string config;
  std::string out;
  std::string id = "task";
};

int cmd_run(const RunArgs& args) {
  const Config config = load_config(args.config);
  const RoleBackends roles = make_role_backends(config);
  SessionConfig session = make_session_config(config);
  if (!args.url.empty()) session.start_url = args.url;

  Task task;
  task.id = args.id;
  task.instruction = args.instruction;
  if (!args.url.empty()) task.start_url = args.url;
  task.deadline_seconds = config.deadline_seconds;

  const std::string out = args.out.empty() ? config.output_dir : args.out;
  ScreenshotStore store((fs::path(out) / "screenshots").string());
  RunOptions options = run_options(config);
  options.store = &store;
  options.trajectory_path = (fs::path(out) / "trajectory.jsonl").string();

  TrajectoryRecord record = run_task(task, roles, session, options);
  if (session.simulated && record.final_state.status != TaskStatus::kComplete && !record.failure_attribution) {
    try {
      record.failure_attribution =
          attribute_failure(record, store, AttributionProbes{&session.simulated->graph, std::nullopt});
      write_trajectory(record, *options.trajectory_path);
    } catch (const Error& e) {
      std::cerr << "attribution skipped: " << e.what() << "\n";
    }
  }
  std::cout << "status: " << to_string(record.final_state.status) << "\n";
  std::cout << "answer: " << record.final_state.answer.value_or("") << "\n";
  std::cout << "steps: " << record.steps.size() << "\n";
  if (record.failure_attribution) {
    std::cout << "attribution: " << to_string(*record.failure_attribution) << "\n";
  }
  if (!record.failure_detail.empty()) std::cout << "detail: " << record.failure_detail << "\n";
  std::cout << "trajectory: " << *options.trajectory_path << "\n";
  return record.final_state.status == TaskStatus::kComplete ? kExitOk : kExitFailure;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string dataset;
  std::string config;
  std::string report;
  int concurrency = 0;  // 0: from config
  std::string name;
};

int cmd_showdown(const BenchArgs& args) {
  const Config config = load_config(args.config);
  const std::vector<ClickSample> samples = load_showdown_samples(args.dataset);
  const RoleConfig& grounder_config = config.roles.at("grounder");
  ModelRole grounder;
  if (grounder_config.kind == RoleKind::kOracle) {
    grounder.backend = oracle_grounder(samples, config.model_extent);
    grounder.model = "oracle";
  } else {
    std::optional<ModelRole> role = make_role(grounder_config);
    if (!role) throw Error(ErrorCode::kConfigError, "the grounder role is disabled");
    grounder = *role;
  }
  ShowdownOptions options;
  options.concurrency = args.concurrency > 0 ? args.concurrency : config.bench_concurrency;
  options.model_extent = config.model_extent;
  const ShowdownReport report = run_showdown(samples, grounder, options);

  const std::string name = !args.name.empty() ? args.name : grounder.model.empty() ? "grounder" : grounder.model;
  const std::string table = format_table(report, name);
  const std::string path = !args.report.empty()
                               ? args.report
                               : (fs::path(config.output_dir) / "showdown_report.json").string();
  write_report(to_json(report), table, path);
  std::cout << table << "\n";
  std::cout << "Top-1 accuracy: " << fixed2(report.accuracy_percent) << "%\n";
  std::cout << "report: " << path << "\n";
  return report.error_notes > 0 ? kExitFailure : kExitOk;
}

int cmd_webvoyager(const BenchArgs& args) {
  const Config config = load_config(args.config);
  const std::vector<VoyagerTask> tasks = load_voyager_tasks(args.dataset);
  make_role_backends(config);  // surfaces role errors before any task starts

  std::shared_ptr<const PageGraph> graph;
  if (config.page_graph_path) graph = std::make_shared<PageGraph>(load_page_graph(*config.page_graph_path));
  const fs::path task_root = fs::path(config.output_dir) / "tasks";

  TaskSetupFactory setup = [&](const VoyagerTask& vt) {
    TaskSetup s;
    SessionConfig session;
    session.settings.viewport = config.viewport;
    if (graph) {
      session.simulated = SimulatedSessionConfig{*graph};
      s.probes = AttributionProbes{graph.get(), std::nullopt};
    } else {
      session.chrome = config.chrome;
    }
    s.env = open_session(session);
    s.roles = make_role_backends(config);
    const fs::path dir = task_root / safe_name(vt.task_id);
    auto store = std::make_shared<ScreenshotStore>((dir / "screenshots").string());
    s.options = run_options(config);
    s.options.store = store.get();
    s.options.trajectory_path = (dir / "trajectory.jsonl").string();
    s.keep_alive.push_back(store);
    return s;
  };

  const RoleConfig& judge_config = config.roles.at("judge");
  Judge judge{judge_config.kind == RoleKind::kDisabled ? std::nullopt : make_role(judge_config)};
  VoyagerOptions options;
  options.concurrency = args.concurrency > 0 ? args.concurrency : config.bench_concurrency;
  options.deadline_seconds = config.deadline_seconds;
  const VoyagerReport report = run_webvoyager(tasks, setup, judge, options);

  const std::string table = format_table(report, args.name.empty() ? "websight" : args.name);
  const std::string path = !args.report.empty()
                               ? args.report
                               : (fs::path(config.output_dir) / "webvoyager_report.json").string();
  write_report(to_json(report), table, path);
  std::cout << table << "\n";
  std::cout << "Success rate: " << fixed2(report.success_percent) << "%\n";
  if (report.answered_accuracy_percent) {
    std::cout << "Answered accuracy: " << fixed2(*report.answered_accuracy_percent) << "%\n";
  }
  std::cout << "report: " << path << "\n";
  return report.error_notes > 0 ? kExitFailure : kExitOk;
}

// --- augment -----------------------------------------------------------------

struct AugmentArgs {
  std::string in;
  std::string templates;
  int variants = 3;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

int cmd_augment(const AugmentArgs& args) {
  Extent model_extent = kDefaultModelExtent;
  if (!args.config.empty()) model_extent = load_config(args.config).model_extent;
  const std::vector<UiAnnotation> entries = load_annotations(args.in);
  const std::vector<InstructionTemplate> templates =
      args.templates.empty() ? default_templates() : load_templates(args.templates);
  if (templates.empty()) throw Error(ErrorCode::kInvalidArgument, args.templates + " has no templates");

  FilterSummary filter;
  const std::vector<UiAnnotation> web = filter_web_subset(entries, &filter);
  const AugmentResult result = augment(web, templates, args.variants, args.seed, model_extent);
  const std::size_t written = emit_training_file(result.samples, args.out);

  json notes = json::array();
  for (const auto& note : result.notes) {
    notes.push_back({{"annotation_id", note.annotation_id},
                     {"code", std::string(to_string(note.code))},
                     {"message", note.message}});
  }
  const json summary = {{"entries_in", filter.total},  {"web_entries", filter.web},
                        {"non_web_entries", filter.non_web}, {"samples_out", written},
                        {"seed", args.seed},           {"variants", args.variants},
                        {"notes", notes}};
  const std::string summary_path = fs::path(args.out).replace_extension(".summary.json").string();
  write_file(summary_path, summary.dump(2) + "\n");
  std::cout << "entries in: " << filter.total << "\n"
            << "web entries: " << filter.web << "\n"
            << "samples out: " << written << "\n"
            << "summary: " << summary_path << "\n";
  return kExitOk;
}

// --- replay ------------------------------------------------------------------

struct ReplayArgs {
  std::string trajectory;
  int step = 0;  // 0: none
  bool attribute = false;
  std::string page_graph;
};

int cmd_replay(const ReplayArgs& args) {
  const TrajectoryRecord record = read_trajectory(args.trajectory);
  const fs::path base = fs::path(args.trajectory).parent_path();

  std::cout << "task " << record.task.id << ": " << record.task.instruction << "\n";
  for (const Plan& plan : record.plans) {
    std::cout << "plan revision " << plan.revision << ":\n";
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      std::cout << "  " << i + 1 << ". " << plan.steps[i] << "\n";
    }
  }
  for (const StepRecord& step : record.steps) {
    std::cout << "step " << step.entry.step_index << " [plan " << step.plan_revision << "] "
              << serialize_action(step.entry.action) << " -> " << to_string(step.entry.verdict.outcome)
              << (step.entry.verdict.task_complete ? " (complete)" : "") << ": "
              << step.entry.verdict.rationale << "\n";
  }
  std::cout << "final: " << to_string(record.final_state.status);
  if (record.final_state.answer) std::cout << " answer=" << *record.final_state.answer;
  std::cout << "\nsteps: " << record.steps.size() << "\n";

  if (args.step != 0) {
    if (args.step < 1 || args.step > static_cast<int>(record.steps.size())) {
      throw Error(ErrorCode::kInvalidArgument, "--step must be between 1 and " +
                                                   std::to_string(record.steps.size()));
    }
    const StepRecord& step = record.steps[static_cast<std::size_t>(args.step - 1)];
    std::cout << "step " << args.step << " directive: " << step.directive << "\n"
              << "step " << args.step << " url: " << step.url_before << " -> " << step.url_after << "\n"
              << "step " << args.step << " screenshot before: "
              << (base / ScreenshotStore::file_name(step.entry.screenshot_ref_before)).string() << "\n"
              << "step " << args.step << " screenshot after: "
              << (base / ScreenshotStore::file_name(step.entry.screenshot_ref_after)).string() << "\n";
  }

  if (args.attribute) {
    const ScreenshotStore store = ScreenshotStore::load((base / "screenshots").string());
    std::optional<PageGraph> graph;
    if (!args.page_graph.empty()) graph = load_page_graph(args.page_graph);
    AttributionProbes probes;
    if (graph) probes.graph = &*graph;
    std::cout << "attribution: " << to_string(attribute_failure(record, store, probes)) << "\n";
  }
  return kExitOk;
}

bool operator_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kIoFailure:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kBadPageGraph:
    case ErrorCode::kMalformedTrajectory:
    case ErrorCode::kIncompleteRecord:
    case ErrorCode::kMissingField:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"websight: vision-first web agent engine"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one task and write its trajectory");
  run_cmd->add_option("task", run.instruction, "Task instruction")->required();
  run_cmd->add_option("--url", run.url, "Start URL");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output directory (default: config output_dir)");
  run_cmd->add_option("--id", run.id, "Task id recorded in the trajectory");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark");
  bench_cmd->require_subcommand(1);
  CLI::App* bench_subs[] = {
      bench_cmd->add_subcommand("showdown", "Click-grounding accuracy"),
      bench_cmd->add_subcommand("webvoyager", "End-to-end task success")};
  for (CLI::App* sub : bench_subs) {
    sub->add_option("--dataset", bench.dataset, "Dataset file")->required();
    sub->add_option("--config", bench.config, "Config file")->required();
    sub->add_option("--report", bench.report, "JSON report path; the table goes next to it as .md");
    sub->add_option("--concurrency", bench.concurrency, "Parallel sessions")->check(CLI::PositiveNumber);
    sub->add_option("--name", bench.name, "Row label in the table");
  }

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Generate templated click-instruction training data");
  aug_cmd->add_option("--in", aug.in, "Annotation JSONL")->required();
  aug_cmd->add_option("--templates", aug.templates, "Template file, one pattern per line");
  aug_cmd->add_option("--variants", aug.variants, "Variants per entry")->check(CLI::PositiveNumber);
  aug_cmd->add_option("--seed", aug.seed, "Seed for template selection");
  aug_cmd->add_option("--out", aug.out, "Training JSONL output")->required();
  aug_cmd->add_option("--config", aug.config, "Config file (model_extent)");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Inspect a recorded trajectory");
  replay_cmd->add_option("--trajectory", replay.trajectory, "trajectory.jsonl")->required();
  replay_cmd->add_option("--step", replay.step, "Print details of step N")->check(CLI::PositiveNumber);
  replay_cmd->add_flag("--attribute", replay.attribute, "Attribute the failure to a component");
  replay_cmd->add_option("--page-graph", replay.page_graph, "Page graph of a simulated run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitOperator;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*bench_subs[0]) return cmd_showdown(bench);
    if (*bench_subs[1]) return cmd_webvoyager(bench);
    if (*aug_cmd) return cmd_augment(aug);
    if (*replay_cmd) return cmd_replay(replay);
  } catch (const Error& e) {
    std::cerr << "websight: " << e.what() << "\n";
    return operator_error(e.code()) ? kExitOperator : kExitFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "websight: " << e.what() << "\n";
    return kExitOperator;
  } catch (const std::exception& e) {
    std::cerr << "websight: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOperator;
}
