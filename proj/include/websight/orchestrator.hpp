#pragma once

// The agent loop: plan once, then reason -> ground -> execute -> verify ->
// remember -> advance or replan, until a terminal status.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/agents.hpp"
#include "websight/browser_env.hpp"
#include "websight/episodic_memory.hpp"
#include "websight/model_gateway.hpp"
#include "websight/types.hpp"

namespace websight {

struct Limits {
  int max_steps = 40;
  int loop_window = kDefaultLoopWindow;
  int loop_threshold = kDefaultLoopThreshold;
};

struct RoleBackends {
  ModelRole planner;
  ModelRole reasoner;
  ModelRole grounder;
  ModelRole verifier;
  std::optional<ModelRole> judge;
};

// Content-addressed screenshot storage. Refs are the SHA-256 of the PNG
// bytes; with a directory set, every image is also written to
// <directory>/<ref>.png. Safe to share between concurrent runs.
class ScreenshotStore {
 public:
  ScreenshotStore() = default;
  explicit ScreenshotStore(std::string directory);
  ScreenshotStore(ScreenshotStore&& other) noexcept;

  std::string put(const std::string& encoded);
  std::optional<std::string> get(const std::string& ref) const;
  bool contains(const std::string& ref) const;
  std::size_t size() const;
  const std::string& directory() const { return directory_; }
  // Relative file name used inside trajectories: screenshots/<ref>.png
  static std::string file_name(const std::string& ref);

  // Loads every <ref>.png under `directory`.
  static ScreenshotStore load(const std::string& directory);

 private:
  std::string directory_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> images_;
};

struct RunOptions {
  Limits limits;
  std::size_t memory_capacity = kDefaultMemoryCapacity;
  Extent model_extent = kDefaultModelExtent;
  Clock* clock = nullptr;           // system clock when null
  ScreenshotStore* store = nullptr;  // a private in-memory store when null
  // Embedded verbatim in the trajectory header.
  nlohmann::json config_snapshot = nlohmann::json::object();
  // When set, the trajectory JSONL is written here before run_task returns.
  std::optional<std::string> trajectory_path;
};

// One executed action with everything the loop saw around it.
struct StepRecord {
  MemoryEntry entry;          // entry.action is the model-space action
  ActionCommand executed;     // pixel-space action sent to the environment
  std::string reasoning;
  std::string directive;
  std::string thought;        // grounder thought; empty for navigate directives
  ExecutionOutcome outcome;
  std::string url_before;
  std::string url_after;
  int plan_revision = 0;      // revision in force when the action was chosen
};

struct TrajectoryRecord {
  Task task;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Plan> plans;
  std::vector<StepRecord> steps;
  TaskState final_state;
  double wall_seconds = 0.0;
  std::optional<Component> failure_attribution;
  std::string failure_detail;
};

// Never throws for agent, backend or environment failures; they end the run
// with status stuck and an attribution. Only a failure to write
// options.trajectory_path escapes, as Error(kIoFailure). Planning always
// runs, so even an already expired deadline leaves revision 0 in the record.
TrajectoryRecord run_task(const Task& task, const RoleBackends& roles, Environment& env,
                          const RunOptions& options = {});

// Opens a session from `session` first; a launch failure is a stuck run.
TrajectoryRecord run_task(const Task& task, const RoleBackends& roles,
                          const SessionConfig& session, const RunOptions& options = {});

// "Navigate to <url>" directives bypass the grounder; returns the URL.
std::optional<std::string> navigation_target(std::string_view directive);

// Evidence for attribute_failure beyond the record itself.
struct AttributionProbes {
  // Page graph of a simulated run: enables reachability and element checks.
  const PageGraph* graph = nullptr;
  // Optional vision model asked "is <element> visible?" when no graph exists.
  std::optional<ModelRole> element_probe;
};

// Tags the earliest component whose output contradicts the recorded evidence.
// Throws Error(kIncompleteRecord) if a referenced screenshot is missing and
// Error(kInvalidArgument) for completed runs.
Component attribute_failure(const TrajectoryRecord& record, const ScreenshotStore& store,
                            const AttributionProbes& probes = {});

// Quoted substrings ('x', "x", or ‘x’ / “x”) in order of appearance.
std::vector<std::string> quoted_labels(std::string_view text);

}  // namespace websight
