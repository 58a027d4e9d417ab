#pragma once

// Domain values shared by the agents, memory and orchestrator.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace websight {

struct Task {
  std::string id;
  std::string instruction;
  std::optional<std::string> start_url;
  int deadline_seconds = 600;
};

struct Plan {
  std::vector<std::string> steps;
  int revision = 0;

  friend bool operator==(const Plan&, const Plan&) = default;
};

enum class Outcome { kAdvanced, kStalled, kRegressed };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view text);

struct ProgressVerdict {
  Outcome outcome = Outcome::kStalled;
  std::string rationale;
  // Only ever true together with kAdvanced.
  bool task_complete = false;

  friend bool operator==(const ProgressVerdict&, const ProgressVerdict&) = default;
};

enum class TaskStatus {
  kInProgress,
  kComplete,
  kStuck,
  kTimedOut,
  kStepLimit,
  kLoopDetected,
};

std::string_view to_string(TaskStatus status);
std::optional<TaskStatus> status_from_string(std::string_view text);

struct TaskState {
  TaskStatus status = TaskStatus::kInProgress;
  // Number of plan-advancing steps taken so far.
  int step_index = 0;
  std::optional<std::string> answer;

  bool terminal() const { return status != TaskStatus::kInProgress; }

  friend bool operator==(const TaskState&, const TaskState&) = default;
};

enum class Component { kPlanning, kReasoning, kAction, kVerification };

std::string_view to_string(Component component);
std::optional<Component> component_from_string(std::string_view text);

}  // namespace websight
