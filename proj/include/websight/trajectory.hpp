#pragma once

// JSONL persistence of a TrajectoryRecord (docs/trajectory_schema.md):
//   {"type":"header", ...}   task and config snapshot
//   {"type":"plan", ...}     every plan revision, in order
//   {"type":"step", ...}     one per executed action
//   {"type":"footer", ...}   final state, timing, attribution

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/orchestrator.hpp"

namespace websight {

inline constexpr int kTrajectorySchemaVersion = 1;

nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& value);
nlohmann::json state_to_json(const TaskState& state);

std::vector<nlohmann::json> trajectory_lines(const TrajectoryRecord& record);
std::string to_jsonl(const TrajectoryRecord& record);

// Creates parent directories. Throws Error(kIoFailure).
void write_trajectory(const TrajectoryRecord& record, const std::string& path);

// Schema problems, one message per violation; empty means valid.
std::vector<std::string> validate_trajectory(std::string_view jsonl);

// Throws Error(kMalformedTrajectory) when validate_trajectory reports anything.
TrajectoryRecord parse_trajectory(std::string_view jsonl);
TrajectoryRecord read_trajectory(const std::string& path);

}  // namespace websight
