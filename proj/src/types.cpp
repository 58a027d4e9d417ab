#include "websight/types.hpp"

#include <array>
#include <utility>

namespace websight {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view text) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table,
                         E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Outcome, std::string_view>, 3> kOutcomes{{
    {Outcome::kAdvanced, "advanced"},
    {Outcome::kStalled, "stalled"},
    {Outcome::kRegressed, "regressed"},
}};

constexpr std::array<std::pair<TaskStatus, std::string_view>, 6> kStatuses{{
    {TaskStatus::kInProgress, "in_progress"},
    {TaskStatus::kComplete, "complete"},
    {TaskStatus::kStuck, "stuck"},
    {TaskStatus::kTimedOut, "timed_out"},
    {TaskStatus::kStepLimit, "step_limit"},
    {TaskStatus::kLoopDetected, "loop_detected"},
}};

constexpr std::array<std::pair<Component, std::string_view>, 4> kComponents{{
    {Component::kPlanning, "planning"},
    {Component::kReasoning, "reasoning"},
    {Component::kAction, "action"},
    {Component::kVerification, "verification"},
}};

}  // namespace

std::string_view to_string(Outcome outcome) { return name_of(kOutcomes, outcome); }
std::optional<Outcome> outcome_from_string(std::string_view text) {
  return lookup(kOutcomes, text);
}

std::string_view to_string(TaskStatus status) { return name_of(kStatuses, status); }
std::optional<TaskStatus> status_from_string(std::string_view text) {
  return lookup(kStatuses, text);
}

std::string_view to_string(Component component) {
  return name_of(kComponents, component);
}
std::optional<Component> component_from_string(std::string_view text) {
  return lookup(kComponents, text);
}

}  // namespace websight
