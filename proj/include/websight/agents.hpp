#pragma once

// The four agent roles (planner, reasoner, visual grounder, verifier) as
// prompt construction + response parsing over a ModelRole.

#include <optional>
#include <string>
#include <string_view>

#include "websight/action_grammar.hpp"
#include "websight/episodic_memory.hpp"
#include "websight/model_gateway.hpp"
#include "websight/raster.hpp"
#include "websight/types.hpp"

namespace websight {

inline constexpr std::string_view kFinishedSentinel = "FINISHED";
inline constexpr std::string_view kGrounderLanguage = "English";
inline constexpr std::string_view kUnparseableVerdict = "unparseable verifier output";

struct ReasonerTurn {
  std::string reasoning;
  std::string directive;
  bool finished = false;
  std::optional<std::string> final_answer;
};

// "1. first\n2. second"
std::string format_plan(const Plan& plan);

// Request builders. The first attempt of each role sends exactly these.
ChatRequest build_plan_request(const Task& task, const ModelRole& role);
ChatRequest build_reason_request(const Plan& plan, const EpisodicMemory& memory,
                                 const Screenshot& screenshot, const ModelRole& role);
ChatRequest build_ground_request(std::string_view directive, const Screenshot& screenshot,
                                 std::string_view action_history, const ModelRole& role);
ChatRequest build_verify_request(const Screenshot& before, const Screenshot& after,
                                 std::string_view directive, const Plan& plan,
                                 const Task& task, const ModelRole& role);
ChatRequest build_replan_request(const Plan& plan, const EpisodicMemory& memory,
                                 const Task& task, const TaskState& state,
                                 const ModelRole& role);

// Collects every <step>...</step> region in order, trimmed.
// Throws Error(kNoStepsFound) when there are none.
Plan parse_plan(std::string_view response);

// Throws Error(kMalformedReasonerOutput) when the <action> tag is missing or
// a FINISHED action carries no answer.
ReasonerTurn parse_reasoner_output(std::string_view response);

// Total: anything that is not a well-formed OUTCOME line maps to stalled.
ProgressVerdict parse_verdict(std::string_view response);

Plan plan(const Task& task, const ModelRole& role);

// One reprompt (with the parse error appended) on malformed output.
ReasonerTurn reason(const Plan& plan, const EpisodicMemory& memory,
                    const Screenshot& screenshot, const ModelRole& role);

// One reprompt on grammar errors; the second error propagates.
// finished(content='STUCK') comes back as an ordinary turn.
ModelTurn ground(std::string_view directive, const Screenshot& screenshot,
                 std::string_view action_history, const ModelRole& role);

ProgressVerdict verify(const Screenshot& before, const Screenshot& after,
                       std::string_view directive, const Plan& plan, const Task& task,
                       const ModelRole& role);

// Returns revision + 1 on success; the unchanged plan when the planner yields
// no steps.
Plan update_plan(const Plan& plan, const EpisodicMemory& memory, const Task& task,
                 const TaskState& state, const ModelRole& role);

}  // namespace websight
