#include "websight/agents.hpp"

#include <cctype>

#include "websight/error.hpp"
#include "websight/prompts.hpp"

namespace websight {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EncodedImage image_of(const Screenshot& shot) {
  return EncodedImage{std::string(image_mime_type(shot.encoded)), shot.encoded};
}

// Content of the first <tag>...</tag> region, if any.
std::optional<std::string_view> tag_content(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto begin = text.find(open);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto content_begin = begin + open.size();
  const auto end = text.find(close, content_begin);
  if (end == std::string_view::npos) return std::nullopt;
  return text.substr(content_begin, end - content_begin);
}

void append_retry_note(ChatRequest& request, const std::string& error,
                       std::string_view instruction) {
  request.messages.back().text += "\n\nYour previous reply could not be parsed (" +
                                  error + "). " + std::string(instruction);
}

}  // namespace

std::string format_plan(const Plan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + plan.steps[i];
  }
  return out;
}

ChatRequest build_plan_request(const Task& task, const ModelRole& role) {
  ChatRequest request = role.request();
  request.system_prompt = std::string(prompts::planner_system());
  request.messages.push_back(
      {ChatRole::kUser, fill_template(prompts::planner_user(), {{"task", task.instruction}}), {}});
  return request;
}

ChatRequest build_reason_request(const Plan& plan, const EpisodicMemory& memory,
                                 const Screenshot& screenshot, const ModelRole& role) {
  ChatRequest request = role.request();
  request.system_prompt = std::string(prompts::reasoner_system());
  request.messages.push_back(
      {ChatRole::kUser,
       fill_template(prompts::reasoner_user(),
                     {{"plan", format_plan(plan)},
                      {"history", render_history(memory, memory.capacity())}}),
       {image_of(screenshot)}});
  return request;
}

ChatRequest build_ground_request(std::string_view directive, const Screenshot& screenshot,
                                 std::string_view action_history, const ModelRole& role) {
  ChatRequest request = role.request();
  std::string text = fill_template(
      prompts::grounder(),
      {{"instruction", std::string(directive)}, {"language", std::string(kGrounderLanguage)}});
  if (!trim(action_history).empty() && action_history != kEmptyHistory) {
    text += "\n\n## Action History\n" + std::string(action_history);
  }
  request.messages.push_back({ChatRole::kUser, std::move(text), {image_of(screenshot)}});
  return request;
}

ChatRequest build_verify_request(const Screenshot& before, const Screenshot& after,
                                 std::string_view directive, const Plan& plan,
                                 const Task& task, const ModelRole& role) {
  ChatRequest request = role.request();
  request.system_prompt = std::string(prompts::verifier_system());
  request.messages.push_back(
      {ChatRole::kUser,
       fill_template(prompts::verifier_user(), {{"task", task.instruction},
                                                {"plan", format_plan(plan)},
                                                {"directive", std::string(directive)}}),
       {image_of(before), image_of(after)}});
  return request;
}

ChatRequest build_replan_request(const Plan& plan, const EpisodicMemory& memory,
                                 const Task& task, const TaskState& state,
                                 const ModelRole& role) {
  ChatRequest request = build_plan_request(task, role);
  request.messages.back().text +=
      "\n\n" + fill_template(prompts::planner_revision(),
                             {{"plan", format_plan(plan)},
                              {"history", render_history(memory, memory.capacity())},
                              {"progress", std::to_string(state.step_index)}});
  return request;
}

Plan parse_plan(std::string_view response) {
  Plan plan;
  std::size_t pos = 0;
  while (true) {
    const auto open = response.find("<step>", pos);
    if (open == std::string_view::npos) break;
    const auto begin = open + 6;
    const auto close = response.find("</step>", begin);
    if (close == std::string_view::npos) break;
    const auto step = trim(response.substr(begin, close - begin));
    if (!step.empty()) plan.steps.emplace_back(step);
    pos = close + 7;
  }
  if (plan.steps.empty()) {
    throw Error(ErrorCode::kNoStepsFound, "planner response contains no <step> tags");
  }
  return plan;
}

ReasonerTurn parse_reasoner_output(std::string_view response) {
  const auto action = tag_content(response, "action");
  if (!action) {
    throw Error(ErrorCode::kMalformedReasonerOutput, "missing <action> tag");
  }
  ReasonerTurn turn;
  turn.reasoning = std::string(trim(tag_content(response, "reasoning").value_or("")));
  turn.directive = std::string(trim(*action));
  if (turn.directive.empty()) {
    throw Error(ErrorCode::kMalformedReasonerOutput, "empty <action> tag");
  }
  if (std::string_view(turn.directive).substr(0, kFinishedSentinel.size()) ==
      kFinishedSentinel) {
    std::string_view rest = std::string_view(turn.directive).substr(kFinishedSentinel.size());
    while (!rest.empty() && (std::isspace(static_cast<unsigned char>(rest.front())) ||
                             rest.front() == '+' || rest.front() == ':' ||
                             rest.front() == '-')) {
      rest.remove_prefix(1);
    }
    rest = trim(rest);
    if (rest.empty()) {
      throw Error(ErrorCode::kMalformedReasonerOutput, "FINISHED without a final response");
    }
    turn.finished = true;
    turn.final_answer = std::string(rest);
  }
  return turn;
}

ProgressVerdict parse_verdict(std::string_view response) {
  std::optional<Outcome> outcome;
  bool complete = false;
  std::string why;
  std::size_t start = 0;
  while (start <= response.size()) {
    auto end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    const auto line = trim(response.substr(start, end - start));
    start = end + 1;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const auto value = trim(line.substr(colon + 1));
    if (key == "outcome" && !outcome) {
      std::string word;
      for (char c : value) {
        if (!std::isalpha(static_cast<unsigned char>(c))) break;
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      outcome = outcome_from_string(word);
    } else if (key == "complete") {
      const std::string v = lower(value);
      complete = v.rfind("yes", 0) == 0 || v.rfind("true", 0) == 0;
    } else if (key == "why" && why.empty()) {
      why = std::string(value);
    }
  }
  if (!outcome) {
    return ProgressVerdict{Outcome::kStalled, std::string(kUnparseableVerdict), false};
  }
  ProgressVerdict verdict{*outcome, why, complete};
  // A completed task has by definition advanced.
  if (verdict.task_complete) verdict.outcome = Outcome::kAdvanced;
  return verdict;
}

Plan plan(const Task& task, const ModelRole& role) {
  const ChatResponse response = complete(*role.backend, build_plan_request(task, role));
  Plan result = parse_plan(response.text);
  result.revision = 0;
  return result;
}

ReasonerTurn reason(const Plan& plan, const EpisodicMemory& memory,
                    const Screenshot& screenshot, const ModelRole& role) {
  ChatRequest request = build_reason_request(plan, memory, screenshot, role);
  try {
    return parse_reasoner_output(complete(*role.backend, request).text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMalformedReasonerOutput) throw;
    append_retry_note(request, e.what(),
                      "Reply again with one <reasoning> tag and one <action> tag.");
  }
  return parse_reasoner_output(complete(*role.backend, request).text);
}

ModelTurn ground(std::string_view directive, const Screenshot& screenshot,
                 std::string_view action_history, const ModelRole& role) {
  ChatRequest request = build_ground_request(directive, screenshot, action_history, role);
  auto is_grammar_error = [](ErrorCode code) {
    switch (code) {
      case ErrorCode::kMalformedOutput:
      case ErrorCode::kUnknownAction:
      case ErrorCode::kBadArguments:
      case ErrorCode::kTooManyHotkeys:
      case ErrorCode::kBadDirection:
        return true;
      default:
        return false;
    }
  };
  try {
    return parse_model_output(complete(*role.backend, request).text);
  } catch (const Error& e) {
    if (!is_grammar_error(e.code())) throw;
    append_retry_note(request, e.what(),
                      "Reply again with a Thought line and one Action from the action space.");
  }
  return parse_model_output(complete(*role.backend, request).text);
}

ProgressVerdict verify(const Screenshot& before, const Screenshot& after,
                       std::string_view directive, const Plan& plan, const Task& task,
                       const ModelRole& role) {
  const ChatResponse response = complete(
      *role.backend, build_verify_request(before, after, directive, plan, task, role));
  return parse_verdict(response.text);
}

Plan update_plan(const Plan& plan, const EpisodicMemory& memory, const Task& task,
                 const TaskState& state, const ModelRole& role) {
  // Any failure keeps the current plan; the loop guard and step limit bound
  // runs whose planner keeps failing.
  try {
    const ChatResponse response =
        complete(*role.backend, build_replan_request(plan, memory, task, state, role));
    Plan revised = parse_plan(response.text);
    revised.revision = plan.revision + 1;
    return revised;
  } catch (const Error&) {
    return plan;
  }
}

}  // namespace websight
