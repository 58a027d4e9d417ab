#include "websight/trajectory.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "websight/error.hpp"

namespace websight {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

bool is_hex(const std::string& s, std::size_t length) {
  return s.size() == length &&
         s.find_first_not_of("0123456789abcdef") == std::string::npos;
}

ActionCommand in_pixel_space(ActionCommand command) {
  auto fix = [](Point& p) { p.space = CoordSpace::kPixel; };
  std::visit(
      [&](auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::Drag>) {
          fix(a.start);
          fix(a.end);
        } else if constexpr (requires { a.point; }) {
          fix(a.point);
        }
      },
      command.variant);
  return command;
}

json optional_text(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

TaskState state_from_json(const json& value) {
  TaskState state;
  state.status = *status_from_string(value.at("status").get<std::string>());
  state.step_index = value.at("step_index").get<int>();
  if (value.at("answer").is_string()) state.answer = value["answer"].get<std::string>();
  return state;
}

json plan_line(const Plan& plan) {
  return {{"type", "plan"}, {"revision", plan.revision}, {"steps", plan.steps}};
}

json step_line(const StepRecord& step) {
  const MemoryEntry& e = step.entry;
  return {{"type", "step"},
          {"step_index", e.step_index},
          {"plan_revision", step.plan_revision},
          {"reasoning", step.reasoning},
          {"directive", step.directive},
          {"thought", step.thought},
          {"action", serialize_action(e.action)},
          {"executed_action", serialize_action(step.executed)},
          {"outcome", {{"kind", to_string(step.outcome.kind)}, {"detail", step.outcome.detail}}},
          {"verdict",
           {{"outcome", to_string(e.verdict.outcome)},
            {"rationale", e.verdict.rationale},
            {"task_complete", e.verdict.task_complete}}},
          {"state_before", state_to_json(e.state_before)},
          {"state_after", state_to_json(e.state_after)},
          {"screenshot_before", e.screenshot_ref_before},
          {"screenshot_after", e.screenshot_ref_after},
          {"url_before", step.url_before},
          {"url_after", step.url_after},
          {"fingerprint_after", hex64(e.fingerprint_after)}};
}

// Collects schema violations for one line.
class LineChecker {
 public:
  LineChecker(std::vector<std::string>& problems, int line) : problems_(problems), line_(line) {}

  void fail(const std::string& message) {
    problems_.push_back("line " + std::to_string(line_) + ": " + message);
  }

  const json* field(const json& object, const std::string& key, json::value_t type,
                    bool nullable = false) {
    if (!object.is_object() || !object.contains(key)) {
      fail("missing field '" + key + "'");
      return nullptr;
    }
    const json& value = object[key];
    if (nullable && value.is_null()) return &value;
    const bool ok = type == json::value_t::number_integer
                        ? value.is_number_integer()
                        : type == json::value_t::number_float ? value.is_number()
                                                              : value.type() == type;
    if (!ok) {
      fail("field '" + key + "' has type " + value.type_name());
      return nullptr;
    }
    return &value;
  }

  void text(const json& o, const std::string& key) { field(o, key, json::value_t::string); }

  template <typename Parse>
  void enumeration(const json& o, const std::string& key, Parse parse, bool nullable = false) {
    if (const json* v = field(o, key, json::value_t::string, nullable); v && v->is_string()) {
      if (!parse(v->get<std::string>())) fail("field '" + key + "' has unknown value");
    }
  }

  void action(const json& o, const std::string& key) {
    if (const json* v = field(o, key, json::value_t::string)) {
      try {
        parse_action(v->get<std::string>());
      } catch (const Error& e) {
        fail("field '" + key + "' is not a grammar action: " + e.what());
      }
    }
  }

  void state(const json& o, const std::string& key) {
    const json* s = field(o, key, json::value_t::object);
    if (!s) return;
    enumeration(*s, "status", status_from_string);
    field(*s, "step_index", json::value_t::number_integer);
    const json* answer = field(*s, "answer", json::value_t::string, true);
    if (answer && s->contains("status") && (*s)["status"].is_string()) {
      const bool complete = (*s)["status"] == "complete";
      const bool answered = answer->is_string() && !answer->get<std::string>().empty();
      if (complete != answered) fail("'" + key + "': answer must be present iff complete");
    }
  }

 private:
  std::vector<std::string>& problems_;
  int line_;
};

void check_header(const json& line, LineChecker& check) {
  if (const json* v = check.field(line, "schema_version", json::value_t::number_integer)) {
    if (*v != kTrajectorySchemaVersion) check.fail("unsupported schema_version");
  }
  if (const json* task = check.field(line, "task", json::value_t::object)) {
    check.text(*task, "id");
    check.text(*task, "instruction");
    check.field(*task, "start_url", json::value_t::string, true);
    check.field(*task, "deadline_seconds", json::value_t::number_integer);
  }
  check.field(line, "config", json::value_t::object);
}

void check_plan(const json& line, LineChecker& check) {
  check.field(line, "revision", json::value_t::number_integer);
  if (const json* steps = check.field(line, "steps", json::value_t::array)) {
    for (const auto& s : *steps) {
      if (!s.is_string()) check.fail("plan steps must be strings");
    }
  }
}

void check_step(const json& line, LineChecker& check) {
  check.field(line, "step_index", json::value_t::number_integer);
  check.field(line, "plan_revision", json::value_t::number_integer);
  for (const char* key : {"reasoning", "directive", "thought", "url_before", "url_after"}) {
    check.text(line, key);
  }
  check.action(line, "action");
  check.action(line, "executed_action");
  if (const json* o = check.field(line, "outcome", json::value_t::object)) {
    check.enumeration(*o, "kind", outcome_kind_from_string);
    check.text(*o, "detail");
  }
  if (const json* v = check.field(line, "verdict", json::value_t::object)) {
    check.enumeration(*v, "outcome", outcome_from_string);
    check.text(*v, "rationale");
    check.field(*v, "task_complete", json::value_t::boolean);
  }
  check.state(line, "state_before");
  check.state(line, "state_after");
  for (const char* key : {"screenshot_before", "screenshot_after"}) {
    if (const json* v = check.field(line, key, json::value_t::string)) {
      if (!is_hex(v->get<std::string>(), 64)) check.fail(std::string(key) + " is not a sha256 ref");
    }
  }
  if (const json* v = check.field(line, "fingerprint_after", json::value_t::string)) {
    if (!is_hex(v->get<std::string>(), 16)) check.fail("fingerprint_after is not 16 hex digits");
  }
}

void check_footer(const json& line, LineChecker& check) {
  check.state(line, "final_state");
  if (const json* v = check.field(line, "wall_seconds", json::value_t::number_float)) {
    if (v->get<double>() < 0) check.fail("wall_seconds is negative");
  }
  check.enumeration(line, "failure_attribution", component_from_string, true);
  check.text(line, "failure_detail");
  check.field(line, "step_count", json::value_t::number_integer);
  check.field(line, "plan_count", json::value_t::number_integer);
}

std::vector<json> split_lines(std::string_view jsonl, std::vector<std::string>& problems) {
  std::vector<json> lines;
  std::size_t start = 0;
  int number = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view text = jsonl.substr(start, end - start);
    ++number;
    if (!text.empty()) {
      json value = json::parse(text, nullptr, false);
      if (value.is_discarded() || !value.is_object()) {
        problems.push_back("line " + std::to_string(number) + ": not a JSON object");
        value = json::object();
      }
      lines.push_back(std::move(value));
    }
    start = end + 1;
  }
  return lines;
}

}  // namespace

json task_to_json(const Task& task) {
  return {{"id", task.id},
          {"instruction", task.instruction},
          {"start_url", optional_text(task.start_url)},
          {"deadline_seconds", task.deadline_seconds}};
}

Task task_from_json(const json& value) {
  Task task;
  task.id = value.at("id").get<std::string>();
  task.instruction = value.at("instruction").get<std::string>();
  if (value.contains("start_url") && value["start_url"].is_string()) {
    task.start_url = value["start_url"].get<std::string>();
  }
  task.deadline_seconds = value.value("deadline_seconds", 600);
  return task;
}

json state_to_json(const TaskState& state) {
  return {{"status", to_string(state.status)},
          {"step_index", state.step_index},
          {"answer", optional_text(state.answer)}};
}

std::vector<json> trajectory_lines(const TrajectoryRecord& record) {
  std::vector<json> lines;
  lines.push_back({{"type", "header"},
                   {"schema_version", kTrajectorySchemaVersion},
                   {"task", task_to_json(record.task)},
                   {"config", record.config.is_object() ? record.config : json::object()}});
  // A plan line precedes the first step chosen under it.
  std::size_t next_plan = 0;
  auto emit_plans_up_to = [&](int revision) {
    while (next_plan < record.plans.size() && record.plans[next_plan].revision <= revision) {
      lines.push_back(plan_line(record.plans[next_plan++]));
    }
  };
  for (const auto& step : record.steps) {
    emit_plans_up_to(step.plan_revision);
    lines.push_back(step_line(step));
  }
  emit_plans_up_to(std::numeric_limits<int>::max());
  lines.push_back({{"type", "footer"},
                   {"final_state", state_to_json(record.final_state)},
                   {"wall_seconds", record.wall_seconds},
                   {"failure_attribution", record.failure_attribution
                                               ? json(to_string(*record.failure_attribution))
                                               : json(nullptr)},
                   {"failure_detail", record.failure_detail},
                   {"step_count", record.steps.size()},
                   {"plan_count", record.plans.size()}});
  return lines;
}

std::string to_jsonl(const TrajectoryRecord& record) {
  std::string out;
  for (const auto& line : trajectory_lines(record)) {
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_trajectory(const TrajectoryRecord& record, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  write_file(path, to_jsonl(record));
}

std::vector<std::string> validate_trajectory(std::string_view jsonl) {
  std::vector<std::string> problems;
  const std::vector<json> lines = split_lines(jsonl, problems);
  if (lines.empty()) {
    problems.push_back("empty trajectory");
    return problems;
  }
  int steps = 0;
  int plans = 0;
  int last_step = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    LineChecker check(problems, static_cast<int>(i) + 1);
    const json& line = lines[i];
    const std::string type = line.value("type", "");
    const bool first = i == 0;
    const bool last = i + 1 == lines.size();
    if (first != (type == "header")) check.fail("the header must be exactly the first line");
    if (last != (type == "footer")) {
      check.fail(last ? "trajectory is truncated: no footer" : "footer before the last line");
    }
    if (type == "header") {
      check_header(line, check);
    } else if (type == "plan") {
      check_plan(line, check);
      if (line.value("revision", -1) != plans) check.fail("plan revisions must count up from 0");
      ++plans;
    } else if (type == "step") {
      check_step(line, check);
      ++steps;
      if (line.value("step_index", 0) != last_step + 1) check.fail("step_index must count up from 1");
      last_step = line.value("step_index", 0);
      if (plans == 0) check.fail("step before any plan");
    } else if (type == "footer") {
      check_footer(line, check);
      if (line.value("step_count", -1) != steps) check.fail("step_count disagrees with step lines");
      if (line.value("plan_count", -1) != plans) check.fail("plan_count disagrees with plan lines");
    } else {
      check.fail("unknown line type '" + type + "'");
    }
  }
  return problems;
}

TrajectoryRecord parse_trajectory(std::string_view jsonl) {
  const auto problems = validate_trajectory(jsonl);
  if (!problems.empty()) {
    std::string message = problems.front();
    if (problems.size() > 1) message += " (+" + std::to_string(problems.size() - 1) + " more)";
    throw Error(ErrorCode::kMalformedTrajectory, message);
  }
  std::vector<std::string> ignored;
  TrajectoryRecord record;
  for (const json& line : split_lines(jsonl, ignored)) {
    const std::string type = line["type"].get<std::string>();
    if (type == "header") {
      record.task = task_from_json(line["task"]);
      record.config = line["config"];
    } else if (type == "plan") {
      record.plans.push_back({line["steps"].get<std::vector<std::string>>(),
                              line["revision"].get<int>()});
    } else if (type == "step") {
      StepRecord step;
      MemoryEntry& e = step.entry;
      e.step_index = line["step_index"].get<int>();
      e.action = parse_action(line["action"].get<std::string>());
      e.delta_summary = line["verdict"]["rationale"].get<std::string>();
      e.state_before = state_from_json(line["state_before"]);
      e.state_after = state_from_json(line["state_after"]);
      e.verdict = {*outcome_from_string(line["verdict"]["outcome"].get<std::string>()),
                   line["verdict"]["rationale"].get<std::string>(),
                   line["verdict"]["task_complete"].get<bool>()};
      e.screenshot_ref_before = line["screenshot_before"].get<std::string>();
      e.screenshot_ref_after = line["screenshot_after"].get<std::string>();
      e.fingerprint_after = std::stoull(line["fingerprint_after"].get<std::string>(), nullptr, 16);
      step.executed = in_pixel_space(parse_action(line["executed_action"].get<std::string>()));
      step.reasoning = line["reasoning"].get<std::string>();
      step.directive = line["directive"].get<std::string>();
      step.thought = line["thought"].get<std::string>();
      step.outcome = {*outcome_kind_from_string(line["outcome"]["kind"].get<std::string>()),
                      line["outcome"]["detail"].get<std::string>()};
      step.url_before = line["url_before"].get<std::string>();
      step.url_after = line["url_after"].get<std::string>();
      step.plan_revision = line["plan_revision"].get<int>();
      record.steps.push_back(std::move(step));
    } else if (type == "footer") {
      record.final_state = state_from_json(line["final_state"]);
      record.wall_seconds = line["wall_seconds"].get<double>();
      if (line["failure_attribution"].is_string()) {
        record.failure_attribution =
            component_from_string(line["failure_attribution"].get<std::string>());
      }
      record.failure_detail = line["failure_detail"].get<std::string>();
    }
  }
  return record;
}

TrajectoryRecord read_trajectory(const std::string& path) {
  return parse_trajectory(read_file(path));
}

}  // namespace websight
