#include "websight/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <regex>

#include "websight/error.hpp"
#include "websight/trajectory.hpp"

namespace websight {

namespace fs = std::filesystem;

// --- ScreenshotStore ---------------------------------------------------------

ScreenshotStore::ScreenshotStore(std::string directory) : directory_(std::move(directory)) {
  if (!directory_.empty()) {
    std::error_code ec;
    fs::create_directories(directory_, ec);
    if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + directory_ + ": " + ec.message());
  }
}

ScreenshotStore::ScreenshotStore(ScreenshotStore&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  directory_ = std::move(other.directory_);
  images_ = std::move(other.images_);
}

std::string ScreenshotStore::file_name(const std::string& ref) {
  return "screenshots/" + ref + ".png";
}

std::string ScreenshotStore::put(const std::string& encoded) {
  std::string ref = sha256_hex(encoded);
  std::lock_guard lock(mutex_);
  if (images_.emplace(ref, encoded).second && !directory_.empty()) {
    const fs::path path = fs::path(directory_) / (ref + ".png");
    if (!fs::exists(path)) write_file(path.string(), encoded);
  }
  return ref;
}

std::optional<std::string> ScreenshotStore::get(const std::string& ref) const {
  std::lock_guard lock(mutex_);
  auto it = images_.find(ref);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

bool ScreenshotStore::contains(const std::string& ref) const {
  std::lock_guard lock(mutex_);
  return images_.count(ref) > 0;
}

std::size_t ScreenshotStore::size() const {
  std::lock_guard lock(mutex_);
  return images_.size();
}

ScreenshotStore ScreenshotStore::load(const std::string& directory) {
  ScreenshotStore store;
  store.directory_ = directory;
  std::error_code ec;
  for (const auto& item : fs::directory_iterator(directory, ec)) {
    if (item.path().extension() != ".png") continue;
    store.images_.emplace(item.path().stem().string(), read_file(item.path().string()));
  }
  return store;
}

// --- run_task ----------------------------------------------------------------

std::optional<std::string> navigation_target(std::string_view directive) {
  static const std::regex kPattern(R"(^\s*(?:navigate|go)\s+to\s+([a-z][a-z0-9+.-]*://\S+?)[.,;]?\s*$)",
                                   std::regex::icase);
  std::match_results<std::string_view::const_iterator> match;
  if (!std::regex_match(directive.begin(), directive.end(), match, kPattern)) return std::nullopt;
  return match[1].str();
}

namespace {

class Deadline {
 public:
  Deadline(Clock& clock, int seconds)
      : clock_(clock), start_(clock.now()), end_(start_ + std::chrono::seconds(seconds)) {}
  bool expired() const { return clock_.now() >= end_; }
  double elapsed() const { return seconds_between(start_, clock_.now()); }

 private:
  Clock& clock_;
  Clock::TimePoint start_;
  Clock::TimePoint end_;
};

// Thrown inside the loop to end the run as stuck with an attribution.
struct ComponentFailure {
  Component component;
  std::string detail;
};

template <typename F>
auto as_component(Component component, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw ComponentFailure{component, e.what()};
  } catch (const std::exception& e) {
    throw ComponentFailure{component, e.what()};
  }
}

class TaskRun {
 public:
  TaskRun(const Task& task, const RoleBackends& roles, Environment& env,
          const RunOptions& options)
      : task_(task),
        roles_(roles),
        env_(env),
        options_(options),
        clock_(options.clock ? *options.clock : system_clock()),
        store_(options.store ? *options.store : own_store_),
        memory_(options.memory_capacity),
        deadline_(clock_, task.deadline_seconds) {
    record_.task = task;
    record_.config = options.config_snapshot;
  }

  TrajectoryRecord run() {
    try {
      loop();
    } catch (const ComponentFailure& failure) {
      finish(TaskStatus::kStuck);
      record_.failure_attribution = failure.component;
      record_.failure_detail = failure.detail;
    } catch (const std::exception& e) {
      finish(TaskStatus::kStuck);
      record_.failure_detail = e.what();
    }
    record_.final_state = state_;
    record_.wall_seconds = deadline_.elapsed();
    if (options_.trajectory_path) write_trajectory(record_, *options_.trajectory_path);
    return record_;
  }

 private:
  void finish(TaskStatus status, std::optional<std::string> answer = std::nullopt) {
    if (state_.terminal()) return;
    state_.status = status;
    state_.answer = std::move(answer);
  }

  // Deadline gate in front of every model call after planning.
  bool out_of_time() {
    if (!deadline_.expired()) return false;
    finish(TaskStatus::kTimedOut);
    return true;
  }

  Screenshot capture() {
    return as_component(Component::kAction, [&] { return env_.screenshot(); });
  }

  void loop() {
    plan_ = as_component(Component::kPlanning, [&] { return websight::plan(task_, roles_.planner); });
    record_.plans.push_back(plan_);

    Screenshot current = capture();
    while (!state_.terminal()) {
      if (static_cast<int>(record_.steps.size()) >= options_.limits.max_steps) {
        finish(TaskStatus::kStepLimit);
        break;
      }
      if (out_of_time()) break;
      const ReasonerTurn turn = as_component(Component::kReasoning, [&] {
        return reason(plan_, memory_, current, roles_.reasoner);
      });
      if (turn.finished) {
        finish(TaskStatus::kComplete, turn.final_answer);
        break;
      }

      StepRecord step;
      step.reasoning = turn.reasoning;
      step.directive = turn.directive;
      step.plan_revision = plan_.revision;
      ActionCommand model_action;
      if (auto url = navigation_target(turn.directive)) {
        model_action.variant = action::Navigate{*url};
      } else {
        if (out_of_time()) break;
        const ModelTurn grounded = as_component(Component::kAction, [&] {
          return ground(turn.directive, current, grounder_history(), roles_.grounder);
        });
        step.thought = grounded.thought;
        model_action = grounded.action;
        if (model_action.is<action::Finished>()) {
          const std::string& content = model_action.as<action::Finished>().content;
          if (content == kStuckSentinel || content.empty()) {
            finish(TaskStatus::kStuck);
          } else {
            finish(TaskStatus::kComplete, content);
          }
          break;
        }
      }

      step.executed = as_component(Component::kAction, [&] {
        return scale_action(model_action, options_.model_extent, env_.viewport());
      });
      step.outcome = as_component(Component::kAction, [&] { return env_.execute(step.executed); });
      const Screenshot after = capture();

      ProgressVerdict verdict;
      const bool verified = !out_of_time();
      if (verified) {
        verdict = as_component(Component::kVerification, [&] {
          return verify(current, after, turn.directive, plan_, task_, roles_.verifier);
        });
      } else {
        verdict = {Outcome::kStalled, "deadline reached before verification", false};
      }

      TaskState next = state_;
      if (verdict.outcome == Outcome::kAdvanced) ++next.step_index;

      MemoryEntry& entry = step.entry;
      entry.step_index = static_cast<int>(record_.steps.size()) + 1;
      entry.action = model_action;
      entry.delta_summary = verdict.rationale;
      entry.state_before = state_;
      entry.state_after = next;
      entry.verdict = verdict;
      entry.screenshot_ref_before = store_.put(current.encoded);
      entry.screenshot_ref_after = store_.put(after.encoded);
      entry.fingerprint_after = state_fingerprint(after);
      step.url_before = current.url;
      step.url_after = after.url;
      memory_.append(entry);
      record_.steps.push_back(std::move(step));
      current = after;

      if (!verified) break;  // already timed out
      if (verdict.task_complete) {
        state_ = next;
        finish(TaskStatus::kComplete, final_answer(current, verdict));
        break;
      }
      if (verdict.outcome == Outcome::kAdvanced) {
        state_ = next;
      }
      if (detect_loop(memory_, options_.limits.loop_window, options_.limits.loop_threshold)) {
        finish(TaskStatus::kLoopDetected);
        break;
      }
      if (verdict.outcome != Outcome::kAdvanced) {
        if (out_of_time()) break;
        Plan revised = update_plan(plan_, memory_, task_, state_, roles_.planner);
        if (revised.revision != plan_.revision) {
          plan_ = std::move(revised);
          record_.plans.push_back(plan_);
        }
      }
    }
  }

  std::string grounder_history() const {
    return render_history(memory_, memory_.capacity());
  }

  // The verifier declared completion: ask the reasoner once for the answer.
  std::string final_answer(const Screenshot& current, const ProgressVerdict& verdict) {
    if (!deadline_.expired()) {
      try {
        const ReasonerTurn turn = reason(plan_, memory_, current, roles_.reasoner);
        if (turn.finished && turn.final_answer && !turn.final_answer->empty()) {
          return *turn.final_answer;
        }
      } catch (const Error&) {
        // Fall through to the verifier's own account.
      }
    }
    return verdict.rationale.empty() ? std::string("task complete") : verdict.rationale;
  }

  const Task& task_;
  const RoleBackends& roles_;
  Environment& env_;
  const RunOptions& options_;
  Clock& clock_;
  ScreenshotStore own_store_;
  ScreenshotStore& store_;
  EpisodicMemory memory_;
  Deadline deadline_;
  Plan plan_;
  TaskState state_;
  TrajectoryRecord record_;
};

}  // namespace

TrajectoryRecord run_task(const Task& task, const RoleBackends& roles, Environment& env,
                          const RunOptions& options) {
  return TaskRun(task, roles, env, options).run();
}

TrajectoryRecord run_task(const Task& task, const RoleBackends& roles,
                          const SessionConfig& session, const RunOptions& options) {
  Clock& clock = options.clock ? *options.clock : system_clock();
  std::unique_ptr<Environment> env;
  try {
    SessionConfig config = session;
    if (task.start_url) config.start_url = task.start_url;
    env = open_session(config, clock);
  } catch (const std::exception& e) {
    TrajectoryRecord record;
    record.task = task;
    record.config = options.config_snapshot;
    record.final_state.status = TaskStatus::kStuck;
    record.failure_attribution = Component::kAction;
    record.failure_detail = e.what();
    if (options.trajectory_path) write_trajectory(record, *options.trajectory_path);
    return record;
  }
  TrajectoryRecord record = run_task(task, roles, *env, options);
  env->close();
  return record;
}

// --- attribute_failure ---------------------------------------------------------

std::vector<std::string> quoted_labels(std::string_view text) {
  static const std::vector<std::pair<std::string, std::string>> kQuotes = {
      {"'", "'"}, {"\"", "\""}, {"\xE2\x80\x98", "\xE2\x80\x99"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}};
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const auto& [open, close] : kQuotes) {
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string_view::npos) {
      // An apostrophe inside a word ("don't") does not open a quote.
      if (open == "'" && pos > 0 && std::isalnum(static_cast<unsigned char>(text[pos - 1]))) {
        pos += 1;
        continue;
      }
      const std::size_t begin = pos + open.size();
      const std::size_t end = text.find(close, begin);
      if (end == std::string_view::npos) break;
      if (end > begin) found.emplace_back(pos, std::string(text.substr(begin, end - begin)));
      pos = end + close.size();
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> labels;
  for (auto& [pos, label] : found) labels.push_back(std::move(label));
  return labels;
}

namespace {

std::string fold(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool page_has_label(const Page& page, std::string_view label) {
  const std::string wanted = fold(label);
  if (wanted.empty()) return true;
  for (const auto& h : page.hotspots) {
    if (fold(h.label) == wanted) return true;
  }
  for (const auto& f : page.text_fields) {
    if (fold(f.label) == wanted) return true;
  }
  return false;
}

bool probe_says_visible(const ModelRole& probe, const Screenshot& shot, std::string_view label) {
  ChatRequest request = probe.request();
  ChatMessage message;
  message.text = "Is a UI element labelled \"" + std::string(label) +
                 "\" visible in this screenshot? Answer yes or no.";
  message.images.push_back({std::string(image_mime_type(shot.encoded)), shot.encoded});
  request.messages.push_back(std::move(message));
  const std::string reply = fold(complete(*probe.backend, request).text);
  return reply.rfind("yes", 0) == 0;
}

}  // namespace

Component attribute_failure(const TrajectoryRecord& record, const ScreenshotStore& store,
                            const AttributionProbes& probes) {
  if (record.final_state.status == TaskStatus::kComplete) {
    throw Error(ErrorCode::kInvalidArgument, "attribution applies to failed runs only");
  }
  for (const auto& step : record.steps) {
    for (const std::string* ref : {&step.entry.screenshot_ref_before, &step.entry.screenshot_ref_after}) {
      if (ref->empty() || !store.contains(*ref)) {
        throw Error(ErrorCode::kIncompleteRecord,
                    "step " + std::to_string(step.entry.step_index) + " lacks screenshot " + *ref);
      }
    }
  }

  const PageGraph* graph = probes.graph;
  if (graph) {
    // Planning: a plan step names an element that no reachable page offers.
    std::vector<const Page*> reachable;
    for (const auto& id : graph->reachable_from_start()) reachable.push_back(graph->find(id));
    for (const auto& plan : record.plans) {
      for (const auto& text : plan.steps) {
        for (const auto& label : quoted_labels(text)) {
          const bool offered = std::any_of(reachable.begin(), reachable.end(), [&](const Page* p) {
            return p && page_has_label(*p, label);
          });
          if (!offered) return Component::kPlanning;
        }
      }
    }
  }

  for (const auto& step : record.steps) {
    const Page* page = graph ? graph->find_by_url(step.url_before) : nullptr;
    // Reasoning: the directive names an element absent from the screen it saw.
    for (const auto& label : quoted_labels(step.directive)) {
      if (page && !page_has_label(*page, label)) return Component::kReasoning;
      if (!page && probes.element_probe) {
        Screenshot shot;
        shot.encoded = *store.get(step.entry.screenshot_ref_before);
        shot.url = step.url_before;
        try {
          if (!probe_says_visible(*probes.element_probe, shot, label)) return Component::kReasoning;
        } catch (const Error&) {
          // An unavailable probe gives no evidence either way.
        }
      }
    }
    // Action: a click landed on nothing actionable.
    const bool is_click = step.executed.is<action::Click>() ||
                          step.executed.is<action::DoubleClick>() ||
                          step.executed.is<action::RightClick>();
    if (is_click && step.outcome.kind == OutcomeKind::kNoEffect) return Component::kAction;
  }
  return Component::kVerification;
}

}  // namespace websight
