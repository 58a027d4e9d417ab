#include "websight/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "websight/error.hpp"
#include "websight/prompts.hpp"

namespace websight {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs body(i) for i in [0, n) on up to `concurrency` threads.
template <typename Body>
void parallel_for(std::size_t n, int concurrency, Body body) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, concurrency)));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
}

bool is_click_action(const ActionCommand& a) {
  return a.is<action::Click>() || a.is<action::DoubleClick>() || a.is<action::RightClick>();
}

std::string fixed2(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << value;
  return out.str();
}

BBox parse_bbox(const json& value) {
  if (!value.is_array() || value.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "bbox must be [x1, y1, x2, y2]");
  }
  BBox b{value[0].get<int>(), value[1].get<int>(), value[2].get<int>(), value[3].get<int>()};
  if (b.x1 > b.x2 || b.y1 > b.y2 || b.x1 < 0 || b.y1 < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bbox corners out of order");
  }
  return b;
}

// Loads each distinct image once.
class ImageCache {
 public:
  std::shared_ptr<const Screenshot> get(const std::string& path) {
    std::lock_guard lock(mutex_);
    auto& slot = images_[path];
    if (!slot) {
      auto shot = std::make_shared<Screenshot>();
      shot->encoded = read_file(path);
      const Extent size = image_dimensions(shot->encoded);
      shot->width = size.width;
      shot->height = size.height;
      slot = std::move(shot);
    }
    return slot;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Screenshot>> images_;
};

SampleResult run_sample(const ClickSample& sample, const ModelRole& grounder,
                        const ShowdownOptions& options, ImageCache& images) {
  SampleResult result;
  result.id = sample.id;
  const auto shot = images.get(sample.image_ref);
  if (sample.bbox.x2 >= shot->width || sample.bbox.y2 >= shot->height) {
    throw Error(ErrorCode::kInvalidArgument, "bbox outside the image");
  }
  const ChatResponse response =
      complete(*grounder.backend, build_ground_request(sample.instruction, *shot, {}, grounder));
  result.latency_ms = response.latency_ms;
  ModelTurn turn;
  try {
    turn = parse_model_output(response.text);
  } catch (const Error& e) {
    result.note = std::string("unparseable: ") + e.what();
    return result;
  }
  result.action = serialize_action(turn.action);
  if (!is_click_action(turn.action)) {
    result.note = "wrong action: " + std::string(turn.action.name());
    return result;
  }
  const Point pixel = scale_point(turn.action.points().front(), options.model_extent, shot->extent());
  result.predicted = pixel;
  result.hit = score_click(sample, pixel);
  return result;
}

}  // namespace

bool score_click(const ClickSample& sample, Point predicted) {
  if (predicted.space != CoordSpace::kPixel) {
    throw Error(ErrorCode::kSpaceMismatch, "score_click expects a pixel-space point");
  }
  const BBox& b = sample.bbox;
  return b.x1 <= predicted.x && predicted.x <= b.x2 && b.y1 <= predicted.y && predicted.y <= b.y2;
}

double percent_2dp(long long part, long long whole) {
  if (whole <= 0) return 0.0;
  // Exact integer rounding of 10000 * part / whole, half away from zero.
  const long long scaled = (20000 * part + whole) / (2 * whole);
  return static_cast<double>(scaled) / 100.0;
}

LatencySummary summarize_latency(std::vector<double> samples_ms) {
  LatencySummary s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto n = samples_ms.size();
  s.mean = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
  s.mean = std::clamp(s.mean, samples_ms.front(), samples_ms.back());
  auto rank = [&](int percent) {
    const auto r = static_cast<std::size_t>((percent * n + 99) / 100);
    return samples_ms[std::max<std::size_t>(r, 1) - 1];
  };
  s.p50 = rank(50);
  s.p90 = rank(90);
  return s;
}

ShowdownReport run_showdown(const std::vector<ClickSample>& samples, const ModelRole& grounder,
                            const ShowdownOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples");
  ShowdownReport report;
  report.per_sample.resize(samples.size());
  std::vector<char> errored(samples.size(), 0);
  ImageCache images;
  parallel_for(samples.size(), options.concurrency, [&](std::size_t i) {
    try {
      report.per_sample[i] = run_sample(samples[i], grounder, options, images);
    } catch (const std::exception& e) {
      SampleResult failed;
      failed.id = samples[i].id;
      failed.note = std::string("error: ") + e.what();
      report.per_sample[i] = std::move(failed);
      errored[i] = 1;
    }
  });

  std::vector<double> latencies;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleResult& r = report.per_sample[i];
    ++report.total;
    if (r.hit) ++report.correct;
    if (errored[i]) {
      ++report.error_notes;
    } else {
      latencies.push_back(r.latency_ms);
    }
  }
  report.accuracy_percent = percent_2dp(report.correct, report.total);
  report.latency_ms = summarize_latency(std::move(latencies));
  return report;
}

std::string grounder_instruction(const ChatRequest& request) {
  static constexpr std::string_view kHeading = "## User Instruction\n";
  if (request.messages.empty()) return {};
  const std::string& text = request.messages.back().text;
  const auto start = text.rfind(kHeading);
  if (start == std::string::npos) return {};
  const auto begin = start + kHeading.size();
  const auto end = text.find("\n\n## Action History", begin);
  return text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

std::shared_ptr<Backend> oracle_grounder(const std::vector<ClickSample>& samples,
                                         Extent model_extent) {
  std::map<std::string, std::string> replies;
  for (const auto& s : samples) {
    const Extent image = image_dimensions(read_file(s.image_ref));
    const Point center{(s.bbox.x1 + s.bbox.x2) / 2, (s.bbox.y1 + s.bbox.y2) / 2, CoordSpace::kPixel};
    const Point target = to_model_space(center, model_extent, image);
    replies.emplace(s.instruction, "Thought: the target is visible.\nAction: " +
                                       serialize_action(ActionCommand{action::Click{target}}));
  }
  return std::make_shared<FunctionBackend>([replies](const ChatRequest& request) {
    auto it = replies.find(grounder_instruction(request));
    return it == replies.end() ? std::string("Thought: no match.\nAction: finished(content='STUCK')")
                               : it->second;
  });
}

// --- WebVoyager -------------------------------------------------------------

std::string normalize_answer(std::string_view text) {
  std::string collapsed;
  bool space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      space = !collapsed.empty();
      continue;
    }
    if (space) collapsed.push_back(' ');
    space = false;
    collapsed.push_back(static_cast<char>(std::tolower(c)));
  }
  auto is_edge_punct = [](unsigned char c) { return std::ispunct(c) && c != '$' && c != '%'; };
  std::size_t begin = 0;
  std::size_t end = collapsed.size();
  while (begin < end && is_edge_punct(collapsed[begin])) ++begin;
  while (end > begin && is_edge_punct(collapsed[end - 1])) --end;
  std::string out = collapsed.substr(begin, end - begin);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  return out;
}

bool judge_answer(const VoyagerTask& task, std::string_view answer, const Judge& judge) {
  if (normalize_answer(answer).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty answer");
  }
  if (task.reference_answer &&
      normalize_answer(*task.reference_answer) == normalize_answer(answer)) {
    return true;
  }
  if (!judge.backend) {
    if (task.reference_answer) return false;
    throw Error(ErrorCode::kJudgeUnavailable,
                "task " + task.task_id + " has no reference answer and no judge backend");
  }
  ChatRequest request = judge.backend->request();
  ChatMessage message;
  message.text = fill_template(prompts::judge(),
                               {{"question", task.question},
                                {"reference", task.reference_answer.value_or("(none)")},
                                {"answer", std::string(answer)}});
  request.messages.push_back(std::move(message));
  const std::string verdict = normalize_answer(complete(*judge.backend->backend, request).text);
  return verdict.rfind("yes", 0) == 0;
}

VoyagerReport run_webvoyager(const std::vector<VoyagerTask>& tasks, const TaskSetupFactory& setup,
                             const Judge& judge, const VoyagerOptions& options) {
  if (tasks.empty()) throw Error(ErrorCode::kInvalidArgument, "no tasks");
  VoyagerReport report;
  report.per_task.resize(tasks.size());
  std::vector<char> errored(tasks.size(), 0);

  parallel_for(tasks.size(), options.concurrency, [&](std::size_t i) {
    const VoyagerTask& vt = tasks[i];
    TaskResult& result = report.per_task[i];
    result.task_id = vt.task_id;
    result.web_name = vt.web_name;
    try {
      TaskSetup ts = setup(vt);
      auto own_store = std::make_shared<ScreenshotStore>();
      if (!ts.options.store) ts.options.store = own_store.get();
      Task task{vt.task_id, vt.question, vt.start_url, options.deadline_seconds};
      if (!vt.start_url.empty()) {
        const ExecutionOutcome opened = ts.env->navigate(vt.start_url);
        if (opened.kind == OutcomeKind::kError) throw Error(ErrorCode::kLaunchFailure, opened.detail);
      }
      const TrajectoryRecord record = run_task(task, ts.roles, *ts.env, ts.options);
      ts.env->close();
      result.status = record.final_state.status;
      result.answer = record.final_state.answer;
      result.wall_seconds = record.wall_seconds;
      result.steps = static_cast<int>(record.steps.size());
      result.attribution = record.failure_attribution;
      result.note = record.failure_detail;
      if (result.status == TaskStatus::kComplete) {
        try {
          result.judged_correct = judge_answer(vt, *result.answer, judge);
        } catch (const Error& e) {
          result.note = e.what();
          errored[i] = 1;
        }
      } else if (!result.attribution && ts.probes) {
        try {
          result.attribution = attribute_failure(record, *ts.options.store, *ts.probes);
        } catch (const Error& e) {
          result.note = e.what();
        }
      }
    } catch (const std::exception& e) {
      result.status = TaskStatus::kStuck;
      result.note = std::string("error: ") + e.what();
      errored[i] = 1;
    }
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskResult& r = report.per_task[i];
    ++report.total;
    ++report.status_histogram[std::string(to_string(r.status))];
    if (r.attribution) ++report.attribution_histogram[std::string(to_string(*r.attribution))];
    if (r.status == TaskStatus::kComplete) {
      ++report.answered;
      if (r.judged_correct) ++report.answered_correct;
    }
    if (errored[i]) ++report.error_notes;
  }
  report.success = report.answered_correct;
  report.success_percent = percent_2dp(report.success, report.total);
  if (report.answered > 0) {
    report.answered_accuracy_percent = percent_2dp(report.answered_correct, report.answered);
  }
  return report;
}

// --- Ingest ------------------------------------------------------------------

std::vector<ClickSample> load_showdown_samples(const std::string& path) {
  const std::string text = read_file(path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ClickSample> samples;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(number);
    try {
      const json record = json::parse(line);
      ClickSample s;
      s.id = record.contains("id") ? (record["id"].is_string() ? record["id"].get<std::string>()
                                                               : record["id"].dump())
                                   : std::to_string(number);
      s.instruction = record.at("instruction").get<std::string>();
      std::string image;
      for (const char* key : {"image", "image_path", "image_ref"}) {
        if (record.contains(key) && record[key].is_string()) {
          image = record[key].get<std::string>();
          break;
        }
      }
      if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "record has no image path");
      s.image_ref = fs::path(image).is_absolute() ? image : (base / image).string();
      if (record.contains("bbox")) {
        s.bbox = parse_bbox(record["bbox"]);
      } else {
        s.bbox = parse_bbox(json::array({record.at("x1"), record.at("y1"), record.at("x2"),
                                         record.at("y2")}));
      }
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, where + ": " + e.what());
    }
  }
  return samples;
}

std::vector<VoyagerTask> load_voyager_tasks(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<json> records;
  const json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_array()) {
    records.assign(whole.begin(), whole.end());
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded()) {
        throw Error(ErrorCode::kInvalidArgument, path + ": unparseable task record");
      }
      records.push_back(std::move(record));
    }
  }
  std::vector<VoyagerTask> tasks;
  for (const json& r : records) {
    try {
      VoyagerTask t;
      t.web_name = r.value("web_name", "");
      t.task_id = r.at("id").is_string() ? r["id"].get<std::string>() : r["id"].dump();
      t.question = r.at("ques").get<std::string>();
      t.start_url = r.at("web").get<std::string>();
      if (t.start_url.find("://") == std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "task " + t.task_id + ": malformed start URL");
      }
      for (const char* key : {"answer", "reference_answer"}) {
        if (r.contains(key) && r[key].is_string()) t.reference_answer = r[key].get<std::string>();
      }
      tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what());
    }
  }
  return tasks;
}

// --- Output ------------------------------------------------------------------

json to_json(const ShowdownReport& report) {
  json rows = json::array();
  for (const auto& r : report.per_sample) {
    rows.push_back({{"id", r.id},
                    {"predicted", r.predicted ? json::array({r.predicted->x, r.predicted->y})
                                              : json(nullptr)},
                    {"action", r.action},
                    {"hit", r.hit},
                    {"latency_ms", r.latency_ms},
                    {"note", r.note}});
  }
  return {{"benchmark", "showdown"},
          {"total", report.total},
          {"correct", report.correct},
          {"accuracy_percent", report.accuracy_percent},
          {"latency_ms",
           {{"mean", report.latency_ms.mean}, {"p50", report.latency_ms.p50}, {"p90", report.latency_ms.p90}}},
          {"error_notes", report.error_notes},
          {"per_sample", rows}};
}

json to_json(const VoyagerReport& report) {
  json rows = json::array();
  for (const auto& r : report.per_task) {
    rows.push_back({{"task_id", r.task_id},
                    {"web_name", r.web_name},
                    {"status", to_string(r.status)},
                    {"answer", r.answer ? json(*r.answer) : json(nullptr)},
                    {"judged_correct", r.judged_correct},
                    {"wall_seconds", r.wall_seconds},
                    {"steps", r.steps},
                    {"attribution", r.attribution ? json(to_string(*r.attribution)) : json(nullptr)},
                    {"note", r.note}});
  }
  return {{"benchmark", "webvoyager"},
          {"total", report.total},
          {"success", report.success},
          {"success_percent", report.success_percent},
          {"answered", report.answered},
          {"answered_correct", report.answered_correct},
          {"answered_accuracy_percent", report.answered_accuracy_percent
                                            ? json(*report.answered_accuracy_percent)
                                            : json(nullptr)},
          {"status_histogram", report.status_histogram},
          {"attribution_histogram", report.attribution_histogram},
          {"error_notes", report.error_notes},
          {"per_task", rows}};
}

std::string format_table(const ShowdownReport& report, std::string_view model_name) {
  std::ostringstream out;
  out << "| Model | Top-1 Accuracy (%) | Latency (ms) |\n"
      << "|---|---|---|\n"
      << "| " << model_name << " | " << fixed2(report.accuracy_percent) << " | "
      << fixed2(report.latency_ms.mean) << " |\n\n"
      << "samples " << report.total << ", correct " << report.correct << ", latency p50 "
      << fixed2(report.latency_ms.p50) << " ms, p90 " << fixed2(report.latency_ms.p90) << " ms";
  if (report.error_notes > 0) out << ", errors " << report.error_notes;
  out << "\n";
  return out.str();
}

std::string format_table(const VoyagerReport& report, std::string_view agent_name) {
  std::ostringstream out;
  out << "| Agent | Success Rate (%) |\n"
      << "|---|---|\n"
      << "| " << agent_name << " | " << fixed2(report.success_percent) << " |\n\n"
      << "tasks " << report.total << ", answered " << report.answered << ", answered correctly "
      << report.answered_correct;
  if (report.answered_accuracy_percent) {
    out << " (" << fixed2(*report.answered_accuracy_percent) << "%)";
  }
  out << "\nstatus:";
  for (const auto& [status, count] : report.status_histogram) out << " " << status << "=" << count;
  if (!report.attribution_histogram.empty()) {
    out << "\nattribution:";
    for (const auto& [component, count] : report.attribution_histogram) {
      out << " " << component << "=" << count;
    }
  }
  out << "\n";
  return out.str();
}

}  // namespace websight
