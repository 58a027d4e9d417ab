#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "websight/browser_env.hpp"
#include "websight/error.hpp"

namespace websight {
namespace {

constexpr int kTitleBarHeight = 40;

cv::Scalar label_color(std::string_view label) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : label) h = (h ^ c) * 16777619u;
  // Pastel BGR so black text stays legible.
  return cv::Scalar(140 + (h & 0x5F), 140 + ((h >> 8) & 0x5F), 140 + ((h >> 16) & 0x5F));
}

void draw_text(cv::Mat& canvas, const std::string& text, cv::Point origin, double scale,
               cv::Scalar color) {
  cv::putText(canvas, text, origin, cv::FONT_HERSHEY_SIMPLEX, scale, color, 1, cv::LINE_8);
}

void draw_centered(cv::Mat& canvas, const std::string& text, const cv::Rect& box,
                   cv::Scalar color) {
  int baseline = 0;
  const double scale = 0.5;
  const cv::Size size = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, scale, 1, &baseline);
  const cv::Point origin(box.x + (box.width - size.width) / 2,
                         box.y + (box.height + size.height) / 2);
  draw_text(canvas, text, origin, scale, color);
}

}  // namespace

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kOk: return "ok";
    case OutcomeKind::kNoEffect: return "no_effect";
    case OutcomeKind::kError: return "error";
  }
  return "error";
}

std::optional<OutcomeKind> outcome_kind_from_string(std::string_view text) {
  if (text == "ok") return OutcomeKind::kOk;
  if (text == "no_effect") return OutcomeKind::kNoEffect;
  if (text == "error") return OutcomeKind::kError;
  return std::nullopt;
}

void check_pixel_action(const ActionCommand& command, Extent viewport) {
  for (const Point& p : command.points()) {
    if (p.space != CoordSpace::kPixel) {
      throw Error(ErrorCode::kSpaceMismatch, "execute expects pixel-space points");
    }
    if (p.x < 0 || p.y < 0 || p.x >= viewport.width || p.y >= viewport.height) {
      throw Error(ErrorCode::kPointOutOfViewport,
                  "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") outside " + std::to_string(viewport.width) + "x" +
                      std::to_string(viewport.height) + " viewport");
    }
  }
}

SimulatedEnvironment::SimulatedEnvironment(PageGraph graph, EnvSettings settings, Clock& clock)
    : graph_(std::move(graph)), settings_(settings), clock_(clock) {
  if (!graph_.find(graph_.start_page)) {
    throw Error(ErrorCode::kBadPageGraph, "start page missing");
  }
  settings_.viewport = graph_.viewport;
  history_.push_back(graph_.start_page);
}

void SimulatedEnvironment::ensure_open() const {
  if (closed_) throw Error(ErrorCode::kSessionClosed, "simulated session closed");
}

const Page& SimulatedEnvironment::page() const { return *graph_.find(history_.back()); }

SimulatedEnvironment::PageState& SimulatedEnvironment::state() {
  PageState& s = states_[history_.back()];
  s.field_values.resize(page().text_fields.size());
  return s;
}

Point SimulatedEnvironment::scroll_offset() const {
  auto it = states_.find(history_.back());
  if (it == states_.end()) return {0, 0, CoordSpace::kPixel};
  return {it->second.scroll_x, it->second.scroll_y, CoordSpace::kPixel};
}

void SimulatedEnvironment::go_to(const std::string& page_id) {
  history_.push_back(page_id);
  focused_field_.reset();
}

Screenshot SimulatedEnvironment::screenshot() {
  ensure_open();
  Screenshot shot;
  shot.encoded = render();
  shot.width = graph_.viewport.width;
  shot.height = graph_.viewport.height;
  shot.captured_at = std::chrono::system_clock::now();
  shot.url = page().url;
  return shot;
}

std::string SimulatedEnvironment::render() const {
  const Page& p = page();
  const Point offset = scroll_offset();
  const auto values_it = states_.find(p.id);

  cv::Mat canvas(graph_.viewport.height, graph_.viewport.width, CV_8UC3,
                 cv::Scalar(255, 255, 255));
  auto to_view = [&](const Rect& r) {
    return cv::Rect(r.x1 - offset.x, r.y1 - offset.y, r.x2 - r.x1 + 1,
                    r.y2 - r.y1 + 1);
  };

  for (const auto& h : p.hotspots) {
    const cv::Rect box = to_view(h.rect);
    cv::rectangle(canvas, box, label_color(h.label), cv::FILLED);
    cv::rectangle(canvas, box, cv::Scalar(60, 60, 60), 1);
    draw_centered(canvas, h.label, box, cv::Scalar(0, 0, 0));
  }
  for (std::size_t i = 0; i < p.text_fields.size(); ++i) {
    const auto& f = p.text_fields[i];
    const cv::Rect box = to_view(f.rect);
    const bool focused = focused_field_ == i;
    cv::rectangle(canvas, box, cv::Scalar(255, 255, 255), cv::FILLED);
    cv::rectangle(canvas, box, focused ? cv::Scalar(200, 120, 0) : cv::Scalar(90, 90, 90),
                  focused ? 2 : 1);
    std::string value;
    if (values_it != states_.end() && i < values_it->second.field_values.size()) {
      value = values_it->second.field_values[i];
    }
    if (value.empty()) {
      draw_centered(canvas, f.label, box, cv::Scalar(150, 150, 150));
    } else {
      draw_centered(canvas, value, box, cv::Scalar(0, 0, 0));
    }
  }

  // Title bar stays fixed while content scrolls under it.
  cv::rectangle(canvas, cv::Rect(0, 0, graph_.viewport.width, kTitleBarHeight),
                cv::Scalar(235, 235, 235), cv::FILLED);
  draw_text(canvas, p.title + "  " + p.url, cv::Point(10, 26), 0.6, cv::Scalar(30, 30, 30));
  if (offset.x != 0 || offset.y != 0) {
    // Scroll indicator so scrolling changes pixels even on sparse pages.
    const int track = graph_.viewport.height - kTitleBarHeight;
    const int span = std::max(1, p.content.height - graph_.viewport.height);
    const int y = kTitleBarHeight + (track - 20) * offset.y / span;
    cv::rectangle(canvas, cv::Rect(graph_.viewport.width - 8, y, 6, 20),
                  cv::Scalar(120, 120, 120), cv::FILLED);
  }

  std::vector<unsigned char> png;
  cv::imencode(".png", canvas, png, {cv::IMWRITE_PNG_COMPRESSION, 3});
  return std::string(png.begin(), png.end());
}

ExecutionOutcome SimulatedEnvironment::click(Point p) {
  const Page& pg = page();
  const Point offset = scroll_offset();
  const int x = p.x + offset.x;
  const int y = p.y + offset.y;
  for (const auto& h : pg.hotspots) {
    if (h.rect.contains(x, y)) {
      go_to(h.next_page_id);
      return ExecutionOutcome::ok();
    }
  }
  for (std::size_t i = 0; i < pg.text_fields.size(); ++i) {
    if (pg.text_fields[i].rect.contains(x, y)) {
      if (focused_field_ == i) return ExecutionOutcome::no_effect("field already focused");
      focused_field_ = i;
      return ExecutionOutcome::ok();
    }
  }
  return ExecutionOutcome::no_effect("click hit no hotspot");
}

ExecutionOutcome SimulatedEnvironment::type(const std::string& text) {
  if (!focused_field_) return ExecutionOutcome::no_effect("no focused field");
  const std::size_t index = *focused_field_;
  const TextField field = page().text_fields[index];
  std::string body = text;
  const bool submit = !body.empty() && body.back() == '\n';
  if (submit) body.pop_back();
  body.erase(std::remove(body.begin(), body.end(), '\n'), body.end());
  state().field_values[index] += body;
  if (submit && field.submit_page_id) {
    go_to(*field.submit_page_id);
    return ExecutionOutcome::ok();
  }
  return body.empty() ? ExecutionOutcome::no_effect("nothing typed") : ExecutionOutcome::ok();
}

ExecutionOutcome SimulatedEnvironment::scroll(Point, ScrollDirection direction) {
  const Page& pg = page();
  PageState& s = state();
  const int step_y = static_cast<int>(std::lround(settings_.scroll_fraction * graph_.viewport.height));
  const int step_x = static_cast<int>(std::lround(settings_.scroll_fraction * graph_.viewport.width));
  const int max_x = pg.content.width - graph_.viewport.width;
  const int max_y = pg.content.height - graph_.viewport.height;
  const int old_x = s.scroll_x;
  const int old_y = s.scroll_y;
  switch (direction) {
    case ScrollDirection::kUp: s.scroll_y = std::max(0, s.scroll_y - step_y); break;
    case ScrollDirection::kDown: s.scroll_y = std::min(max_y, s.scroll_y + step_y); break;
    case ScrollDirection::kLeft: s.scroll_x = std::max(0, s.scroll_x - step_x); break;
    case ScrollDirection::kRight: s.scroll_x = std::min(max_x, s.scroll_x + step_x); break;
  }
  if (s.scroll_x == old_x && s.scroll_y == old_y) {
    return ExecutionOutcome::no_effect("already at scroll limit");
  }
  return ExecutionOutcome::ok();
}

ExecutionOutcome SimulatedEnvironment::hotkey(const std::vector<std::string>& keys) {
  if (keys == std::vector<std::string>{"alt", "left"}) return back();
  if ((keys == std::vector<std::string>{"enter"} || keys == std::vector<std::string>{"return"}) &&
      focused_field_) {
    return type("\n");
  }
  return ExecutionOutcome::no_effect("hotkey has no binding");
}

ExecutionOutcome SimulatedEnvironment::execute(const ActionCommand& command) {
  ensure_open();
  check_pixel_action(command, graph_.viewport);
  if (command.is<action::Click>()) return click(command.as<action::Click>().point);
  if (command.is<action::DoubleClick>()) return click(command.as<action::DoubleClick>().point);
  if (command.is<action::RightClick>()) {
    return ExecutionOutcome::no_effect("context menus are not simulated");
  }
  if (command.is<action::Drag>()) return ExecutionOutcome::no_effect("drag has no target");
  if (command.is<action::Hotkey>()) return hotkey(command.as<action::Hotkey>().keys);
  if (command.is<action::Type>()) return type(command.as<action::Type>().content);
  if (command.is<action::Scroll>()) {
    const auto& s = command.as<action::Scroll>();
    return scroll(s.point, s.direction);
  }
  if (command.is<action::Wait>()) {
    clock_.sleep_for(settings_.wait_duration);
    return ExecutionOutcome::ok();
  }
  if (command.is<action::Navigate>()) return navigate(command.as<action::Navigate>().url);
  return ExecutionOutcome::ok();  // Finished: handled by the orchestrator.
}

ExecutionOutcome SimulatedEnvironment::navigate(std::string_view url) {
  ensure_open();
  const Page* target = graph_.find_by_url(url);
  if (!target) {
    return ExecutionOutcome::error("NavigationFailure: no simulated page for " + std::string(url));
  }
  go_to(target->id);
  return ExecutionOutcome::ok();
}

ExecutionOutcome SimulatedEnvironment::back() {
  ensure_open();
  if (history_.size() < 2) return ExecutionOutcome::no_effect("history is empty");
  history_.pop_back();
  focused_field_.reset();
  return ExecutionOutcome::ok();
}

}  // namespace websight
