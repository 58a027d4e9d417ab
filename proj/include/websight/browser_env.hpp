#pragma once

// Execution surface for ActionCommands. Only pixels and the page URL cross this
// boundary; there is deliberately no DOM or accessibility access.

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "websight/action_grammar.hpp"
#include "websight/clock.hpp"
#include "websight/raster.hpp"

namespace websight {

inline constexpr Extent kDefaultViewport{1280, 800};

enum class OutcomeKind { kOk, kNoEffect, kError };

std::string_view to_string(OutcomeKind kind);
std::optional<OutcomeKind> outcome_kind_from_string(std::string_view text);

struct ExecutionOutcome {
  OutcomeKind kind = OutcomeKind::kOk;
  std::string detail;

  static ExecutionOutcome ok() { return {OutcomeKind::kOk, {}}; }
  static ExecutionOutcome no_effect(std::string detail = {}) {
    return {OutcomeKind::kNoEffect, std::move(detail)};
  }
  static ExecutionOutcome error(std::string detail) {
    return {OutcomeKind::kError, std::move(detail)};
  }
};

struct EnvSettings {
  Extent viewport = kDefaultViewport;
  // Scroll distance as a fraction of the viewport dimension along the axis.
  double scroll_fraction = 0.75;
  Clock::Duration wait_duration = std::chrono::seconds(5);
  Clock::Duration settle_cap = std::chrono::seconds(10);
  Clock::Duration settle_quiet = std::chrono::milliseconds(500);
  int drag_steps = 10;
  Clock::Duration drag_duration = std::chrono::milliseconds(300);
};

class Environment {
 public:
  virtual ~Environment() = default;

  // Viewport-only capture. Throws Error(kSessionClosed) after close().
  virtual Screenshot screenshot() = 0;

  // `action` must already be in pixel space and inside the viewport; otherwise
  // Error(kSpaceMismatch) / Error(kPointOutOfViewport).
  virtual ExecutionOutcome execute(const ActionCommand& action) = 0;

  // Failures are reported in the outcome, never thrown.
  virtual ExecutionOutcome navigate(std::string_view url) = 0;
  virtual ExecutionOutcome back() = 0;

  virtual Extent viewport() const = 0;
  virtual void close() = 0;
  virtual bool closed() const = 0;
};

// Shared precondition check for execute().
void check_pixel_action(const ActionCommand& action, Extent viewport);

// --- Simulated environment -------------------------------------------------

struct Rect {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  // Inclusive on all edges.
  bool contains(int x, int y) const { return x1 <= x && x <= x2 && y1 <= y && y <= y2; }
  Point center() const { return {(x1 + x2) / 2, (y1 + y2) / 2, CoordSpace::kPixel}; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Hotspot {
  Rect rect;
  std::string next_page_id;
  std::string label;
};

struct TextField {
  Rect rect;
  std::string label;
  // Page reached when text ending in a newline is typed into the field.
  std::optional<std::string> submit_page_id;
};

struct Page {
  std::string id;
  std::string url;  // defaults to sim://<id>
  std::string title;
  // Scrollable content size; at least the viewport.
  Extent content;
  std::vector<Hotspot> hotspots;
  std::vector<TextField> text_fields;
};

struct PageGraph {
  Extent viewport = kDefaultViewport;
  std::string start_page;
  std::map<std::string, Page> pages;

  const Page* find(std::string_view id) const;
  // Matches a page URL or a bare page id.
  const Page* find_by_url(std::string_view url) const;
  // Page ids reachable from start_page through hotspots and text-field submits.
  std::vector<std::string> reachable_from_start() const;
};

// Parses the declarative page-graph document (docs/page_graph.md).
// Throws Error(kBadPageGraph) on schema or referential problems.
PageGraph parse_page_graph(const nlohmann::json& document);
PageGraph load_page_graph(const std::string& path);
nlohmann::json page_graph_to_json(const PageGraph& graph);

// Deterministic state machine over a PageGraph with procedurally drawn pages.
class SimulatedEnvironment final : public Environment {
 public:
  SimulatedEnvironment(PageGraph graph, EnvSettings settings = {},
                       Clock& clock = system_clock());

  Screenshot screenshot() override;
  ExecutionOutcome execute(const ActionCommand& action) override;
  ExecutionOutcome navigate(std::string_view url) override;
  ExecutionOutcome back() override;
  Extent viewport() const override { return graph_.viewport; }
  void close() override { closed_ = true; }
  bool closed() const override { return closed_; }

  const std::string& current_page() const { return history_.back(); }
  const std::vector<std::string>& history() const { return history_; }
  Point scroll_offset() const;
  const PageGraph& graph() const { return graph_; }

 private:
  struct PageState {
    int scroll_x = 0;
    int scroll_y = 0;
    std::vector<std::string> field_values;
  };

  void ensure_open() const;
  const Page& page() const;
  PageState& state();
  void go_to(const std::string& page_id);
  ExecutionOutcome click(Point p);
  ExecutionOutcome type(const std::string& text);
  ExecutionOutcome scroll(Point p, ScrollDirection direction);
  ExecutionOutcome hotkey(const std::vector<std::string>& keys);
  std::string render() const;

  PageGraph graph_;
  EnvSettings settings_;
  Clock& clock_;
  std::vector<std::string> history_;
  std::map<std::string, PageState> states_;
  std::optional<std::size_t> focused_field_;
  bool closed_ = false;
};

// --- Session factory --------------------------------------------------------

struct SimulatedSessionConfig {
  PageGraph graph;
};

struct ChromeSessionConfig {
  // Path to a Chrome/Chromium binary. Empty means: $WEBSIGHT_CHROME, then
  // common install locations.
  std::string executable;
  std::vector<std::string> extra_args;
  // Connect to an already running browser instead of launching one,
  // e.g. "http://127.0.0.1:9222".
  std::string devtools_endpoint;
  std::chrono::seconds launch_timeout{30};
};

struct SessionConfig {
  EnvSettings settings;
  std::optional<std::string> start_url;
  std::optional<SimulatedSessionConfig> simulated;
  std::optional<ChromeSessionConfig> chrome;
};

// Throws Error(kLaunchFailure) or Error(kBadPageGraph).
std::unique_ptr<Environment> open_session(const SessionConfig& config,
                                          Clock& clock = system_clock());

}  // namespace websight
