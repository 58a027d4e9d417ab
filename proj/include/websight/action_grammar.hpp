#pragma once

// The action language spoken by the grounding model:
//
//   Thought: <free text>
//   Action: click(point='<point>x y</point>')
//
// parse_* turn model text into typed commands, serialize_action produces the
// canonical byte form used in trajectory logs.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace websight {

enum class CoordSpace { kModel, kPixel };

struct Point {
  int x = 0;
  int y = 0;
  CoordSpace space = CoordSpace::kModel;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Extent {
  int width = 0;
  int height = 0;

  friend bool operator==(const Extent&, const Extent&) = default;
};

inline constexpr Extent kDefaultModelExtent{1000, 1000};

enum class ScrollDirection { kUp, kDown, kLeft, kRight };

std::string_view to_string(ScrollDirection direction);

namespace action {

struct Click {
  Point point;
  friend bool operator==(const Click&, const Click&) = default;
};
// Wire name `left_double`.
struct DoubleClick {
  Point point;
  friend bool operator==(const DoubleClick&, const DoubleClick&) = default;
};
// Wire name `right_single`.
struct RightClick {
  Point point;
  friend bool operator==(const RightClick&, const RightClick&) = default;
};
struct Drag {
  Point start;
  Point end;
  friend bool operator==(const Drag&, const Drag&) = default;
};
struct Hotkey {
  std::vector<std::string> keys;
  friend bool operator==(const Hotkey&, const Hotkey&) = default;
};
struct Type {
  std::string content;
  friend bool operator==(const Type&, const Type&) = default;
};
struct Scroll {
  Point point;
  ScrollDirection direction = ScrollDirection::kDown;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};
struct Wait {
  friend bool operator==(const Wait&, const Wait&) = default;
};
struct Finished {
  std::string content;
  friend bool operator==(const Finished&, const Finished&) = default;
};
// Engine-side extension, never advertised to the grounding model. Emitted by
// the orchestrator for "Navigate to <url>" reasoner directives.
struct Navigate {
  std::string url;
  friend bool operator==(const Navigate&, const Navigate&) = default;
};

}  // namespace action

using ActionVariant =
    std::variant<action::Click, action::DoubleClick, action::RightClick,
                 action::Drag, action::Hotkey, action::Type, action::Scroll,
                 action::Wait, action::Finished, action::Navigate>;

struct ActionCommand {
  ActionVariant variant;

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(variant);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(variant);
  }

  // Wire name of the action (`click`, `left_double`, ...).
  std::string_view name() const;

  // Points carried by the action, in declaration order.
  std::vector<Point> points() const;

  friend bool operator==(const ActionCommand&, const ActionCommand&) = default;
};

inline constexpr std::size_t kMaxHotkeys = 3;
inline constexpr std::string_view kStuckSentinel = "STUCK";

struct ModelTurn {
  std::string thought;
  ActionCommand action;
  std::string raw;
};

// Extracts the first Thought/Action pair from a raw model reply. Markdown code
// fences and surrounding whitespace are tolerated; a missing Thought yields an
// empty thought.
ModelTurn parse_model_output(std::string_view text);

// Parses one `name(arg='...', ...)` expression. Points come back in model
// space. Throws Error with kUnknownAction, kBadArguments, kTooManyHotkeys or
// kBadDirection.
ActionCommand parse_action(std::string_view text);

std::string serialize_action(const ActionCommand& action);

// Python-style string escaping used inside single-quoted arguments.
std::string escape_content(std::string_view raw);
std::string unescape_content(std::string_view escaped);

// Maps a model-space point onto the pixel grid of `viewport`, rounding half up
// and clamping into the viewport.
Point scale_point(Point p, Extent model_extent, Extent viewport);

// Rewrites every point of `action` with scale_point.
ActionCommand scale_action(const ActionCommand& action, Extent model_extent,
                           Extent viewport);

// Inverse direction (pixel -> model), same rounding and clamping rules.
Point to_model_space(Point p, Extent model_extent, Extent image);

}  // namespace websight
