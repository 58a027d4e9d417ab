#include "websight/action_grammar.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <utility>

#include "websight/error.hpp"

namespace websight {
namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

[[noreturn]] void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Raw argument values as they appear between the quotes (still escaped).
using RawArgs = std::map<std::string, std::string, std::less<>>;

struct Expression {
  std::string name;
  RawArgs args;
  std::size_t consumed = 0;
};

class ExpressionScanner {
 public:
  explicit ExpressionScanner(std::string_view text) : text_(text) {}

  Expression scan() {
    Expression expr;
    skip_ws();
    const std::size_t name_begin = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (pos_ == name_begin) {
      fail(ErrorCode::kMalformedOutput, "expected an action name");
    }
    expr.name = std::string(text_.substr(name_begin, pos_ - name_begin));
    name_ = expr.name;
    skip_ws();
    expect('(');
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      expr.consumed = pos_;
      return expr;
    }
    while (true) {
      skip_ws();
      const std::size_t key_begin = pos_;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      if (pos_ == key_begin) bad("expected an argument name");
      std::string key(text_.substr(key_begin, pos_ - key_begin));
      skip_ws();
      expect('=');
      skip_ws();
      std::string value = quoted();
      if (!expr.args.emplace(key, std::move(value)).second) {
        bad("duplicate argument '" + key + "'");
      }
      skip_ws();
      const char c = peek();
      if (c == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ')') {  // trailing comma
          ++pos_;
          break;
        }
        continue;
      }
      if (c == ')') {
        ++pos_;
        break;
      }
      bad("expected ',' or ')'");
    }
    expr.consumed = pos_;
    return expr;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) bad(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string quoted() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') bad("argument values must be quoted");
    ++pos_;
    const std::size_t begin = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (c == quote) {
        std::string value(text_.substr(begin, pos_ - begin));
        ++pos_;
        return value;
      }
      ++pos_;
    }
    bad("unterminated string");
  }

  [[noreturn]] void bad(const std::string& what) const {
    // Syntax errors after an unknown name still report the name problem.
    if (!name_.empty() && !known(name_)) {
      fail(ErrorCode::kUnknownAction, "unknown action '" + name_ + "'");
    }
    fail(ErrorCode::kBadArguments,
         what + " at offset " + std::to_string(pos_));
  }

  static bool known(std::string_view name);

  std::string_view text_;
  std::size_t pos_ = 0;
  std::string name_;
};

constexpr std::string_view kActionNames[] = {
    "click",  "left_double", "right_single", "drag",     "hotkey",
    "type",   "scroll",      "wait",         "finished", "navigate"};

bool ExpressionScanner::known(std::string_view name) {
  return std::find(std::begin(kActionNames), std::end(kActionNames), name) !=
         std::end(kActionNames);
}

std::optional<int> parse_coordinate(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.size() > 9) return std::nullopt;
  int value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

// Accepts `<point>x y</point>`, `(x,y)`, `[x, y]`, `x y` and `x,y`.
Point parse_point(std::string_view raw, std::string_view arg) {
  std::string_view s = trim(raw);
  auto strip = [&s](std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && s.substr(0, open.size()) == open &&
        s.substr(s.size() - close.size()) == close) {
      s = trim(s.substr(open.size(), s.size() - open.size() - close.size()));
    }
  };
  strip("<point>", "</point>");
  strip("(", ")");
  strip("[", "]");
  std::size_t split = s.find_first_of(", ");
  if (split == std::string_view::npos) {
    fail(ErrorCode::kBadArguments,
         "argument '" + std::string(arg) + "' is not a point");
  }
  std::string_view first = s.substr(0, split);
  std::string_view rest = s.substr(split);
  while (!rest.empty() && (rest.front() == ',' || is_space(rest.front()))) {
    rest.remove_prefix(1);
  }
  auto x = parse_coordinate(first);
  auto y = parse_coordinate(rest);
  if (!x || !y) {
    fail(ErrorCode::kBadArguments,
         "argument '" + std::string(arg) + "' has invalid coordinates");
  }
  return Point{*x, *y, CoordSpace::kModel};
}

class ArgReader {
 public:
  ArgReader(std::string_view action, RawArgs args)
      : action_(action), args_(std::move(args)) {}

  std::optional<std::string> take(std::string_view key,
                                  std::string_view alias = {}) {
    auto it = args_.find(key);
    if (it == args_.end() && !alias.empty()) it = args_.find(alias);
    if (it == args_.end()) return std::nullopt;
    std::string value = std::move(it->second);
    args_.erase(it);
    return value;
  }

  std::string require(std::string_view key, std::string_view alias = {}) {
    auto value = take(key, alias);
    if (!value) {
      fail(ErrorCode::kBadArguments, std::string(action_) +
                                         " requires argument '" +
                                         std::string(key) + "'");
    }
    return std::move(*value);
  }

  Point point(std::string_view key, std::string_view alias = {}) {
    return parse_point(require(key, alias), key);
  }

  void done() const {
    if (!args_.empty()) {
      fail(ErrorCode::kBadArguments, std::string(action_) +
                                         " got unexpected argument '" +
                                         args_.begin()->first + "'");
    }
  }

 private:
  std::string_view action_;
  RawArgs args_;
};

ScrollDirection parse_direction(std::string_view s) {
  if (s == "up") return ScrollDirection::kUp;
  if (s == "down") return ScrollDirection::kDown;
  if (s == "left") return ScrollDirection::kLeft;
  if (s == "right") return ScrollDirection::kRight;
  fail(ErrorCode::kBadDirection,
       "scroll direction must be up, down, left or right, got '" +
           std::string(s) + "'");
}

ActionCommand build(const Expression& expr) {
  ArgReader args(expr.name, expr.args);
  ActionCommand out;
  const std::string& name = expr.name;
  if (name == "click") {
    out.variant = action::Click{args.point("point", "start_box")};
  } else if (name == "left_double") {
    out.variant = action::DoubleClick{args.point("point", "start_box")};
  } else if (name == "right_single") {
    out.variant = action::RightClick{args.point("point", "start_box")};
  } else if (name == "drag") {
    Point start = args.point("start_point", "start_box");
    Point end = args.point("end_point", "end_box");
    out.variant = action::Drag{start, end};
  } else if (name == "hotkey") {
    std::string joined = unescape_content(args.require("key"));
    std::vector<std::string> keys;
    std::string current;
    for (char c : joined) {
      if (is_space(c)) {
        if (!current.empty()) keys.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
    }
    if (!current.empty()) keys.push_back(std::move(current));
    if (keys.empty()) fail(ErrorCode::kBadArguments, "hotkey needs a key");
    if (keys.size() > kMaxHotkeys) {
      fail(ErrorCode::kTooManyHotkeys,
           "hotkey allows at most 3 keys, got " + std::to_string(keys.size()));
    }
    out.variant = action::Hotkey{std::move(keys)};
  } else if (name == "type") {
    out.variant = action::Type{unescape_content(args.require("content"))};
  } else if (name == "scroll") {
    Point p = args.point("point", "start_box");
    auto direction = args.take("direction");
    if (!direction) fail(ErrorCode::kBadArguments, "scroll requires direction");
    out.variant =
        action::Scroll{p, parse_direction(unescape_content(*direction))};
  } else if (name == "wait") {
    out.variant = action::Wait{};
  } else if (name == "finished") {
    out.variant =
        action::Finished{unescape_content(args.take("content").value_or(""))};
  } else if (name == "navigate") {
    std::string url = unescape_content(args.require("url"));
    if (trim(url).empty()) fail(ErrorCode::kBadArguments, "navigate needs a url");
    out.variant = action::Navigate{std::move(url)};
  } else {
    fail(ErrorCode::kUnknownAction, "unknown action '" + name + "'");
  }
  args.done();
  return out;
}

void append_point(std::string& out, const Point& p) {
  out += "'<point>";
  out += std::to_string(p.x);
  out += ' ';
  out += std::to_string(p.y);
  out += "</point>'";
}

int scale_coordinate(int value, int from, int to) {
  // round(value * to / from), half up, in integer arithmetic.
  const long long num = 2LL * value * to + from;
  const long long scaled = num / (2LL * from);
  return static_cast<int>(std::clamp<long long>(scaled, 0, to - 1));
}

}  // namespace

std::string_view to_string(ScrollDirection direction) {
  switch (direction) {
    case ScrollDirection::kUp: return "up";
    case ScrollDirection::kDown: return "down";
    case ScrollDirection::kLeft: return "left";
    case ScrollDirection::kRight: return "right";
  }
  return "down";
}

std::string_view ActionCommand::name() const {
  struct Visitor {
    std::string_view operator()(const action::Click&) const { return "click"; }
    std::string_view operator()(const action::DoubleClick&) const { return "left_double"; }
    std::string_view operator()(const action::RightClick&) const { return "right_single"; }
    std::string_view operator()(const action::Drag&) const { return "drag"; }
    std::string_view operator()(const action::Hotkey&) const { return "hotkey"; }
    std::string_view operator()(const action::Type&) const { return "type"; }
    std::string_view operator()(const action::Scroll&) const { return "scroll"; }
    std::string_view operator()(const action::Wait&) const { return "wait"; }
    std::string_view operator()(const action::Finished&) const { return "finished"; }
    std::string_view operator()(const action::Navigate&) const { return "navigate"; }
  };
  return std::visit(Visitor{}, variant);
}

std::vector<Point> ActionCommand::points() const {
  if (auto* a = std::get_if<action::Click>(&variant)) return {a->point};
  if (auto* a = std::get_if<action::DoubleClick>(&variant)) return {a->point};
  if (auto* a = std::get_if<action::RightClick>(&variant)) return {a->point};
  if (auto* a = std::get_if<action::Scroll>(&variant)) return {a->point};
  if (auto* a = std::get_if<action::Drag>(&variant)) return {a->start, a->end};
  return {};
}

std::string escape_content(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_content(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    const char c = escaped[i];
    if (c != '\\' || i + 1 == escaped.size()) {
      out += c;
      continue;
    }
    const char next = escaped[i + 1];
    switch (next) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case '\'': out += '\''; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default:
        // Python keeps unknown escapes verbatim.
        out += c;
        out += next;
    }
    ++i;
  }
  return out;
}

ActionCommand parse_action(std::string_view text) {
  ExpressionScanner scanner(text);
  Expression expr = scanner.scan();
  if (!trim(text.substr(expr.consumed)).empty()) {
    if (std::find(std::begin(kActionNames), std::end(kActionNames),
                  expr.name) == std::end(kActionNames)) {
      fail(ErrorCode::kUnknownAction, "unknown action '" + expr.name + "'");
    }
    fail(ErrorCode::kBadArguments, "trailing text after action expression");
  }
  return build(expr);
}

ModelTurn parse_model_output(std::string_view text) {
  // Drop markdown fence lines, keep everything else verbatim.
  std::string body;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (trim(line).substr(0, 3) != "```") {
      body.append(line);
      body.push_back('\n');
    }
    start = end + 1;
  }

  auto find_label = [&body](std::string_view label,
                            std::size_t from) -> std::size_t {
    std::size_t line_start = from;
    while (line_start < body.size()) {
      std::size_t pos = line_start;
      while (pos < body.size() && body[pos] != '\n' && is_space(body[pos])) {
        ++pos;
      }
      if (body.compare(pos, label.size(), label) == 0) return pos;
      std::size_t next = body.find('\n', line_start);
      if (next == std::string::npos) break;
      line_start = next + 1;
    }
    return std::string::npos;
  };

  const std::size_t action_pos = find_label("Action:", 0);
  if (action_pos == std::string::npos) {
    throw Error(ErrorCode::kMalformedOutput, "no 'Action:' line in model output");
  }

  ModelTurn turn;
  turn.raw = std::string(text);
  const std::size_t thought_pos = find_label("Thought:", 0);
  if (thought_pos != std::string::npos && thought_pos < action_pos) {
    const std::size_t begin = thought_pos + std::string_view("Thought:").size();
    turn.thought = std::string(trim(std::string_view(body).substr(begin, action_pos - begin)));
  }

  std::string_view expression =
      std::string_view(body).substr(action_pos + std::string_view("Action:").size());
  ExpressionScanner scanner(expression);
  Expression expr = scanner.scan();
  turn.action = build(expr);
  return turn;
}

std::string serialize_action(const ActionCommand& command) {
  std::string out(command.name());
  out += '(';
  if (auto* a = std::get_if<action::Click>(&command.variant)) {
    out += "point=";
    append_point(out, a->point);
  } else if (auto* a = std::get_if<action::DoubleClick>(&command.variant)) {
    out += "point=";
    append_point(out, a->point);
  } else if (auto* a = std::get_if<action::RightClick>(&command.variant)) {
    out += "point=";
    append_point(out, a->point);
  } else if (auto* a = std::get_if<action::Drag>(&command.variant)) {
    out += "start_point=";
    append_point(out, a->start);
    out += ", end_point=";
    append_point(out, a->end);
  } else if (auto* a = std::get_if<action::Hotkey>(&command.variant)) {
    std::string joined;
    for (const auto& key : a->keys) {
      if (!joined.empty()) joined += ' ';
      joined += key;
    }
    out += "key='" + escape_content(joined) + "'";
  } else if (auto* a = std::get_if<action::Type>(&command.variant)) {
    out += "content='" + escape_content(a->content) + "'";
  } else if (auto* a = std::get_if<action::Scroll>(&command.variant)) {
    out += "point=";
    append_point(out, a->point);
    out += ", direction='";
    out += to_string(a->direction);
    out += "'";
  } else if (auto* a = std::get_if<action::Finished>(&command.variant)) {
    out += "content='" + escape_content(a->content) + "'";
  } else if (auto* a = std::get_if<action::Navigate>(&command.variant)) {
    out += "url='" + escape_content(a->url) + "'";
  }
  out += ')';
  return out;
}

Point scale_point(Point p, Extent model_extent, Extent viewport) {
  if (model_extent.width <= 0 || model_extent.height <= 0 ||
      viewport.width <= 0 || viewport.height <= 0) {
    throw Error(ErrorCode::kNonPositiveExtent,
                "model extent and viewport must be positive");
  }
  if (p.space != CoordSpace::kModel) {
    throw Error(ErrorCode::kSpaceMismatch, "scale_point expects a model-space point");
  }
  return Point{scale_coordinate(p.x, model_extent.width, viewport.width),
               scale_coordinate(p.y, model_extent.height, viewport.height),
               CoordSpace::kPixel};
}

Point to_model_space(Point p, Extent model_extent, Extent image) {
  if (model_extent.width <= 0 || model_extent.height <= 0 ||
      image.width <= 0 || image.height <= 0) {
    throw Error(ErrorCode::kNonPositiveExtent,
                "model extent and image size must be positive");
  }
  if (p.space != CoordSpace::kPixel) {
    throw Error(ErrorCode::kSpaceMismatch, "to_model_space expects a pixel point");
  }
  return Point{scale_coordinate(p.x, image.width, model_extent.width),
               scale_coordinate(p.y, image.height, model_extent.height),
               CoordSpace::kModel};
}

ActionCommand scale_action(const ActionCommand& command, Extent model_extent,
                           Extent viewport) {
  auto scale = [&](Point p) { return scale_point(p, model_extent, viewport); };
  ActionCommand out = command;
  if (auto* a = std::get_if<action::Click>(&out.variant)) {
    a->point = scale(a->point);
  } else if (auto* a = std::get_if<action::DoubleClick>(&out.variant)) {
    a->point = scale(a->point);
  } else if (auto* a = std::get_if<action::RightClick>(&out.variant)) {
    a->point = scale(a->point);
  } else if (auto* a = std::get_if<action::Scroll>(&out.variant)) {
    a->point = scale(a->point);
  } else if (auto* a = std::get_if<action::Drag>(&out.variant)) {
    a->start = scale(a->start);
    a->end = scale(a->end);
  }
  return out;
}

}  // namespace websight
