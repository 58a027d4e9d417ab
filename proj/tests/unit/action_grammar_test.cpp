#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "websight/action_grammar.hpp"
#include "websight/error.hpp"

namespace websight {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ParseModelOutput, ThoughtAndClick) {
  const ModelTurn turn = parse_model_output("Thought: find login\nAction: click(point='<point>200 300</point>')");
  EXPECT_EQ(turn.thought, "find login");
  ASSERT_TRUE(turn.action.is<action::Click>());
  EXPECT_EQ(turn.action.as<action::Click>().point, (Point{200, 300, CoordSpace::kModel}));
}

TEST(ParseModelOutput, StuckSentinel) {
  const ModelTurn turn = parse_model_output("Thought: done\nAction: finished(content='STUCK')");
  ASSERT_TRUE(turn.action.is<action::Finished>());
  EXPECT_EQ(turn.action.as<action::Finished>().content, kStuckSentinel);
}

TEST(ParseModelOutput, UnknownActionName) {
  EXPECT_EQ(code_of([] { parse_model_output("Action: fly(point='<point>1 1</point>')"); }),
            ErrorCode::kUnknownAction);
}

TEST(ParseModelOutput, MissingActionLine) {
  EXPECT_EQ(code_of([] { parse_model_output("Thought: nothing to do"); }), ErrorCode::kMalformedOutput);
}

TEST(ParseModelOutput, CodeFenceAndMissingThought) {
  const ModelTurn fenced = parse_model_output("```\nThought: go\nAction: wait()\n```\n");
  EXPECT_EQ(fenced.thought, "go");
  EXPECT_TRUE(fenced.action.is<action::Wait>());
  const ModelTurn bare = parse_model_output("  Action: wait()  ");
  EXPECT_EQ(bare.thought, "");
  EXPECT_TRUE(bare.action.is<action::Wait>());
}

TEST(ParseModelOutput, RawReparsesToSameTurn) {
  const ModelTurn turn = parse_model_output("Thought: a\nAction: type(content='hi\\n')");
  const ModelTurn again = parse_model_output(turn.raw);
  EXPECT_EQ(again.thought, turn.thought);
  EXPECT_EQ(again.action, turn.action);
}

TEST(ParseAction, HotkeySplitAndLowercased) {
  EXPECT_EQ(parse_action("hotkey(key='ctrl c')").as<action::Hotkey>().keys,
            (std::vector<std::string>{"ctrl", "c"}));
  EXPECT_EQ(parse_action("hotkey(key='Ctrl Shift T')").as<action::Hotkey>().keys,
            (std::vector<std::string>{"ctrl", "shift", "t"}));
}

TEST(ParseAction, TooManyHotkeys) {
  EXPECT_EQ(code_of([] { parse_action("hotkey(key='ctrl shift alt k')"); }), ErrorCode::kTooManyHotkeys);
}

TEST(ParseAction, Scroll) {
  const auto s = parse_action("scroll(point='<point>10 20</point>', direction='down')").as<action::Scroll>();
  EXPECT_EQ(s.point, (Point{10, 20, CoordSpace::kModel}));
  EXPECT_EQ(s.direction, ScrollDirection::kDown);
  EXPECT_EQ(code_of([] { parse_action("scroll(point='<point>1 2</point>', direction='sideways')"); }),
            ErrorCode::kBadDirection);
}

TEST(ParseAction, TypeUnescapesNewline) {
  EXPECT_EQ(parse_action("type(content='a\\nb')").as<action::Type>().content, "a\nb");
}

TEST(ParseAction, WireNamesMapToSemanticVariants) {
  EXPECT_TRUE(parse_action("left_double(point='<point>1 2</point>')").is<action::DoubleClick>());
  EXPECT_TRUE(parse_action("right_single(point='<point>1 2</point>')").is<action::RightClick>());
}

TEST(ParseAction, DoubleQuotesAcceptedSingleEmitted) {
  const ActionCommand a = parse_action("click(point=\"<point>3 4</point>\")");
  EXPECT_EQ(serialize_action(a), "click(point='<point>3 4</point>')");
}

TEST(ParseAction, LenientPointForms) {
  for (const char* text : {"click(point='3 4')", "click(point='(3,4)')", "click(point='[3, 4]')",
                           "click(start_box='<point>3 4</point>')"}) {
    EXPECT_EQ(parse_action(text).as<action::Click>().point, (Point{3, 4, CoordSpace::kModel})) << text;
  }
}

TEST(ParseAction, BadArguments) {
  EXPECT_EQ(code_of([] { parse_action("click(point='three four')"); }), ErrorCode::kBadArguments);
  EXPECT_EQ(code_of([] { parse_action("drag(start_point='<point>1 2</point>')"); }), ErrorCode::kBadArguments);
}

TEST(SerializeAction, CanonicalForms) {
  EXPECT_EQ(serialize_action({action::Click{{5, 7, CoordSpace::kModel}}}), "click(point='<point>5 7</point>')");
  EXPECT_EQ(serialize_action({action::Type{"x\n"}}), "type(content='x\\n')");
  EXPECT_EQ(serialize_action({action::Wait{}}), "wait()");
}

TEST(SerializeAction, CanonicalizationIsIdempotent) {
  for (const char* text : {"click(point=\"<point>3 4</point>\")", "hotkey(key='CTRL V')",
                           "finished(content=\"it's done\")"}) {
    const std::string once = serialize_action(parse_action(text));
    EXPECT_EQ(serialize_action(parse_action(once)), once) << text;
  }
}

TEST(Escaping, EscapeOfUnescapeIsIdentityOnCanonicalStrings) {
  std::mt19937 rng(3);
  const std::string alphabet = "ab '\"\\\n\tz";
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    for (int n = static_cast<int>(rng() % 12); n > 0; --n) raw += alphabet[rng() % alphabet.size()];
    const std::string legal = escape_content(raw);
    EXPECT_EQ(unescape_content(legal), raw);
    EXPECT_EQ(escape_content(unescape_content(legal)), legal);
  }
}

TEST(ScalePoint, OriginIsFixed) {
  EXPECT_EQ(scale_point({0, 0, CoordSpace::kModel}, {1000, 1000}, {1280, 800}), (Point{0, 0, CoordSpace::kPixel}));
  EXPECT_EQ(scale_point({0, 0, CoordSpace::kModel}, {7, 3}, {5, 11}), (Point{0, 0, CoordSpace::kPixel}));
}

TEST(ScalePoint, FarCornerClamps) {
  // 1000*1280/1000 = 1280 and 1000*800/1000 = 800, one past the last pixel.
  EXPECT_EQ(scale_point({1000, 1000, CoordSpace::kModel}, {1000, 1000}, {1280, 800}),
            (Point{1279, 799, CoordSpace::kPixel}));
}

TEST(ScalePoint, IdentityScaling) {
  EXPECT_EQ(scale_point({500, 500, CoordSpace::kModel}, {1000, 1000}, {1000, 1000}),
            (Point{500, 500, CoordSpace::kPixel}));
}

TEST(ScalePoint, AgreesWithFloatingOracleAndIsMonotone) {
  const std::vector<Extent> viewports = {{1280, 800}, {1920, 1080}, {333, 777}, {1, 1}};
  for (const Extent vp : viewports) {
    int previous = -1;
    for (int m = 0; m <= 1000; ++m) {
      const Point p = scale_point({m, m, CoordSpace::kModel}, {1000, 1000}, vp);
      ASSERT_EQ(p.x, testing::oracle_pixel(m, 1000, vp.width)) << m;
      ASSERT_EQ(p.y, testing::oracle_pixel(m, 1000, vp.height)) << m;
      ASSERT_GE(p.x, previous);
      previous = p.x;
    }
  }
}

TEST(ScalePoint, Errors) {
  EXPECT_EQ(code_of([] { scale_point({1, 1, CoordSpace::kModel}, {0, 1000}, {10, 10}); }),
            ErrorCode::kNonPositiveExtent);
  EXPECT_EQ(code_of([] { scale_point({1, 1, CoordSpace::kPixel}, {1000, 1000}, {10, 10}); }),
            ErrorCode::kSpaceMismatch);
}

TEST(ScaleAction, RewritesEveryPoint) {
  const ActionCommand drag{action::Drag{{0, 0, CoordSpace::kModel}, {500, 500, CoordSpace::kModel}}};
  const ActionCommand scaled = scale_action(drag, {1000, 1000}, {200, 100});
  EXPECT_EQ(scaled.as<action::Drag>().start, (Point{0, 0, CoordSpace::kPixel}));
  EXPECT_EQ(scaled.as<action::Drag>().end, (Point{100, 50, CoordSpace::kPixel}));
  const ActionCommand typed{action::Type{"abc"}};
  EXPECT_EQ(scale_action(typed, {1000, 1000}, {200, 100}), typed);
}

}  // namespace
}  // namespace websight
