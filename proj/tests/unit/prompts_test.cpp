#include <gtest/gtest.h>

#include "websight/prompts.hpp"
#include "websight/raster.hpp"

namespace websight {
namespace {

// Resource files end in one newline that is not part of the prompt.
std::string resource(const std::string& name) {
  std::string text = read_file(std::string(WEBSIGHT_SOURCE_DIR) + "/resources/prompts/" + name);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

TEST(Prompts, EmbeddedTextsMatchResourceFiles) {
  EXPECT_EQ(prompts::planner_system(), resource("planner_system.txt"));
  EXPECT_EQ(prompts::planner_user(), resource("planner_user.txt"));
  EXPECT_EQ(prompts::reasoner_system(), resource("reasoner_system.txt"));
  EXPECT_EQ(prompts::reasoner_user(), resource("reasoner_user.txt"));
  EXPECT_EQ(prompts::grounder(), resource("grounder.txt"));
  EXPECT_EQ(prompts::verifier_system(), resource("verifier_system.txt"));
  EXPECT_EQ(prompts::judge(), resource("judge.txt"));
}

TEST(Prompts, PlaceholdersPresent) {
  EXPECT_NE(prompts::planner_user().find("{task}"), std::string_view::npos);
  EXPECT_NE(prompts::reasoner_user().find("{plan}"), std::string_view::npos);
  EXPECT_NE(prompts::reasoner_user().find("{history}"), std::string_view::npos);
  EXPECT_NE(prompts::grounder().find("{instruction}"), std::string_view::npos);
  EXPECT_NE(prompts::grounder().find("{language}"), std::string_view::npos);
}

TEST(FillTemplate, SubstitutesKnownNames) {
  EXPECT_EQ(fill_template("a {x} b {y}", {{"x", "1"}, {"y", "2"}}), "a 1 b 2");
  EXPECT_EQ(fill_template("{x}{x}", {{"x", "ab"}}), "abab");
}

TEST(FillTemplate, UnknownAndUnclosedLeftAlone) {
  EXPECT_EQ(fill_template("{z} and {x", {{"x", "1"}}), "{z} and {x");
  EXPECT_EQ(fill_template("json {\"k\": 1}", {}), "json {\"k\": 1}");
}

TEST(FillTemplate, SubstitutedTextNotRescanned) {
  EXPECT_EQ(fill_template("{a}", {{"a", "{b}"}, {"b", "no"}}), "{b}");
}

}  // namespace
}  // namespace websight
