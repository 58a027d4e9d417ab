#include <random>

#include <gtest/gtest.h>

#include "websight/episodic_memory.hpp"
#include "websight/error.hpp"

namespace websight {
namespace {

MemoryEntry entry(int step, Outcome outcome = Outcome::kAdvanced, ActionCommand action = {action::Wait{}},
                  std::uint64_t fingerprint = 0) {
  MemoryEntry e;
  e.step_index = step;
  e.action = std::move(action);
  e.verdict.outcome = outcome;
  e.delta_summary = "step " + std::to_string(step);
  e.fingerprint_after = fingerprint;
  return e;
}

std::vector<int> steps_of(const EpisodicMemory& m) {
  std::vector<int> out;
  for (const auto& e : m.entries()) out.push_back(e.step_index);
  return out;
}

TEST(EpisodicMemory, BaseCase) {
  EpisodicMemory m(3);
  m.append(entry(1));
  EXPECT_EQ(steps_of(m), (std::vector<int>{1}));
}

TEST(EpisodicMemory, FifoWhenVerdictsEqual) {
  EpisodicMemory m(3);
  for (int i = 1; i <= 4; ++i) m.append(entry(i));
  EXPECT_EQ(steps_of(m), (std::vector<int>{2, 3, 4}));
}

TEST(EpisodicMemory, StalledEvictedFirst) {
  EpisodicMemory m(3);
  m.append(entry(1, Outcome::kStalled));
  m.append(entry(2));
  m.append(entry(3));
  m.append(entry(4));
  EXPECT_EQ(steps_of(m), (std::vector<int>{2, 3, 4}));
}

TEST(EpisodicMemory, OldestNonAdvancedWinsOverOlderAdvanced) {
  EpisodicMemory m(3);
  m.append(entry(1));
  m.append(entry(2, Outcome::kRegressed));
  m.append(entry(3, Outcome::kStalled));
  m.append(entry(4, Outcome::kStalled));
  EXPECT_EQ(steps_of(m), (std::vector<int>{1, 3, 4}));
}

TEST(EpisodicMemory, OutOfOrderRejected) {
  EpisodicMemory m(3);
  m.append(entry(2));
  try {
    m.append(entry(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfOrderEntry);
  }
}

TEST(EpisodicMemory, RandomSequencesRespectCapacityAndOrder) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t capacity = 1 + rng() % 6;
    EpisodicMemory m(capacity);
    int step = 0;
    for (int i = 0; i < 40; ++i) {
      step += 1 + static_cast<int>(rng() % 3);
      m.append(entry(step, static_cast<Outcome>(rng() % 3)));
      ASSERT_LE(m.size(), capacity);
      const auto s = steps_of(m);
      ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
      ASSERT_EQ(s.back(), step);
    }
  }
}

TEST(RenderHistory, EmptyMemory) {
  EXPECT_EQ(render_history(EpisodicMemory(3), 5), "(no prior actions)");
}

TEST(RenderHistory, SingleLine) {
  EpisodicMemory m(3);
  MemoryEntry e = entry(1);
  e.delta_summary = "page loaded";
  m.append(e);
  EXPECT_EQ(render_history(m, 5), "#1 wait() → advanced: page loaded");
}

TEST(RenderHistory, KeepsNewestLines) {
  EpisodicMemory m(10);
  for (int i = 1; i <= 5; ++i) m.append(entry(i));
  EXPECT_EQ(render_history(m, 2), "#4 wait() → advanced: step 4\n#5 wait() → advanced: step 5");
  EXPECT_EQ(render_history(m, 0), "(no prior actions)");
}

TEST(RenderHistory, EqualMemoriesRenderEqually) {
  EpisodicMemory a(4);
  EpisodicMemory b(4);
  for (int i = 1; i <= 6; ++i) {
    a.append(entry(i, Outcome::kStalled));
    b.append(entry(i, Outcome::kStalled));
  }
  EXPECT_EQ(render_history(a, 10), render_history(b, 10));
}

const ActionCommand kClickA{action::Click{{100, 100, CoordSpace::kModel}}};
const ActionCommand kBackB{action::Hotkey{{"alt", "left"}}};

TEST(DetectLoop, AlternatingCycle) {
  EpisodicMemory m(20);
  for (int i = 1; i <= 6; ++i) m.append(entry(i, Outcome::kStalled, i % 2 ? kClickA : kBackB, 42));
  EXPECT_TRUE(detect_loop(m, 8, 3));
}

TEST(DetectLoop, DistinctActions) {
  EpisodicMemory m(20);
  for (int i = 1; i <= 6; ++i) {
    m.append(entry(i, Outcome::kStalled, {action::Click{{i, i, CoordSpace::kModel}}}, 42));
  }
  EXPECT_FALSE(detect_loop(m, 8, 3));
}

TEST(DetectLoop, BelowThreshold) {
  EpisodicMemory m(20);
  m.append(entry(1, Outcome::kStalled, kClickA, 1));
  m.append(entry(2, Outcome::kStalled, kClickA, 1));
  EXPECT_FALSE(detect_loop(m, 8, 3));
}

TEST(DetectLoop, FingerprintDistinguishes) {
  EpisodicMemory m(20);
  for (int i = 1; i <= 3; ++i) m.append(entry(i, Outcome::kStalled, kClickA, static_cast<std::uint64_t>(i)));
  EXPECT_FALSE(detect_loop(m, 8, 3));
}

TEST(DetectLoop, OnlyWindowCounts) {
  EpisodicMemory m(20);
  for (int i = 1; i <= 3; ++i) m.append(entry(i, Outcome::kStalled, kClickA, 7));
  for (int i = 4; i <= 9; ++i) m.append(entry(i, Outcome::kStalled, {action::Type{std::to_string(i)}}, 7));
  EXPECT_FALSE(detect_loop(m, 6, 3));
  EXPECT_TRUE(detect_loop(m, 9, 3));
}

TEST(DetectLoop, RejectsBadParameters) {
  EpisodicMemory m(3);
  EXPECT_THROW(detect_loop(m, 8, 1), Error);
  EXPECT_THROW(detect_loop(m, 2, 3), Error);
}

}  // namespace
}  // namespace websight
