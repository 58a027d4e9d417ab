#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "websight/action_grammar.hpp"
#include "websight/types.hpp"

namespace websight {

// One (a_t, dV_t, T_t, T_t+1) tuple plus the evidence needed to replay it.
struct MemoryEntry {
  int step_index = 0;
  ActionCommand action;
  std::string delta_summary;
  TaskState state_before;
  TaskState state_after;
  ProgressVerdict verdict;
  std::string screenshot_ref_before;
  std::string screenshot_ref_after;
  // Hash of (URL, perceptual-hash bucket) of the page after the action.
  std::uint64_t fingerprint_after = 0;
};

inline constexpr std::size_t kDefaultMemoryCapacity = 20;
inline constexpr int kDefaultLoopWindow = 8;
inline constexpr int kDefaultLoopThreshold = 3;
inline constexpr std::string_view kEmptyHistory = "(no prior actions)";

// Bounded short-term memory. When full, the oldest entry whose verdict is not
// `advanced` is evicted first, then the oldest entry overall. The entry being
// appended is never a candidate.
class EpisodicMemory {
 public:
  explicit EpisodicMemory(std::size_t capacity = kDefaultMemoryCapacity);

  // Throws Error(kOutOfOrderEntry) unless entry.step_index exceeds the last one.
  void append(MemoryEntry entry);

  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<MemoryEntry> entries_;
  std::size_t capacity_;
  int last_step_index_ = 0;
  bool any_appended_ = false;
};

// Renders `#<step> <action> → <verdict>: <delta>` lines, newest last, keeping
// only the last `max_entries`.
std::string render_history(const EpisodicMemory& memory, std::size_t max_entries);

// True iff some (serialized action, fingerprint_after) pair occurs at least
// `threshold` times among the last `window` entries.
// Requires window >= threshold >= 2.
bool detect_loop(const EpisodicMemory& memory, int window, int threshold);

}  // namespace websight
