#include "websight/episodic_memory.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "websight/error.hpp"

namespace websight {

EpisodicMemory::EpisodicMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "memory capacity must be positive");
  }
}

void EpisodicMemory::append(MemoryEntry entry) {
  if (any_appended_ && entry.step_index <= last_step_index_) {
    throw Error(ErrorCode::kOutOfOrderEntry,
                "step " + std::to_string(entry.step_index) +
                    " does not follow step " + std::to_string(last_step_index_));
  }
  last_step_index_ = entry.step_index;
  any_appended_ = true;
  entries_.push_back(std::move(entry));

  while (entries_.size() > capacity_) {
    const auto candidates_end = entries_.end() - 1;
    auto victim = std::find_if(entries_.begin(), candidates_end, [](const MemoryEntry& e) {
      return e.verdict.outcome != Outcome::kAdvanced;
    });
    if (victim == candidates_end) victim = entries_.begin();
    entries_.erase(victim);
  }
}

std::string render_history(const EpisodicMemory& memory, std::size_t max_entries) {
  const auto& entries = memory.entries();
  const std::size_t count = std::min(max_entries, entries.size());
  if (count == 0) return std::string(kEmptyHistory);

  std::string out;
  for (std::size_t i = entries.size() - count; i < entries.size(); ++i) {
    const MemoryEntry& e = entries[i];
    std::string delta = e.delta_summary;
    std::replace(delta.begin(), delta.end(), '\n', ' ');
    if (!out.empty()) out += '\n';
    out += '#';
    out += std::to_string(e.step_index);
    out += ' ';
    out += serialize_action(e.action);
    out += " → ";
    out += to_string(e.verdict.outcome);
    out += ": ";
    out += delta;
  }
  return out;
}

bool detect_loop(const EpisodicMemory& memory, int window, int threshold) {
  if (threshold < 2 || window < threshold) {
    throw Error(ErrorCode::kInvalidArgument,
                "detect_loop requires window >= threshold >= 2");
  }
  const auto& entries = memory.entries();
  const std::size_t span = std::min<std::size_t>(window, entries.size());
  std::map<std::pair<std::string, std::uint64_t>, int> counts;
  for (std::size_t i = entries.size() - span; i < entries.size(); ++i) {
    const int n = ++counts[{serialize_action(entries[i].action),
                            entries[i].fingerprint_after}];
    if (n >= threshold) return true;
  }
  return false;
}

}  // namespace websight
