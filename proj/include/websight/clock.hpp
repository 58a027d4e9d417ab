#pragma once

#include <atomic>
#include <chrono>
#include <thread>

namespace websight {

// Time source for deadlines and waits. Tests and benchmarks substitute
// ManualClock so that a 600 s budget or a 5 s wait costs no wall time.
class Clock {
 public:
  using Duration = std::chrono::steady_clock::duration;
  using TimePoint = std::chrono::steady_clock::time_point;

  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override { return std::chrono::steady_clock::now(); }
  void sleep_for(Duration d) override { std::this_thread::sleep_for(d); }
};

// Advances only when told to; sleep_for advances instantly.
class ManualClock final : public Clock {
 public:
  TimePoint now() const override {
    return TimePoint(Duration(ticks_.load(std::memory_order_acquire)));
  }
  void sleep_for(Duration d) override { advance(d); }
  void advance(Duration d) {
    ticks_.fetch_add(d.count(), std::memory_order_acq_rel);
  }

 private:
  std::atomic<Duration::rep> ticks_{0};
};

inline SystemClock& system_clock() {
  static SystemClock clock;
  return clock;
}

inline double seconds_between(Clock::TimePoint from, Clock::TimePoint to) {
  return std::chrono::duration<double>(to - from).count();
}

}  // namespace websight
