#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace edgesim {

/// Simulated time in integer nanoseconds.
using SimTime = int64_t;

constexpr SimTime seconds_to_sim(double s) {
  return static_cast<SimTime>(s * 1e9 + 0.5);
}
constexpr double sim_to_seconds(SimTime t) {
  return static_cast<double>(t) / 1e9;
}

struct CausalityError : std::logic_error {
  CausalityError() : std::logic_error("event scheduled in the past") {}
};

/// Deterministic discrete-event queue. Events execute in (time, sequence)
/// order; scheduling before the current time is a causality violation.
template <class Payload>
class EventQueue {
 public:
  struct Event {
    SimTime time{0};
    uint64_t seq{0};
    Payload payload;
  };

  void schedule(SimTime at, Payload payload) {
    if (at < now_) throw CausalityError{};
    heap_.push(Event{at, next_seq_++, std::move(payload)});
  }

  std::optional<Event> pop() {
    if (heap_.empty()) return std::nullopt;
    Event ev = heap_.top();
    heap_.pop();
    now_ = ev.time;
    return ev;
  }

  const Event* peek() const { return heap_.empty() ? nullptr : &heap_.top(); }
  SimTime now() const { return now_; }
  size_t size() const { return heap_.size(); }
  bool empty() const { return heap_.empty(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  uint64_t next_seq_{0};
  SimTime now_{0};
};

}  // namespace edgesim
