#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace qlink::des {

/// Simulated time in integer nanoseconds.
using SimTime = std::int64_t;

/// Cancellation token returned by Engine::schedule_at.
class EventHandle {
 public:
  EventHandle() = default;
  bool valid() const { return id_ != 0; }

 private:
  friend class Engine;
  explicit EventHandle(std::uint64_t id) : id_(id) {}
  std::uint64_t id_ = 0;
};

/// Single-threaded discrete-event engine. Events dispatch in nondecreasing
/// time; equal times dispatch in insertion order. Cancellation uses lazy
/// tombstones removed at pop.
class Engine {
 public:
  using Callback = std::function<void()>;

  SimTime now() const { return now_; }

  EventHandle schedule_at(SimTime t, Callback fn) {
    if (t < now_) {
      throw std::logic_error("schedule_at: event time precedes current time");
    }
    const std::uint64_t id = ++next_id_;
    queue_.push(Entry{t, id, std::move(fn)});
    return EventHandle{id};
  }

  EventHandle schedule_after(SimTime dt, Callback fn) {
    return schedule_at(now_ + dt, std::move(fn));
  }

  void cancel(EventHandle h) {
    if (h.valid() && cancelled_.insert(h.id_).second) ++cancelled_pending_;
  }

  /// Dispatches every event with time <= t_end, then sets the clock to t_end.
  /// Returns the number of dispatched (non-cancelled) events.
  std::size_t run_until(SimTime t_end) {
    if (t_end < now_) {
      throw std::logic_error("run_until: target time precedes current time");
    }
    std::size_t dispatched = 0;
    while (!queue_.empty() && queue_.top().time <= t_end) {
      if (dispatch_top()) ++dispatched;
    }
    now_ = t_end;
    return dispatched;
  }

  /// Dispatches until the queue empties or `hard_limit` is reached.
  /// Returns true if the queue drained.
  bool drain(SimTime hard_limit) {
    while (!queue_.empty() && queue_.top().time <= hard_limit) {
      dispatch_top();
    }
    return queue_.empty();
  }

  bool empty() const { return pending_count() == 0; }

  std::size_t pending_count() const { return queue_.size() - cancelled_pending_; }

 private:
  struct Entry {
    SimTime time;
    std::uint64_t seq;
    Callback fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  // Pops one entry; returns false if it was a tombstone.
  bool dispatch_top() {
    Entry e = std::move(const_cast<Entry&>(queue_.top()));
    queue_.pop();
    auto it = cancelled_.find(e.seq);
    if (it != cancelled_.end()) {
      cancelled_.erase(it);
      --cancelled_pending_;
      return false;
    }
    now_ = e.time;
    e.fn();
    return true;
  }

  SimTime now_ = 0;
  std::uint64_t next_id_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_set<std::uint64_t> cancelled_;
  std::size_t cancelled_pending_ = 0;

  friend class EngineTestPeek;
};

}  // namespace qlink::des
