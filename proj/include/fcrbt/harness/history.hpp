#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "fcrbt/ops.hpp"

namespace fcrbt::harness {

/// One completed operation with invocation/response stamps taken from a
/// single process-wide monotonic counter.
struct HistoryEvent {
  std::size_t id = 0;
  std::size_t thread = 0;
  Op op;
  OpResult result;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
};

/// Collects per-thread append-only logs; merge() after all workers joined.
class HistoryRecorder {
 public:
  explicit HistoryRecorder(std::size_t threads) : logs_(threads) {}

  static std::uint64_t tick();

  template <typename Call>
  OpResult record(std::size_t thread, const Op& op, Call&& call) {
    HistoryEvent ev;
    ev.thread = thread;
    ev.op = op;
    ev.start = tick();
    ev.result = call();
    ev.end = tick();
    logs_[thread].push_back(ev);
    return ev.result;
  }

  /// Events ordered by invocation stamp, ids assigned in that order.
  std::vector<HistoryEvent> merge() const;

 private:
  std::deque<std::vector<HistoryEvent>> logs_;
};

}  // namespace fcrbt::harness
