#pragma once

#include <latch>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fcrbt/concurrent_map.hpp"
#include "fcrbt/harness/history.hpp"
#include "fcrbt/ops.hpp"

namespace fcrbt::testing {

using harness::HistoryEvent;

inline HistoryEvent event(std::size_t id, std::size_t thread, OpKind kind, std::int64_t key, std::int64_t value,
                          OpResult result, std::uint64_t start, std::uint64_t end) {
  HistoryEvent ev;
  ev.id = id;
  ev.thread = thread;
  ev.op = {kind, key, value};
  ev.result = result;
  ev.start = start;
  ev.end = end;
  return ev;
}

inline OpResult changed(bool c) { return {c, std::nullopt}; }
inline OpResult read(std::optional<std::int64_t> v) { return {false, v}; }

using NamedHistory = std::pair<std::string, std::vector<HistoryEvent>>;

/// Histories with no legal sequential explanation from an empty map.
inline std::vector<NamedHistory> illegal_histories() {
  using K = OpKind;
  return {
      {"read of a value never written", {event(0, 0, K::Get, 1, 0, read(5), 1, 2)}},
      {"stale read after a completed insert",
       {event(0, 0, K::Insert, 1, 10, changed(true), 1, 2), event(1, 1, K::Get, 1, 0, read(std::nullopt), 3, 4)}},
      {"read after a completed delete",
       {event(0, 0, K::Insert, 1, 10, changed(true), 1, 2), event(1, 0, K::Delete, 1, 0, changed(true), 3, 4),
        event(2, 1, K::Get, 1, 0, read(10), 5, 6)}},
      {"two successful inserts of one key with no delete",
       {event(0, 0, K::Insert, 1, 10, changed(true), 1, 4), event(1, 1, K::Insert, 1, 20, changed(true), 2, 5)}},
      {"delete succeeds on an empty map", {event(0, 0, K::Delete, 3, 0, changed(true), 1, 2)}},
      {"insert into an empty map reports no change", {event(0, 0, K::Insert, 2, 7, changed(false), 1, 2)}},
      {"later read loses a value an earlier read saw",
       {event(0, 0, K::Insert, 1, 10, changed(true), 1, 10), event(1, 1, K::Get, 1, 0, read(10), 2, 3),
        event(2, 1, K::Get, 1, 0, read(std::nullopt), 4, 5)}},
      {"overlapping reads disagree with a single writer",
       {event(0, 0, K::Insert, 1, 10, changed(true), 1, 2), event(1, 1, K::Get, 1, 0, read(10), 3, 6),
        event(2, 2, K::Get, 1, 0, read(20), 4, 7)}},
  };
}

/// Runs `threads` x `ops_per_thread` random operations on keys [0, keys)
/// with all threads released together, and returns the merged history.
/// Insert values are unique so reads identify their writer.
inline std::vector<HistoryEvent> record_history(ConcurrentMap& map, std::size_t threads, std::size_t ops_per_thread,
                                                std::int64_t keys, std::uint64_t seed) {
  harness::HistoryRecorder recorder(threads);
  std::latch start(static_cast<std::ptrdiff_t>(threads));
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      std::mt19937_64 rng(seed * 1000003 + t);
      std::vector<Op> ops;
      for (std::size_t i = 0; i < ops_per_thread; ++i) {
        const auto r = rng() % 3;
        const OpKind kind = r == 0 ? OpKind::Insert : r == 1 ? OpKind::Delete : OpKind::Get;
        ops.push_back({kind, static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(keys)),
                       static_cast<std::int64_t>(1 + t * 100 + i)});
      }
      auto reg = map.register_thread();
      start.arrive_and_wait();
      for (const Op& op : ops) recorder.record(t, op, [&] { return apply(map, reg, op); });
    });
  for (auto& w : workers) w.join();
  return recorder.merge();
}

}  // namespace fcrbt::testing
