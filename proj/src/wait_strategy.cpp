#include "fcrbt/wait_strategy.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace fcrbt {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Get: return "get";
    case OpKind::Insert: return "insert";
    case OpKind::Delete: return "delete";
  }
  return "?";
}

const char* to_string(WaitKind kind) {
  switch (kind) {
    case WaitKind::SleepAwake: return "sleep-awake";
    case WaitKind::SpinOnFlag: return "spin";
    case WaitKind::BackoffSpin: return "backoff-spin";
    case WaitKind::PerThreadFlag: return "per-thread-flag";
  }
  return "?";
}

std::chrono::milliseconds backoff_delay(std::span<const int> schedule, std::uint64_t failed_check) {
  if (schedule.empty()) throw std::invalid_argument("backoff schedule is empty");
  if (failed_check == 0) return std::chrono::milliseconds{0};
  const auto idx = std::min<std::uint64_t>(failed_check - 1, schedule.size() - 1);
  return std::chrono::milliseconds{schedule[idx]};
}

void relax(std::uint32_t& spins) {
  if (++spins % 16 != 0) {
#if defined(__x86_64__) || defined(__i386__)
    _mm_pause();
#endif
    return;
  }
  std::this_thread::yield();
}

OpStatus wait_for_done(const WaitStrategy& strategy, OpRecord& record, const WaitContext& ctx) {
  OpStatus s = record.status.load(std::memory_order_acquire);
  if (ctx.counters != nullptr) ++ctx.counters->completion_phases;
  if (!in_flight(s)) return s;

  switch (strategy.kind) {
    case WaitKind::SleepAwake:
      while (in_flight(s)) {
        record.status.wait(s, std::memory_order_acquire);
        s = record.status.load(std::memory_order_acquire);
      }
      return s;

    case WaitKind::SpinOnFlag: {
      std::uint32_t spins = 0;
      while (in_flight(s)) {
        relax(spins);
        s = record.status.load(std::memory_order_acquire);
      }
      return s;
    }

    case WaitKind::BackoffSpin: {
      for (std::uint64_t failed = 1; in_flight(s); ++failed) {
        const auto delay = backoff_delay(strategy.backoff_ms, failed);
        if (ctx.counters != nullptr) ++ctx.counters->sleeps;
        if (ctx.sleeper)
          ctx.sleeper(delay);
        else
          std::this_thread::sleep_for(delay);
        s = record.status.load(std::memory_order_acquire);
      }
      return s;
    }

    case WaitKind::PerThreadFlag: {
      std::uint32_t spins = 0;
      while (in_flight(s)) {
        if (ctx.stop_signal != nullptr && ctx.stop_signal->load()) {
          // A record handed back before the stop signal went up must be
          // executed, not slept on: the combiner is draining it.
          s = record.status.load(std::memory_order_acquire);
          if (!in_flight(s)) return s;
          if (ctx.counters != nullptr) ++ctx.counters->sleeps;
          ctx.stop_signal->wait(true);
        } else {
          relax(spins);
        }
        s = record.status.load(std::memory_order_acquire);
      }
      return s;
    }
  }
  throw std::logic_error("unknown wait strategy");
}

}  // namespace fcrbt
