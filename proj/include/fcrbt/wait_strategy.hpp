#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fcrbt/op_record.hpp"

namespace fcrbt {

enum class WaitKind { SleepAwake, SpinOnFlag, BackoffSpin, PerThreadFlag };

const char* to_string(WaitKind kind);

/// Backoff sleeps in milliseconds for consecutive failed checks.
inline constexpr std::array<int, 11> kDefaultBackoffMs{1, 3, 10, 20, 50, 100, 200, 500, 1000, 3033, 5000};

struct WaitStrategy {
  WaitKind kind = WaitKind::SleepAwake;
  std::vector<int> backoff_ms;

  static WaitStrategy sleep_awake() { return {WaitKind::SleepAwake, {}}; }
  static WaitStrategy spin() { return {WaitKind::SpinOnFlag, {}}; }
  static WaitStrategy backoff(std::span<const int> schedule = kDefaultBackoffMs) {
    return {WaitKind::BackoffSpin, {schedule.begin(), schedule.end()}};
  }
  static WaitStrategy per_thread_flag() { return {WaitKind::PerThreadFlag, {}}; }
};

/// Sleep for the `failed_check`-th (1-based) failed poll. Clamps at the
/// last entry of the schedule.
std::chrono::milliseconds backoff_delay(std::span<const int> schedule, std::uint64_t failed_check);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct WaitCounters {
  std::uint64_t handoff_phases = 0;
  std::uint64_t completion_phases = 0;
  std::uint64_t sleeps = 0;
};

struct WaitContext {
  // Flag that, while raised, makes a PerThreadFlag waiter sleep on it.
  const std::atomic<bool>* stop_signal = nullptr;
  // Replaces std::this_thread::sleep_for for BackoffSpin when set.
  Sleeper sleeper;
  WaitCounters* counters = nullptr;
};

/// Lets other runnable threads in; spinning without yielding starves the
/// combiner when threads outnumber cores.
void relax(std::uint32_t& spins);

/// Blocks until the record leaves the combiner's hands and returns the
/// status observed (CallerExecutes, Done or Shutdown).
OpStatus wait_for_done(const WaitStrategy& strategy, OpRecord& record, const WaitContext& ctx = {});

}  // namespace fcrbt
