#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fcrbt/op_record.hpp"
#include "fcrbt/publication_queue.hpp"
#include "fcrbt/wait_strategy.hpp"

namespace fcrbt {

class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShutdownError : public std::runtime_error {
 public:
  ShutdownError() : std::runtime_error("combiner has shut down") {}
};

/// Per-thread state. Each registered thread owns exactly one slot and at
/// most one in-flight record, which lives here.
struct ThreadSlot {
  std::size_t index = 0;
  std::atomic<bool> in_use{false};
  std::thread::id owner;
  std::atomic<bool> stop_flag{false};
  std::atomic<bool> pending_mark{false};
  OpRecord record;
  WaitCounters waits;
};

class CombinerState;

/// Move-only handle returned by CombinerState::register_thread. Releases
/// the slot on destruction.
class ThreadRegistration {
 public:
  ThreadRegistration() = default;
  ThreadRegistration(ThreadRegistration&& other) noexcept;
  ThreadRegistration& operator=(ThreadRegistration&& other) noexcept;
  ~ThreadRegistration();

  bool valid() const { return slot_ != nullptr; }
  ThreadSlot& slot() const { return *slot_; }
  const CombinerState* state() const { return state_; }
  std::thread::id thread_id() const { return slot_->owner; }

 private:
  friend class CombinerState;
  ThreadRegistration(CombinerState* state, ThreadSlot* slot) : state_(state), slot_(slot) {}
  void reset();

  CombinerState* state_ = nullptr;
  ThreadSlot* slot_ = nullptr;
};

enum class StopWorldScope { Global, PerThread };

/// Shared flags and counters between callers and the combiner.
class CombinerState {
 public:
  explicit CombinerState(std::size_t max_threads);

  CombinerState(const CombinerState&) = delete;
  CombinerState& operator=(const CombinerState&) = delete;

  /// Throws RegistrationError when full or when the calling thread already
  /// holds a registration.
  ThreadRegistration register_thread();

  std::size_t max_threads() const { return max_threads_; }
  std::size_t registered() const;
  ThreadSlot& slot(std::size_t i) { return slots_[i]; }
  const ThreadSlot& slot(std::size_t i) const { return slots_[i]; }

  std::atomic<std::int64_t> pending_gets{0};
  std::atomic<std::int64_t> pending_ops{0};
  std::atomic<bool> stop_world{false};
  std::atomic<bool> running{true};
  std::atomic<bool> terminated{false};

  /// Raises the stop signal for `scope`, then returns once in-flight
  /// caller-executed work has drained. `on_raised` runs between the two.
  void enter_stop_world(StopWorldScope scope, const std::function<void()>& on_raised = {});
  void exit_stop_world(StopWorldScope scope);
  bool in_stop_world() const { return stop_world_active_.load(); }

  // Odd while the combiner holds the tree exclusively.
  std::uint64_t epoch() const { return epoch_.load(); }
  void begin_exclusive() { epoch_.fetch_add(1); }
  void end_exclusive() { epoch_.fetch_add(1); }

  /// Drops every stop signal and wakes sleepers; used on teardown.
  void release_all_stop_flags();

 private:
  friend class ThreadRegistration;
  void unregister(ThreadSlot& slot);

  const std::size_t max_threads_;
  std::unique_ptr<ThreadSlot[]> slots_;
  mutable std::mutex registry_mutex_;
  std::unique_lock<std::mutex> stop_world_lock_;
  std::atomic<bool> stop_world_active_{false};
  std::atomic<std::uint64_t> epoch_{0};
};

/// Spins for up to `spins` empty polls, then sleeps on the queue doorbell.
struct IdlePolicy {
  std::uint32_t spins = 256;
};

/// The dedicated combiner thread. Dequeues records in FIFO order, claims
/// them, stamps a dispatch sequence number and hands each to `dispatch`.
class Combiner {
 public:
  using Dispatch = std::function<void(OpRecord&)>;

  Combiner(PublicationQueue& queue, CombinerState& state, Dispatch dispatch, IdlePolicy idle = {});
  ~Combiner();

  Combiner(const Combiner&) = delete;
  Combiner& operator=(const Combiner&) = delete;

  void start();
  /// Idempotent. Records still queued complete with OpStatus::Shutdown.
  void shutdown();

  std::uint64_t dispatched() const { return dispatched_.load(); }
  std::uint64_t idle_sleeps() const { return idle_sleeps_.load(); }

 private:
  void loop();
  void drain();

  PublicationQueue& queue_;
  CombinerState& state_;
  Dispatch dispatch_;
  IdlePolicy idle_;
  std::thread thread_;
  std::once_flag shutdown_once_;
  std::atomic<std::uint64_t> dispatched_{0};
  std::atomic<std::uint64_t> idle_sleeps_{0};
};

/// Publishes `rec` and, for Shutdown races, resolves it locally. Does not wait.
void publish(PublicationQueue& queue, CombinerState& state, OpRecord& rec);

/// Spins until the combiner has dequeued the record.
OpStatus await_handoff(OpRecord& rec, WaitCounters* counters = nullptr);

}  // namespace fcrbt
