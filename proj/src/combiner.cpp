#include "fcrbt/combiner.hpp"

#include <string>

namespace fcrbt {

ThreadRegistration::ThreadRegistration(ThreadRegistration&& other) noexcept
    : state_(other.state_), slot_(other.slot_) {
  other.state_ = nullptr;
  other.slot_ = nullptr;
}

ThreadRegistration& ThreadRegistration::operator=(ThreadRegistration&& other) noexcept {
  if (this != &other) {
    reset();
    state_ = other.state_;
    slot_ = other.slot_;
    other.state_ = nullptr;
    other.slot_ = nullptr;
  }
  return *this;
}

ThreadRegistration::~ThreadRegistration() { reset(); }

void ThreadRegistration::reset() {
  if (state_ != nullptr && slot_ != nullptr) state_->unregister(*slot_);
  state_ = nullptr;
  slot_ = nullptr;
}

CombinerState::CombinerState(std::size_t max_threads)
    : max_threads_(max_threads), slots_(std::make_unique<ThreadSlot[]>(max_threads)) {
  if (max_threads == 0) throw std::invalid_argument("max_threads must be positive");
  for (std::size_t i = 0; i < max_threads; ++i) slots_[i].index = i;
}

ThreadRegistration CombinerState::register_thread() {
  // Held by the combiner for the whole of a per-thread stop-world, so a
  // newly registered thread can never miss a raised flag.
  std::lock_guard lock(registry_mutex_);
  const auto me = std::this_thread::get_id();
  ThreadSlot* free_slot = nullptr;
  for (std::size_t i = 0; i < max_threads_; ++i) {
    ThreadSlot& s = slots_[i];
    if (s.in_use.load()) {
      if (s.owner == me) throw RegistrationError("thread already registered");
    } else if (free_slot == nullptr) {
      free_slot = &s;
    }
  }
  if (free_slot == nullptr)
    throw RegistrationError("registration capacity of " + std::to_string(max_threads_) + " threads exhausted");
  free_slot->owner = me;
  free_slot->stop_flag.store(false);
  free_slot->pending_mark.store(false);
  free_slot->waits = {};
  free_slot->in_use.store(true);
  return ThreadRegistration(this, free_slot);
}

void CombinerState::unregister(ThreadSlot& slot) {
  std::lock_guard lock(registry_mutex_);
  slot.owner = {};
  slot.in_use.store(false);
}

std::size_t CombinerState::registered() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < max_threads_; ++i)
    if (slots_[i].in_use.load()) ++n;
  return n;
}

void CombinerState::enter_stop_world(StopWorldScope scope, const std::function<void()>& on_raised) {
  std::uint32_t spins = 0;
  if (scope == StopWorldScope::Global) {
    stop_world.store(true);
    stop_world_active_.store(true);
    if (on_raised) on_raised();
    while (pending_ops.load() != 0) relax(spins);
  } else {
    stop_world_lock_ = std::unique_lock(registry_mutex_);
    stop_world_active_.store(true);
    for (std::size_t i = 0; i < max_threads_; ++i)
      if (slots_[i].in_use.load()) slots_[i].stop_flag.store(true);
    if (on_raised) on_raised();
    for (std::size_t i = 0; i < max_threads_; ++i) {
      ThreadSlot& s = slots_[i];
      if (!s.in_use.load()) continue;
      while (s.pending_mark.load()) relax(spins);
    }
  }
  begin_exclusive();
}

void CombinerState::exit_stop_world(StopWorldScope scope) {
  end_exclusive();
  stop_world_active_.store(false);
  if (scope == StopWorldScope::Global) {
    stop_world.store(false);
    stop_world.notify_all();
  } else {
    for (std::size_t i = 0; i < max_threads_; ++i) {
      ThreadSlot& s = slots_[i];
      if (!s.in_use.load()) continue;
      s.stop_flag.store(false);
      s.stop_flag.notify_all();
    }
    stop_world_lock_.unlock();
    stop_world_lock_ = {};
  }
}

void CombinerState::release_all_stop_flags() {
  stop_world.store(false);
  stop_world.notify_all();
  for (std::size_t i = 0; i < max_threads_; ++i) {
    slots_[i].stop_flag.store(false);
    slots_[i].stop_flag.notify_all();
  }
}

Combiner::Combiner(PublicationQueue& queue, CombinerState& state, Dispatch dispatch, IdlePolicy idle)
    : queue_(queue), state_(state), dispatch_(std::move(dispatch)), idle_(idle) {}

Combiner::~Combiner() { shutdown(); }

void Combiner::start() { thread_ = std::thread([this] { loop(); }); }

void Combiner::shutdown() {
  std::call_once(shutdown_once_, [this] {
    state_.running.store(false);
    queue_.ring();
    if (thread_.joinable())
      thread_.join();
    else
      drain();
  });
}

void Combiner::loop() {
  std::uint64_t sequence = 0;
  std::uint32_t idle = 0;
  while (state_.running.load(std::memory_order_acquire)) {
    OpRecord* rec = queue_.try_pop();
    if (rec == nullptr) {
      if (++idle < idle_.spins) {
        std::this_thread::yield();
        continue;
      }
      const std::uint32_t seen = queue_.doorbell();
      rec = queue_.try_pop();
      if (rec == nullptr) {
        if (!state_.running.load()) break;
        idle_sleeps_.fetch_add(1, std::memory_order_relaxed);
        queue_.wait_doorbell(seen);
        idle = 0;
        continue;
      }
    }
    idle = 0;
    if (!rec->advance(OpStatus::Pending, OpStatus::Claimed)) continue;
    rec->sequence = ++sequence;
    dispatched_.fetch_add(1, std::memory_order_relaxed);
    dispatch_(*rec);
  }
  drain();
}

void Combiner::drain() {
  state_.terminated.store(true);
  state_.release_all_stop_flags();
  while (OpRecord* rec = queue_.try_pop()) {
    if (rec->advance(OpStatus::Pending, OpStatus::Shutdown)) rec->status.notify_all();
  }
}

void publish(PublicationQueue& queue, CombinerState& state, OpRecord& rec) {
  queue.push(&rec);
  // The combiner may have drained just before our push landed.
  std::atomic_thread_fence(std::memory_order_seq_cst);
  if (state.terminated.load() && rec.advance(OpStatus::Pending, OpStatus::Shutdown)) rec.status.notify_all();
}

OpStatus await_handoff(OpRecord& rec, WaitCounters* counters) {
  if (counters != nullptr) ++counters->handoff_phases;
  std::uint32_t spins = 0;
  OpStatus s = rec.status.load(std::memory_order_acquire);
  while (s == OpStatus::Pending) {
    relax(spins);
    s = rec.status.load(std::memory_order_acquire);
  }
  return s;
}

}  // namespace fcrbt
