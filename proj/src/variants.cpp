#include <mutex>
#include <stdexcept>
#include <string>

#include "fcrbt/concurrent_map.hpp"

namespace fcrbt {

std::string_view to_string(VariantId id) {
  switch (id) {
    case VariantId::V1: return "V1";
    case VariantId::V2: return "V2";
    case VariantId::V3: return "V3";
    case VariantId::V4: return "V4";
    case VariantId::V5: return "V5";
    case VariantId::V6: return "V6";
    case VariantId::CoarseLock: return "CoarseLock";
    case VariantId::FutureWork: return "FutureWork";
  }
  return "?";
}

std::optional<VariantId> parse_variant(std::string_view name) {
  for (VariantId id : all_variants())
    if (to_string(id) == name) return id;
  return std::nullopt;
}

std::vector<VariantId> default_variants() {
  return {VariantId::V1, VariantId::V2, VariantId::V3, VariantId::V4,
          VariantId::V5, VariantId::V6, VariantId::CoarseLock};
}

std::vector<VariantId> all_variants() {
  auto v = default_variants();
  v.push_back(VariantId::FutureWork);
  return v;
}

VariantConfig VariantConfig::preset(VariantId id) {
  VariantConfig c;
  c.id = id;
  switch (id) {
    case VariantId::V1:
      c.get_wait = WaitStrategy::sleep_awake();
      c.write_wait = WaitStrategy::sleep_awake();
      break;
    case VariantId::V2:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::sleep_awake();
      break;
    case VariantId::V3:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::backoff();
      break;
    case VariantId::V4:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::spin();
      break;
    case VariantId::V5:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::per_thread_flag();
      c.soft_ops = true;
      break;
    case VariantId::V6:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::per_thread_flag();
      c.soft_ops = true;
      c.gets_bypass_queue = true;
      c.stop_world_scope = StopWorldScope::PerThread;
      break;
    case VariantId::FutureWork:
      c.get_wait = WaitStrategy::spin();
      c.write_wait = WaitStrategy::sleep_awake();
      c.soft_ops = true;
      c.gets_bypass_queue = true;
      c.stop_world_scope = StopWorldScope::PerThread;
      c.handoff_wait = false;
      break;
    case VariantId::CoarseLock:
      break;
  }
  return c;
}

namespace {

/// Mutation log used in test mode. Effects run under the log lock so the
/// stamp order matches the order in which conflicting effects landed.
class SerializationLog {
 public:
  template <typename Effect>
  bool record(OpKind kind, std::int64_t key, std::int64_t value, Effect&& effect) {
    if (!on_.load(std::memory_order_relaxed)) return effect();
    std::lock_guard lock(mu_);
    const bool changed = effect();
    entries_.push_back({++next_, kind, key, value, changed});
    return changed;
  }

  void enable(bool on) { on_.store(on); }

  std::vector<SerializationEntry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

 private:
  std::atomic<bool> on_{false};
  mutable std::mutex mu_;
  std::vector<SerializationEntry> entries_;
  std::uint64_t next_ = 0;
};

// Physical insert honouring the logical capacity: a new key is refused
// while `max_nodes` keys are live.
bool insert_with_capacity(RBTree& tree, std::int64_t key, std::int64_t value, std::size_t max_nodes,
                          std::atomic<std::uint64_t>& rejected) {
  const bool was_live = tree.get(key).has_value();
  if (!was_live && tree.live_count() >= max_nodes) {
    rejected.fetch_add(1, std::memory_order_relaxed);
    return false;
  }
  tree.insert(key, value);
  return !was_live;
}

void check_config(const VariantConfig& c) {
  if (c.id == VariantId::CoarseLock) return;
  auto reject = [](const std::string& why) { throw std::invalid_argument("unsupported variant config: " + why); };
  if (c.gets_bypass_queue && !(c.soft_ops && c.stop_world_scope == StopWorldScope::PerThread))
    reject("queue-bypassing gets need soft operations with per-thread stop flags");
  if (c.stop_world_scope == StopWorldScope::PerThread && !c.soft_ops)
    reject("per-thread stop-world only applies to soft-operation variants");
  if (!c.handoff_wait && !c.gets_bypass_queue) reject("non-blocking publication requires queue-bypassing gets");
  for (const WaitStrategy* w : {&c.get_wait, &c.write_wait}) {
    if (w->kind == WaitKind::BackoffSpin && w->backoff_ms.empty()) reject("empty backoff schedule");
    if (w->kind == WaitKind::PerThreadFlag && !c.soft_ops) reject("per-thread-flag wait needs a stop-world signal");
  }
}

void check_registration(const ThreadRegistration& reg, const CombinerState& state) {
  if (!reg.valid() || reg.state() != &state) throw RegistrationError("thread is not registered with this map");
}

class FlatCombiningMap final : public ConcurrentMap {
 public:
  FlatCombiningMap(const VariantConfig& config, std::size_t max_nodes, std::size_t max_threads)
      : cfg_(config),
        max_nodes_(max_nodes),
        tree_(max_nodes),
        state_(max_threads),
        queue_(max_threads),
        combiner_(queue_, state_, [this](OpRecord& rec) { dispatch(rec); }) {
    combiner_.start();
  }

  ~FlatCombiningMap() override { combiner_.shutdown(); }

  ThreadRegistration register_thread() override { return state_.register_thread(); }

  std::optional<std::int64_t> get(ThreadRegistration& reg, std::int64_t key) override {
    check_registration(reg, state_);
    if (cfg_.gets_bypass_queue) {
      if (state_.terminated.load()) throw ShutdownError();
      return bypass_get(reg.slot(), key);
    }
    return submit(reg.slot(), OpKind::Get, key, 0).found;
  }

  bool insert(ThreadRegistration& reg, std::int64_t key, std::int64_t value) override {
    check_registration(reg, state_);
    return submit(reg.slot(), OpKind::Insert, key, value).changed;
  }

  bool erase(ThreadRegistration& reg, std::int64_t key) override {
    check_registration(reg, state_);
    return submit(reg.slot(), OpKind::Delete, key, 0).changed;
  }

  void shutdown() override { combiner_.shutdown(); }

  const VariantConfig& config() const override { return cfg_; }

  MapStats stats() const override {
    MapStats s;
    s.dispatched = combiner_.dispatched();
    s.stop_worlds = stop_worlds_.load();
    s.compactions = compactions_.load();
    s.rejected_full = rejected_full_.load();
    s.v6_get_retries = get_retries_.load();
    s.budget_violations = budget_violations_.load();
    s.overlap_violations = overlap_violations_.load();
    s.max_physical_after_stop_world = max_physical_after_stop_world_.load();
    s.outstanding = state_.pending_gets.load() + state_.pending_ops.load();
    for (std::size_t i = 0; i < state_.max_threads(); ++i)
      if (state_.slot(i).pending_mark.load()) ++s.outstanding;
    return s;
  }

  ValidationReport validate() const override { return tree_.validate(); }
  std::vector<std::int64_t> live_keys() const override { return tree_.live_keys(); }
  std::size_t physical_count() const override { return tree_.physical_count(); }
  std::size_t live_count() const override { return tree_.live_count(); }

  void set_test_hooks(TestHooks hooks) override { hooks_ = std::move(hooks); }
  void record_serialization(bool on) override { log_.enable(on); }
  std::vector<SerializationEntry> serialization_log() const override { return log_.entries(); }

 private:
  struct Outcome {
    bool changed = false;
    std::optional<std::int64_t> found;
  };

  Outcome submit(ThreadSlot& slot, OpKind kind, std::int64_t key, std::int64_t value) {
    if (!state_.running.load() || state_.terminated.load()) throw ShutdownError();
    OpRecord& rec = slot.record;
    rec.prepare(kind, key, value);
    rec.owner = slot.index;
    publish(queue_, state_, rec);
    if (cfg_.handoff_wait) await_handoff(rec, &slot.waits);

    WaitContext ctx;
    ctx.counters = &slot.waits;
    if (cfg_.stop_world_scope == StopWorldScope::PerThread)
      ctx.stop_signal = &slot.stop_flag;
    else if (cfg_.soft_ops)
      ctx.stop_signal = &state_.stop_world;

    OpStatus s = wait_for_done(kind == OpKind::Get ? cfg_.get_wait : cfg_.write_wait, rec, ctx);
    if (s == OpStatus::CallerExecutes) {
      execute_delegated(slot, rec);
      s = OpStatus::Done;
    }
    if (s == OpStatus::Shutdown) throw ShutdownError();
    return {rec.changed, rec.found};
  }

  // Runs on the owner's thread after the combiner handed the record back.
  void execute_delegated(ThreadSlot& slot, OpRecord& rec) {
    if (hooks_.delegated) hooks_.delegated(rec.kind, rec.key);
    const std::uint64_t before = state_.epoch();
    switch (rec.kind) {
      case OpKind::Get:
        rec.found = tree_.get(rec.key);
        break;
      case OpKind::Delete:
        if (hooks_.before_flip) hooks_.before_flip(rec.kind, rec.key);
        rec.changed = log_.record(rec.kind, rec.key, 0, [&] { return tree_.soft_erase(*rec.target); });
        if (hooks_.after_flip) hooks_.after_flip(rec.kind, rec.key);
        break;
      case OpKind::Insert:
        if (hooks_.before_flip) hooks_.before_flip(rec.kind, rec.key);
        rec.changed =
            log_.record(rec.kind, rec.key, rec.value, [&] { return tree_.soft_insert(*rec.target, rec.value); });
        if (hooks_.after_flip) hooks_.after_flip(rec.kind, rec.key);
        break;
    }
    note_overlap(before);

    if (!cfg_.soft_ops)
      state_.pending_gets.fetch_sub(1);
    else if (cfg_.stop_world_scope == StopWorldScope::Global)
      state_.pending_ops.fetch_sub(1);
    else
      slot.pending_mark.store(false);
    rec.advance(OpStatus::CallerExecutes, OpStatus::Done);
  }

  std::optional<std::int64_t> bypass_get(ThreadSlot& slot, std::int64_t key) {
    for (;;) {
      if (slot.stop_flag.load()) {
        slot.stop_flag.wait(true);
        continue;
      }
      slot.pending_mark.store(true);
      if (hooks_.after_get_mark) hooks_.after_get_mark(key);
      if (slot.stop_flag.load()) {
        // Lost the race with a stop-world; back off so the combiner can drain.
        slot.pending_mark.store(false);
        get_retries_.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      const std::uint64_t before = state_.epoch();
      auto result = tree_.get(key);
      note_overlap(before);
      slot.pending_mark.store(false);
      return result;
    }
  }

  void note_overlap(std::uint64_t before) {
    const std::uint64_t after = state_.epoch();
    if ((before & 1) != 0 || before != after) overlap_violations_.fetch_add(1, std::memory_order_relaxed);
  }

  // ---- combiner thread only below ----

  void dispatch(OpRecord& rec) {
    if (cfg_.soft_ops)
      dispatch_soft(rec);
    else
      dispatch_exclusive_writes(rec);
  }

  void dispatch_exclusive_writes(OpRecord& rec) {
    if (rec.kind == OpKind::Get) {
      state_.pending_gets.fetch_add(1);
      rec.release(OpStatus::CallerExecutes);
      return;
    }
    std::uint32_t spins = 0;
    while (state_.pending_gets.load() != 0) relax(spins);
    state_.begin_exclusive();
    if (rec.kind == OpKind::Insert)
      rec.changed = log_.record(rec.kind, rec.key, rec.value, [&] {
        return insert_with_capacity(tree_, rec.key, rec.value, max_nodes_, rejected_full_);
      });
    else
      rec.changed = log_.record(rec.kind, rec.key, 0, [&] { return tree_.erase(rec.key); });
    state_.end_exclusive();
    rec.release(OpStatus::Done);
  }

  void delegate(OpRecord& rec) {
    if (cfg_.stop_world_scope == StopWorldScope::Global)
      state_.pending_ops.fetch_add(1);
    else
      state_.slot(rec.owner).pending_mark.store(true);
    rec.release(OpStatus::CallerExecutes);
  }

  void dispatch_soft(OpRecord& rec) {
    if (rec.kind == OpKind::Get) {
      delegate(rec);
      return;
    }
    // Physical nodes only appear inside stop-world, which this thread
    // alone enters, so the lookup stays valid until the caller is done.
    TreeNode* node = tree_.find(rec.key);
    if (node != nullptr) {
      rec.target = node;
      delegate(rec);
      return;
    }
    if (rec.kind == OpKind::Delete) {
      rec.changed = log_.record(rec.kind, rec.key, 0, [] { return false; });
      rec.release(OpStatus::Done);
      return;
    }
    stop_world_insert(rec);
  }

  void stop_world_insert(OpRecord& rec) {
    state_.enter_stop_world(cfg_.stop_world_scope, hooks_.stop_world_raised);
    stop_worlds_.fetch_add(1, std::memory_order_relaxed);
    rec.changed = log_.record(rec.kind, rec.key, rec.value, [&] {
      return insert_with_capacity(tree_, rec.key, rec.value, max_nodes_, rejected_full_);
    });
    if (tree_.physical_count() > max_nodes_) {
      tree_.compact();
      compactions_.fetch_add(1, std::memory_order_relaxed);
    }
    const std::size_t physical = tree_.physical_count();
    if (physical > max_nodes_) budget_violations_.fetch_add(1, std::memory_order_relaxed);
    if (physical > max_physical_after_stop_world_.load()) max_physical_after_stop_world_.store(physical);
    if (hooks_.stop_world_done) hooks_.stop_world_done(tree_);
    state_.exit_stop_world(cfg_.stop_world_scope);
    rec.release(OpStatus::Done);
  }

  const VariantConfig cfg_;
  const std::size_t max_nodes_;
  RBTree tree_;
  CombinerState state_;
  PublicationQueue queue_;
  TestHooks hooks_;
  SerializationLog log_;
  std::atomic<std::uint64_t> stop_worlds_{0};
  std::atomic<std::uint64_t> compactions_{0};
  std::atomic<std::uint64_t> rejected_full_{0};
  std::atomic<std::uint64_t> get_retries_{0};
  std::atomic<std::uint64_t> budget_violations_{0};
  std::atomic<std::uint64_t> overlap_violations_{0};
  std::atomic<std::size_t> max_physical_after_stop_world_{0};
  Combiner combiner_;
};

/// Baseline: one mutex around a sequential tree.
class CoarseLockMap final : public ConcurrentMap {
 public:
  CoarseLockMap(const VariantConfig& config, std::size_t max_nodes, std::size_t max_threads)
      : cfg_(config), max_nodes_(max_nodes), tree_(max_nodes), registry_(max_threads) {}

  ThreadRegistration register_thread() override { return registry_.register_thread(); }

  std::optional<std::int64_t> get(ThreadRegistration& reg, std::int64_t key) override {
    check_registration(reg, registry_);
    std::lock_guard lock(mu_);
    check_open();
    return tree_.get(key);
  }

  bool insert(ThreadRegistration& reg, std::int64_t key, std::int64_t value) override {
    check_registration(reg, registry_);
    std::lock_guard lock(mu_);
    check_open();
    return log_.record(OpKind::Insert, key, value,
                       [&] { return insert_with_capacity(tree_, key, value, max_nodes_, rejected_full_); });
  }

  bool erase(ThreadRegistration& reg, std::int64_t key) override {
    check_registration(reg, registry_);
    std::lock_guard lock(mu_);
    check_open();
    return log_.record(OpKind::Delete, key, 0, [&] { return tree_.erase(key); });
  }

  void shutdown() override {
    std::lock_guard lock(mu_);
    registry_.running.store(false);
    registry_.terminated.store(true);
  }

  const VariantConfig& config() const override { return cfg_; }

  MapStats stats() const override {
    MapStats s;
    s.rejected_full = rejected_full_.load();
    return s;
  }

  ValidationReport validate() const override {
    std::lock_guard lock(mu_);
    return tree_.validate();
  }
  std::vector<std::int64_t> live_keys() const override {
    std::lock_guard lock(mu_);
    return tree_.live_keys();
  }
  std::size_t physical_count() const override {
    std::lock_guard lock(mu_);
    return tree_.physical_count();
  }
  std::size_t live_count() const override {
    std::lock_guard lock(mu_);
    return tree_.live_count();
  }

  void set_test_hooks(TestHooks) override {}
  void record_serialization(bool on) override { log_.enable(on); }
  std::vector<SerializationEntry> serialization_log() const override { return log_.entries(); }

 private:
  void check_open() const {
    if (registry_.terminated.load()) throw ShutdownError();
  }

  const VariantConfig cfg_;
  const std::size_t max_nodes_;
  mutable std::mutex mu_;
  RBTree tree_;
  CombinerState registry_;
  SerializationLog log_;
  std::atomic<std::uint64_t> rejected_full_{0};
};

}  // namespace

std::unique_ptr<ConcurrentMap> make_variant(const VariantConfig& config, std::size_t max_nodes,
                                            std::size_t max_threads) {
  if (max_nodes == 0) throw std::invalid_argument("max_nodes must be positive");
  if (max_threads == 0) throw std::invalid_argument("max_threads must be positive");
  check_config(config);
  if (config.id == VariantId::CoarseLock) return std::make_unique<CoarseLockMap>(config, max_nodes, max_threads);
  return std::make_unique<FlatCombiningMap>(config, max_nodes, max_threads);
}

}  // namespace fcrbt
