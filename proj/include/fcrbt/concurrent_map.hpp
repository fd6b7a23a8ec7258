#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcrbt/combiner.hpp"
#include "fcrbt/op_record.hpp"
#include "fcrbt/rbtree.hpp"
#include "fcrbt/wait_strategy.hpp"

namespace fcrbt {

enum class VariantId { V1, V2, V3, V4, V5, V6, CoarseLock, FutureWork };

std::string_view to_string(VariantId id);
std::optional<VariantId> parse_variant(std::string_view name);

/// The seven variants compared by default (FutureWork is opt-in).
std::vector<VariantId> default_variants();
std::vector<VariantId> all_variants();

struct VariantConfig {
  VariantId id = VariantId::V1;
  WaitStrategy get_wait;
  WaitStrategy write_wait;
  bool soft_ops = false;
  bool gets_bypass_queue = false;
  StopWorldScope stop_world_scope = StopWorldScope::Global;
  // When false the producer enqueues and goes straight to its completion
  // wait instead of first spinning until the combiner dequeues.
  bool handoff_wait = true;

  static VariantConfig preset(VariantId id);
};

struct MapStats {
  std::uint64_t dispatched = 0;
  std::uint64_t stop_worlds = 0;
  std::uint64_t compactions = 0;
  std::uint64_t rejected_full = 0;
  std::uint64_t v6_get_retries = 0;
  // Stop-world phases that ended with more physical nodes than the budget.
  std::uint64_t budget_violations = 0;
  // Caller-executed operations that overlapped an exclusive phase.
  std::uint64_t overlap_violations = 0;
  std::size_t max_physical_after_stop_world = 0;
  // Delegated operations not yet finished: pending-get and pending-op
  // counters plus raised per-thread marks. Zero at quiescence.
  std::int64_t outstanding = 0;
};

/// Test-only interception points. Must be installed before any operation
/// is submitted.
struct TestHooks {
  // Caller thread, start of any operation the combiner handed back.
  std::function<void(OpKind, std::int64_t key)> delegated;
  // Caller thread, delegated soft op, node located, mark not yet flipped.
  std::function<void(OpKind, std::int64_t key)> before_flip;
  std::function<void(OpKind, std::int64_t key)> after_flip;
  // V6 get: own pending mark raised, stop flag not yet re-checked.
  std::function<void(std::int64_t key)> after_get_mark;
  // Combiner: stop signal raised, drain not yet awaited.
  std::function<void()> stop_world_raised;
  // Combiner: end of every stop-world phase, still exclusive.
  std::function<void(const RBTree&)> stop_world_done;
};

/// One mutation in the order it took effect. Stamps are totally ordered
/// and agree with the order of conflicting effects.
struct SerializationEntry {
  std::uint64_t stamp = 0;
  OpKind kind = OpKind::Insert;
  std::int64_t key = 0;
  std::int64_t value = 0;
  bool changed = false;
};

/// Ordered int64 map shared by up to max_threads registered threads.
/// Every operation takes the caller's registration.
class ConcurrentMap {
 public:
  virtual ~ConcurrentMap() = default;

  virtual ThreadRegistration register_thread() = 0;

  virtual std::optional<std::int64_t> get(ThreadRegistration& reg, std::int64_t key) = 0;
  /// True iff the key was logically absent and is now present.
  virtual bool insert(ThreadRegistration& reg, std::int64_t key, std::int64_t value) = 0;
  /// True iff the key was logically present and is now absent.
  virtual bool erase(ThreadRegistration& reg, std::int64_t key) = 0;

  virtual void shutdown() = 0;

  virtual const VariantConfig& config() const = 0;
  virtual MapStats stats() const = 0;

  // The following require quiescence: no operation in flight.
  virtual ValidationReport validate() const = 0;
  virtual std::vector<std::int64_t> live_keys() const = 0;
  virtual std::size_t physical_count() const = 0;
  virtual std::size_t live_count() const = 0;

  virtual void set_test_hooks(TestHooks hooks) = 0;
  virtual void record_serialization(bool on) = 0;
  virtual std::vector<SerializationEntry> serialization_log() const = 0;
};

/// Throws std::invalid_argument for zero sizes or a config whose flags do
/// not describe a supported protocol.
std::unique_ptr<ConcurrentMap> make_variant(const VariantConfig& config, std::size_t max_nodes,
                                            std::size_t max_threads);

inline std::unique_ptr<ConcurrentMap> make_variant(VariantId id, std::size_t max_nodes, std::size_t max_threads) {
  return make_variant(VariantConfig::preset(id), max_nodes, max_threads);
}

}  // namespace fcrbt
