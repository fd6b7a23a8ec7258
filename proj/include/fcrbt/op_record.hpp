#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace fcrbt {

struct TreeNode;

enum class OpKind : std::uint8_t { Get, Insert, Delete };

const char* to_string(OpKind kind);

// Pending -> Claimed -> (CallerExecutes | Done), CallerExecutes -> Done.
// Shutdown is terminal and may replace Pending or Claimed.
enum class OpStatus : std::uint32_t { Pending, Claimed, CallerExecutes, Done, Shutdown };

inline bool in_flight(OpStatus s) { return s == OpStatus::Pending || s == OpStatus::Claimed; }

/// A published operation. The owner writes the request fields before
/// publishing; the combiner writes the result fields before releasing the
/// status, and the owner reads them after acquiring it.
struct OpRecord {
  OpKind kind = OpKind::Get;
  std::int64_t key = 0;
  std::int64_t value = 0;
  std::atomic<OpStatus> status{OpStatus::Done};

  bool changed = false;
  std::optional<std::int64_t> found;

  std::size_t owner = 0;
  std::uint64_t sequence = 0;
  // Node located by the combiner for a delegated soft operation.
  TreeNode* target = nullptr;

  void prepare(OpKind k, std::int64_t key_, std::int64_t value_) {
    kind = k;
    key = key_;
    value = value_;
    changed = false;
    found.reset();
    target = nullptr;
    status.store(OpStatus::Pending, std::memory_order_release);
  }

  bool advance(OpStatus from, OpStatus to) {
    return status.compare_exchange_strong(from, to, std::memory_order_acq_rel);
  }

  /// Publishes a final or hand-back status and wakes a sleeping owner.
  void release(OpStatus to) {
    status.store(to, std::memory_order_release);
    status.notify_all();
  }
};

}  // namespace fcrbt
