#pragma once

#include <cstdint>
#include <optional>

#include "fcrbt/concurrent_map.hpp"

namespace fcrbt {

struct Op {
  OpKind kind = OpKind::Get;
  std::int64_t key = 0;
  std::int64_t value = 0;

  bool operator==(const Op&) const = default;
};

/// Observable outcome of one map operation: `changed` for insert/delete,
/// `value` for get.
struct OpResult {
  bool changed = false;
  std::optional<std::int64_t> value;

  bool operator==(const OpResult&) const = default;
};

inline OpResult apply(ConcurrentMap& map, ThreadRegistration& reg, const Op& op) {
  switch (op.kind) {
    case OpKind::Get: return {false, map.get(reg, op.key)};
    case OpKind::Insert: return {map.insert(reg, op.key, op.value), std::nullopt};
    case OpKind::Delete: return {map.erase(reg, op.key), std::nullopt};
  }
  return {};
}

}  // namespace fcrbt
