#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "fcrbt/ops.hpp"
#include "fcrbt/rbtree.hpp"

namespace fcrbt::harness {

/// Reference sequential map. With a capacity, inserting a new key while
/// `capacity` keys are present is refused, matching the variants.
class OracleMap {
 public:
  explicit OracleMap(std::size_t capacity = RBTree::kUnbounded) : capacity_(capacity) {}

  OpResult apply(const Op& op);

  bool insert(std::int64_t key, std::int64_t value);
  bool erase(std::int64_t key);
  std::optional<std::int64_t> get(std::int64_t key) const;

  std::size_t size() const { return entries_.size(); }
  std::vector<std::int64_t> keys() const;
  const std::map<std::int64_t, std::int64_t>& entries() const { return entries_; }

  bool operator==(const OracleMap& other) const { return entries_ == other.entries_; }

 private:
  std::map<std::int64_t, std::int64_t> entries_;
  std::size_t capacity_;
};

struct Replay {
  std::vector<OpResult> results;
  std::vector<std::int64_t> final_keys;
};

Replay replay_sequential(std::span<const Op> ops, std::size_t capacity = RBTree::kUnbounded);

}  // namespace fcrbt::harness
