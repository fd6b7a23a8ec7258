#include "fcrbt/harness/oracle.hpp"

namespace fcrbt::harness {

bool OracleMap::insert(std::int64_t key, std::int64_t value) {
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second = value;
    return false;
  }
  if (entries_.size() >= capacity_) return false;
  entries_.emplace(key, value);
  return true;
}

bool OracleMap::erase(std::int64_t key) { return entries_.erase(key) != 0; }

std::optional<std::int64_t> OracleMap::get(std::int64_t key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

OpResult OracleMap::apply(const Op& op) {
  switch (op.kind) {
    case OpKind::Get: return {false, get(op.key)};
    case OpKind::Insert: return {insert(op.key, op.value), std::nullopt};
    case OpKind::Delete: return {erase(op.key), std::nullopt};
  }
  return {};
}

std::vector<std::int64_t> OracleMap::keys() const {
  std::vector<std::int64_t> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

Replay replay_sequential(std::span<const Op> ops, std::size_t capacity) {
  OracleMap oracle(capacity);
  Replay r;
  r.results.reserve(ops.size());
  for (const Op& op : ops) r.results.push_back(oracle.apply(op));
  r.final_keys = oracle.keys();
  return r;
}

}  // namespace fcrbt::harness
