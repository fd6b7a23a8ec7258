#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fcrbt/harness/history.hpp"
#include "fcrbt/harness/oracle.hpp"

namespace fcrbt::harness {

inline constexpr std::size_t kMaxHistoryEvents = 20;

struct LinearizabilityResult {
  bool linearizable = false;
  // Event ids in a legal sequential order, when one exists.
  std::vector<std::size_t> witness;
};

/// Exhaustive search for a sequential order that respects real-time
/// precedence (a.end < b.start) and reproduces every observed result when
/// replayed against `initial`. Throws std::length_error above
/// kMaxHistoryEvents and std::invalid_argument for malformed events.
LinearizabilityResult check_linearizable(std::span<const HistoryEvent> history, const OracleMap& initial = OracleMap{});

}  // namespace fcrbt::harness
