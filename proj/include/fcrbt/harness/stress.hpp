#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fcrbt/concurrent_map.hpp"
#include "fcrbt/ops.hpp"
#include "fcrbt/workload.hpp"

namespace fcrbt::harness {

struct StressOptions {
  VariantConfig variant = VariantConfig::preset(VariantId::V1);
  std::size_t threads = 4;
  std::size_t ops_per_thread = 10000;
  std::uint64_t seed = 1;
  std::size_t max_nodes = 1000;
  std::int64_t key_min = 0;
  std::int64_t key_max = 2000;
  int insert_pct = 10;
  int delete_pct = 10;
  std::size_t prepopulate = 0;
  // Run the structural validator inside every stop-world phase.
  bool validate_in_stop_world = true;
  std::chrono::milliseconds watchdog{std::chrono::minutes(5)};
};

struct StressReport {
  bool completed = false;
  ValidationReport validation;
  // Mutation results and final key set agree with an oracle replay of the
  // map's serialization log.
  bool replay_results_match = false;
  bool replay_keys_match = false;
  // Per key, successful inserts minus successful deletes equals the change
  // in presence. Independent of any ordering information.
  bool conservation_ok = false;
  std::uint64_t stop_world_checks = 0;
  std::uint64_t stop_world_budget_violations = 0;
  std::uint64_t stop_world_invalid_trees = 0;
  MapStats stats;
  double seconds = 0;
  std::vector<std::vector<OpResult>> results;  // per thread
  std::string failure;

  bool passed() const;
};

/// Randomized mixed workload under a watchdog. Aborts the process with a
/// progress dump if the watchdog expires.
StressReport run_stress(const StressOptions& options);

}  // namespace fcrbt::harness
