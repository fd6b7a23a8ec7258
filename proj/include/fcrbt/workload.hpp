#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fcrbt/concurrent_map.hpp"
#include "fcrbt/ops.hpp"

namespace fcrbt {

/// Benchmark and stress workload. Defaults:
/// a 10/10/80 insert/delete/get mix over keys [0, 2000] with a 1000-node tree.
struct WorkloadSpec {
  int insert_pct = 10;
  int delete_pct = 10;
  int get_pct = 80;
  std::int64_t key_min = 0;
  std::int64_t key_max = 2000;
  std::size_t max_nodes = 1000;
  std::size_t total_ops = 640000;
  std::vector<std::size_t> thread_counts{1, 2, 4, 8, 16, 32, 48, 64};
  std::uint64_t seed = 1;
  std::vector<VariantId> variants = default_variants();
  bool warmup = true;
  unsigned watchdog_secs = 1800;
};

/// Empty when the spec is usable, otherwise one line per offending field.
std::vector<std::string> spec_errors(const WorkloadSpec& spec);

/// Throws std::invalid_argument carrying spec_errors().
void check_spec(const WorkloadSpec& spec);

/// Ops thread `thread_index` runs when the total is split over `threads`:
/// an even share, with the remainder going to thread 0.
std::size_t ops_for_thread(std::size_t total_ops, std::size_t threads, std::size_t thread_index);

/// Deterministic per (seed, thread_index) stream of `count` ops.
std::vector<Op> generate_workload(const WorkloadSpec& spec, std::size_t thread_index, std::size_t count);

/// `count` distinct keys for pre-populating a map, drawn from a stream
/// independent of every worker's stream.
std::vector<std::int64_t> warmup_keys(const WorkloadSpec& spec, std::size_t count);

}  // namespace fcrbt
