#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcrbt/concurrent_map.hpp"
#include "fcrbt/workload.hpp"

namespace fcrbt {

struct BenchResult {
  VariantId variant = VariantId::V1;
  std::size_t threads = 0;
  std::size_t total_ops = 0;
  std::uint64_t wall_ns = 0;
  double ops_per_sec = 0;
  std::uint64_t gets = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t stop_worlds = 0;
  std::uint64_t compactions = 0;
  // Fold of every op result, thread by thread; not part of the CSV.
  std::uint64_t checksum = 0;
  bool failed = false;
  std::string error;
};

inline constexpr const char* kCsvHeader =
    "variant,threads,total_ops,wall_ns,ops_per_sec,gets,inserts,deletes,stop_worlds,compactions";

/// Progress callback, invoked once per finished cell.
using BenchProgress = std::function<void(const BenchResult&)>;

/// Runs every (variant, thread count) cell on a fresh map. A cell whose
/// map cannot be built, or whose tree fails validation, is marked failed
/// and the sweep continues. A cell that outlives spec.watchdog_secs aborts
/// the process with a progress dump.
std::vector<BenchResult> run_bench(const WorkloadSpec& spec, const BenchProgress& progress = {});

/// Runs one cell.
BenchResult run_cell(const WorkloadSpec& spec, VariantId variant, std::size_t threads);

void write_csv(const std::vector<BenchResult>& results, std::ostream& out);
/// Throws std::runtime_error with the OS error when `path` cannot be written.
void emit_csv(const std::vector<BenchResult>& results, const std::filesystem::path& path);

struct ClaimCheck {
  std::string claim;
  std::size_t threads = 0;
  bool agrees = false;
  std::string detail;
};

/// Compares rows against the qualitative claims: per-thread stop flags beat
/// the shared counter (V6 >= V5 from 4 threads) and the double-handoff
/// variants V1-V4 trail the coarse lock. Informational only.
std::vector<ClaimCheck> relative_report(const std::vector<BenchResult>& results);

}  // namespace fcrbt
