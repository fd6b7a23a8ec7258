#include "fcrbt/workload.hpp"

#include <random>
#include <stdexcept>
#include <unordered_set>

namespace fcrbt {

namespace {

constexpr std::uint32_t kWorkerStream = 0x0c0ffee1;
constexpr std::uint32_t kWarmupStream = 0x0c0ffee2;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<std::string> spec_errors(const WorkloadSpec& spec) {
  std::vector<std::string> errs;
  for (auto [name, pct] : {std::pair{"insert-pct", spec.insert_pct}, std::pair{"delete-pct", spec.delete_pct},
                           std::pair{"get-pct", spec.get_pct}})
    if (pct < 0 || pct > 100) errs.push_back(std::string(name) + ": must be within [0, 100], got " + std::to_string(pct));
  if (spec.insert_pct + spec.delete_pct + spec.get_pct != 100)
    errs.push_back("insert-pct + delete-pct + get-pct must equal 100, got " +
                   std::to_string(spec.insert_pct + spec.delete_pct + spec.get_pct));
  if (spec.key_min >= spec.key_max)
    errs.push_back("key-min must be below key-max (" + std::to_string(spec.key_min) + " >= " +
                   std::to_string(spec.key_max) + ")");
  if (spec.max_nodes == 0) errs.push_back("max-nodes: must be positive");
  if (spec.total_ops == 0) errs.push_back("ops: must be positive");
  if (spec.thread_counts.empty()) errs.push_back("threads: at least one thread count is required");
  for (std::size_t t : spec.thread_counts)
    if (t == 0) errs.push_back("threads: thread counts must be positive");
  if (spec.variants.empty()) errs.push_back("variants: at least one variant is required");
  if (spec.watchdog_secs == 0) errs.push_back("watchdog-secs: must be positive");
  return errs;
}

void check_spec(const WorkloadSpec& spec) {
  auto errs = spec_errors(spec);
  if (errs.empty()) return;
  std::string msg = "invalid workload:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

std::size_t ops_for_thread(std::size_t total_ops, std::size_t threads, std::size_t thread_index) {
  const std::size_t share = total_ops / threads;
  return thread_index == 0 ? share + total_ops % threads : share;
}

std::vector<Op> generate_workload(const WorkloadSpec& spec, std::size_t thread_index, std::size_t count) {
  check_spec(spec);
  auto rng = make_rng(spec.seed, kWorkerStream, thread_index);
  std::uniform_int_distribution<int> pct(0, 99);
  std::uniform_int_distribution<std::int64_t> key(spec.key_min, spec.key_max);
  std::uniform_int_distribution<std::int64_t> value(0, 1'000'000'000);

  std::vector<Op> ops;
  ops.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int roll = pct(rng);
    Op op;
    if (roll < spec.insert_pct)
      op.kind = OpKind::Insert;
    else if (roll < spec.insert_pct + spec.delete_pct)
      op.kind = OpKind::Delete;
    else
      op.kind = OpKind::Get;
    op.key = key(rng);
    if (op.kind == OpKind::Insert) op.value = value(rng);
    ops.push_back(op);
  }
  return ops;
}

std::vector<std::int64_t> warmup_keys(const WorkloadSpec& spec, std::size_t count) {
  check_spec(spec);
  const auto range = static_cast<std::uint64_t>(spec.key_max - spec.key_min) + 1;
  if (count > range) count = range;
  auto rng = make_rng(spec.seed, kWarmupStream, 0);
  std::uniform_int_distribution<std::int64_t> key(spec.key_min, spec.key_max);
  std::unordered_set<std::int64_t> seen;
  std::vector<std::int64_t> keys;
  keys.reserve(count);
  while (keys.size() < count) {
    const std::int64_t k = key(rng);
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

}  // namespace fcrbt
