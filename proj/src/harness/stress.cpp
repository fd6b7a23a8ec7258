#include "fcrbt/harness/stress.hpp"

#include <algorithm>
#include <latch>
#include <map>
#include <sstream>
#include <thread>

#include "fcrbt/harness/oracle.hpp"
#include "fcrbt/harness/watchdog.hpp"

namespace fcrbt::harness {

bool StressReport::passed() const {
  return completed && validation.ok() && replay_results_match && replay_keys_match && conservation_ok &&
         stop_world_budget_violations == 0 && stop_world_invalid_trees == 0 && stats.budget_violations == 0 &&
         stats.overlap_violations == 0 && failure.empty();
}

namespace {

struct Progress {
  std::atomic<std::uint64_t> done{0};
  std::atomic<int> kind{-1};
  std::atomic<std::int64_t> key{0};
};

}  // namespace

StressReport run_stress(const StressOptions& o) {
  StressReport report;
  WorkloadSpec spec;
  spec.insert_pct = o.insert_pct;
  spec.delete_pct = o.delete_pct;
  spec.get_pct = 100 - o.insert_pct - o.delete_pct;
  spec.key_min = o.key_min;
  spec.key_max = o.key_max;
  spec.max_nodes = o.max_nodes;
  spec.seed = o.seed;
  spec.total_ops = std::max<std::size_t>(1, o.threads * o.ops_per_thread);
  spec.thread_counts = {o.threads};

  auto map = make_variant(o.variant, o.max_nodes, o.threads + 1);
  map->record_serialization(true);

  std::atomic<std::uint64_t> sw_checks{0}, sw_budget{0}, sw_invalid{0};
  TestHooks hooks;
  hooks.stop_world_done = [&](const RBTree& tree) {
    sw_checks.fetch_add(1);
    if (tree.physical_count() > o.max_nodes) sw_budget.fetch_add(1);
    if (o.validate_in_stop_world && !tree.validate().ok()) sw_invalid.fetch_add(1);
  };
  map->set_test_hooks(std::move(hooks));

  OracleMap initial(o.max_nodes);
  if (o.prepopulate > 0) {
    auto reg = map->register_thread();
    for (std::int64_t k : warmup_keys(spec, o.prepopulate)) {
      map->insert(reg, k, k);
      initial.insert(k, k);
    }
  }

  std::vector<std::vector<Op>> work(o.threads);
  for (std::size_t t = 0; t < o.threads; ++t) work[t] = generate_workload(spec, t, o.ops_per_thread);
  report.results.assign(o.threads, {});
  std::vector<Progress> progress(o.threads);

  const auto t0 = std::chrono::steady_clock::now();
  {
    Watchdog dog(o.watchdog, [&] {
      std::ostringstream out;
      out << "variant " << to_string(o.variant.id) << " stress, " << o.threads << " threads\n";
      for (std::size_t t = 0; t < o.threads; ++t) {
        const int k = progress[t].kind.load();
        out << "  thread " << t << ": " << progress[t].done.load() << "/" << o.ops_per_thread << " done, current "
            << (k < 0 ? "none" : to_string(static_cast<OpKind>(k))) << "(" << progress[t].key.load() << ")\n";
      }
      return out.str();
    });

    std::latch start(static_cast<std::ptrdiff_t>(o.threads));
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < o.threads; ++t) {
      workers.emplace_back([&, t] {
        auto reg = map->register_thread();
        auto& out = report.results[t];
        out.reserve(work[t].size());
        start.arrive_and_wait();
        for (const Op& op : work[t]) {
          progress[t].kind.store(static_cast<int>(op.kind));
          progress[t].key.store(op.key);
          out.push_back(apply(*map, reg, op));
          progress[t].done.fetch_add(1, std::memory_order_relaxed);
        }
        progress[t].kind.store(-1);
      });
    }
    for (auto& w : workers) w.join();
    dog.disarm();
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.completed = true;

  report.validation = map->validate();
  report.stats = map->stats();
  report.stop_world_checks = sw_checks.load();
  report.stop_world_budget_violations = sw_budget.load();
  report.stop_world_invalid_trees = sw_invalid.load();
  const auto live = map->live_keys();

  // Replay the mutations in the order they took effect.
  OracleMap replay(o.max_nodes);
  report.replay_results_match = true;
  for (const auto& e : map->serialization_log()) {
    const Op op{e.kind, e.key, e.value};
    if (replay.apply(op).changed != e.changed) {
      if (report.replay_results_match)
        report.failure = "serialization replay diverged at stamp " + std::to_string(e.stamp) + " (" +
                         to_string(e.kind) + " " + std::to_string(e.key) + ")";
      report.replay_results_match = false;
    }
  }
  report.replay_keys_match = replay.keys() == live;

  std::map<std::int64_t, std::int64_t> balance;
  for (std::int64_t k : initial.keys()) balance[k] -= 1;
  for (std::int64_t k : live) balance[k] += 1;
  for (std::size_t t = 0; t < o.threads; ++t)
    for (std::size_t i = 0; i < work[t].size(); ++i) {
      const Op& op = work[t][i];
      if (!report.results[t][i].changed) continue;
      if (op.kind == OpKind::Insert) balance[op.key] -= 1;
      if (op.kind == OpKind::Delete) balance[op.key] += 1;
    }
  report.conservation_ok =
      std::all_of(balance.begin(), balance.end(), [](const auto& kv) { return kv.second == 0; });
  return report;
}

}  // namespace fcrbt::harness
