#include "fcrbt/bench.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <latch>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "fcrbt/harness/watchdog.hpp"
#include "fcrbt/ops.hpp"

namespace fcrbt {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t fold(std::uint64_t h, const OpResult& r) {
  constexpr std::uint64_t kPrime = 1099511628211ull;
  const std::uint64_t enc = r.value ? static_cast<std::uint64_t>(*r.value) * 4 + 2 : (r.changed ? 1 : 0);
  return (h ^ enc) * kPrime;
}

struct WorkerProgress {
  std::atomic<std::uint64_t> done{0};
};

}  // namespace

BenchResult run_cell(const WorkloadSpec& spec, VariantId variant, std::size_t threads) {
  BenchResult row;
  row.variant = variant;
  row.threads = threads;
  row.total_ops = spec.total_ops;

  std::vector<std::vector<Op>> work(threads);
  for (std::size_t t = 0; t < threads; ++t)
    work[t] = generate_workload(spec, t, ops_for_thread(spec.total_ops, threads, t));
  for (const auto& ops : work)
    for (const Op& op : ops) {
      if (op.kind == OpKind::Get) ++row.gets;
      if (op.kind == OpKind::Insert) ++row.inserts;
      if (op.kind == OpKind::Delete) ++row.deletes;
    }

  std::unique_ptr<ConcurrentMap> map;
  try {
    map = make_variant(variant, spec.max_nodes, threads);
    if (spec.warmup) {
      auto reg = map->register_thread();
      for (std::int64_t k : warmup_keys(spec, spec.max_nodes / 2)) map->insert(reg, k, k);
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = std::string("construction failed: ") + e.what();
    return row;
  }

  std::vector<WorkerProgress> progress(threads);
  std::vector<std::uint64_t> checksums(threads, 0);
  std::vector<Clock::time_point> finished(threads);
  std::vector<std::string> errors(threads);

  harness::Watchdog dog(std::chrono::seconds(spec.watchdog_secs), [&] {
    std::ostringstream out;
    out << "cell " << to_string(variant) << " x " << threads << " threads\n";
    for (std::size_t t = 0; t < threads; ++t)
      out << "  thread " << t << ": " << progress[t].done.load() << "/" << work[t].size() << " ops\n";
    return out.str();
  });

  std::latch ready(static_cast<std::ptrdiff_t>(threads) + 1);
  std::latch go(1);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      ThreadRegistration reg;
      try {
        reg = map->register_thread();
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
      ready.arrive_and_wait();
      go.wait();
      if (!reg.valid()) return;
      std::uint64_t h = 14695981039346656037ull;
      try {
        for (const Op& op : work[t]) {
          h = fold(h, apply(*map, reg, op));
          progress[t].done.fetch_add(1, std::memory_order_relaxed);
        }
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
      finished[t] = Clock::now();
      checksums[t] = h;
    });
  }
  ready.arrive_and_wait();
  const auto start = Clock::now();
  go.count_down();
  for (auto& w : workers) w.join();
  dog.disarm();

  auto end = start;
  for (const auto& f : finished) end = std::max(end, f);
  row.wall_ns = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count());
  row.ops_per_sec = row.wall_ns == 0 ? 0.0 : static_cast<double>(row.total_ops) * 1e9 / static_cast<double>(row.wall_ns);
  for (std::uint64_t c : checksums) row.checksum = row.checksum * 31 + c;

  const auto stats = map->stats();
  row.stop_worlds = stats.stop_worlds;
  row.compactions = stats.compactions;

  for (std::size_t t = 0; t < threads; ++t)
    if (!errors[t].empty()) {
      row.failed = true;
      row.error = "thread " + std::to_string(t) + ": " + errors[t];
      return row;
    }
  if (auto report = map->validate(); !report.ok()) {
    row.failed = true;
    row.error = "tree invalid after run: " + report.summary();
  }
  return row;
}

std::vector<BenchResult> run_bench(const WorkloadSpec& spec, const BenchProgress& progress) {
  check_spec(spec);
  std::vector<BenchResult> rows;
  for (VariantId v : spec.variants) {
    for (std::size_t threads : spec.thread_counts) {
      BenchResult row;
      try {
        row = run_cell(spec, v, threads);
      } catch (const std::exception& e) {
        row.variant = v;
        row.threads = threads;
        row.total_ops = spec.total_ops;
        row.failed = true;
        row.error = e.what();
      }
      if (progress) progress(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_csv(const std::vector<BenchResult>& results, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : results) {
    out << to_string(r.variant) << ',' << r.threads << ',' << r.total_ops << ',' << r.wall_ns << ',' << std::fixed
        << std::setprecision(2) << r.ops_per_sec << ',' << r.gets << ',' << r.inserts << ',' << r.deletes << ','
        << r.stop_worlds << ',' << r.compactions << '\n';
  }
}

void emit_csv(const std::vector<BenchResult>& results, const std::filesystem::path& path) {
  if (results.empty()) throw std::invalid_argument("no benchmark results to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  write_csv(results, out);
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": " + std::strerror(errno));
}

std::vector<ClaimCheck> relative_report(const std::vector<BenchResult>& results) {
  std::map<std::pair<VariantId, std::size_t>, double> tput;
  std::map<std::size_t, bool> thread_set;
  for (const auto& r : results) {
    if (r.failed) continue;
    tput[{r.variant, r.threads}] = r.ops_per_sec;
    thread_set[r.threads] = true;
  }
  auto lookup = [&](VariantId v, std::size_t t) -> const double* {
    auto it = tput.find({v, t});
    return it == tput.end() ? nullptr : &it->second;
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(0) << v;
    return s.str();
  };

  std::vector<ClaimCheck> checks;
  for (const auto& [t, _] : thread_set) {
    if (t >= 4) {
      const double* v5 = lookup(VariantId::V5, t);
      const double* v6 = lookup(VariantId::V6, t);
      if (v5 && v6)
        checks.push_back({"V6 >= V5", t, *v6 >= *v5, "V6 " + fmt(*v6) + " ops/s vs V5 " + fmt(*v5) + " ops/s"});
    }
    const double* coarse = lookup(VariantId::CoarseLock, t);
    if (!coarse) continue;
    for (VariantId v : {VariantId::V1, VariantId::V2, VariantId::V3, VariantId::V4}) {
      const double* x = lookup(v, t);
      if (!x) continue;
      checks.push_back({std::string(to_string(v)) + " <= CoarseLock", t, *x <= *coarse,
                        std::string(to_string(v)) + " " + fmt(*x) + " ops/s vs CoarseLock " + fmt(*coarse) + " ops/s"});
    }
  }
  return checks;
}

}  // namespace fcrbt
