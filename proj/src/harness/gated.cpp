#include "fcrbt/harness/gated.hpp"

#include <atomic>
#include <semaphore>
#include <thread>

namespace fcrbt::harness {

const char* to_string(GatedScenario s) {
  switch (s) {
    case GatedScenario::SoftInsertVisibility: return "soft-insert-visibility";
    case GatedScenario::SoftDeleteVisibility: return "soft-delete-visibility";
    case GatedScenario::V6StopWorldRace: return "v6-stop-world-race";
  }
  return "?";
}

namespace {

constexpr std::int64_t kKey = 13;

std::string show(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string("absent"); }

std::optional<std::int64_t> read_from_new_thread(ConcurrentMap& map, std::int64_t key) {
  std::optional<std::int64_t> out;
  std::thread([&] {
    auto reg = map.register_thread();
    out = map.get(reg, key);
  }).join();
  return out;
}

GateOutcome soft_flip(VariantId variant, bool inserting, std::chrono::milliseconds timeout) {
  const OpKind gated_kind = inserting ? OpKind::Insert : OpKind::Delete;
  auto map = make_variant(variant, 64, 4);

  std::binary_semaphore at_flip{0}, go_flip{0}, flipped{0};
  std::atomic<bool> writer_timed_out{false};
  TestHooks hooks;
  hooks.before_flip = [&](OpKind kind, std::int64_t key) {
    if (kind != gated_kind || key != kKey) return;
    at_flip.release();
    if (!go_flip.try_acquire_for(timeout)) writer_timed_out = true;
  };
  hooks.after_flip = [&](OpKind kind, std::int64_t key) {
    if (kind == gated_kind && key == kKey) flipped.release();
  };
  map->set_test_hooks(std::move(hooks));

  auto reg = map->register_thread();
  // Physical node for the key, soft-deleted when the scenario re-inserts it.
  map->insert(reg, kKey, 70);
  if (inserting) map->erase(reg, kKey);
  if (map->physical_count() != 1) return {false, "setup left " + std::to_string(map->physical_count()) + " nodes"};

  const std::optional<std::int64_t> old_state = inserting ? std::nullopt : std::optional<std::int64_t>(70);
  const std::optional<std::int64_t> new_state = inserting ? std::optional<std::int64_t>(130) : std::nullopt;

  bool writer_result = false;
  std::thread writer([&] {
    auto wreg = map->register_thread();
    writer_result = inserting ? map->insert(wreg, kKey, 130) : map->erase(wreg, kKey);
  });

  GateOutcome out{true, {}};
  auto fail = [&](std::string why) {
    if (out.passed) out = {false, std::move(why)};
  };

  if (!at_flip.try_acquire_for(timeout)) {
    fail("writer never reached the flip");
    go_flip.release();
  } else {
    const auto before_main = map->get(reg, kKey);
    const auto before_other = read_from_new_thread(*map, kKey);
    if (before_main != old_state || before_other != old_state)
      fail("reader before flip saw " + show(before_main) + "/" + show(before_other) + ", expected " + show(old_state));
    go_flip.release();
    if (!flipped.try_acquire_for(timeout)) {
      fail("flip never completed");
    } else {
      const auto after_main = map->get(reg, kKey);
      const auto after_other = read_from_new_thread(*map, kKey);
      if (after_main != new_state || after_other != new_state)
        fail("reader after flip saw " + show(after_main) + "/" + show(after_other) + ", expected " + show(new_state));
    }
  }
  writer.join();
  if (writer_timed_out) fail("writer gate timed out");
  if (!writer_result) fail("writer reported no logical change");
  if (map->physical_count() != 1) fail("soft operation changed the physical node count");
  if (map->stats().overlap_violations != 0) fail("caller work overlapped an exclusive phase");
  return out;
}

GateOutcome stop_world_race(VariantId variant, std::chrono::milliseconds timeout) {
  constexpr std::int64_t kNewKey = 42;
  auto map = make_variant(variant, 64, 4);

  std::binary_semaphore marked{0}, go_reader{0}, raised{0};
  std::atomic<bool> gated_once{false};
  std::atomic<bool> reader_timed_out{false};
  // The setup insert stops the world too; only the scenario's own counts.
  std::atomic<bool> armed{false};
  TestHooks hooks;
  hooks.after_get_mark = [&](std::int64_t key) {
    if (key != kNewKey || gated_once.exchange(true)) return;
    marked.release();
    if (!go_reader.try_acquire_for(timeout)) reader_timed_out = true;
  };
  hooks.stop_world_raised = [&] {
    if (armed.load()) raised.release();
  };
  map->set_test_hooks(std::move(hooks));

  {
    auto reg = map->register_thread();
    map->insert(reg, 1, 10);
  }
  const auto stop_worlds_before = map->stats().stop_worlds;
  armed = true;

  std::optional<std::int64_t> reader_saw;
  std::thread reader([&] {
    auto reg = map->register_thread();
    reader_saw = map->get(reg, kNewKey);
  });

  GateOutcome out{true, {}};
  auto fail = [&](std::string why) {
    if (out.passed) out = {false, std::move(why)};
  };

  std::thread writer;
  bool writer_result = false;
  if (!marked.try_acquire_for(timeout)) {
    fail("reader never raised its mark");
  } else {
    writer = std::thread([&] {
      auto reg = map->register_thread();
      writer_result = map->insert(reg, kNewKey, 420);
    });
    if (!raised.try_acquire_for(timeout)) fail("combiner never raised the stop flags");
  }
  go_reader.release();
  reader.join();
  if (writer.joinable()) writer.join();

  const auto stats = map->stats();
  if (reader_timed_out) fail("reader gate timed out");
  if (!writer_result) fail("insert of a new key reported no change");
  if (stats.stop_worlds != stop_worlds_before + 1) fail("expected exactly one stop-world for the insert");
  if (stats.v6_get_retries < 1) fail("reader did not back off from the raised stop flag");
  if (stats.overlap_violations != 0) fail("reader overlapped the exclusive phase");
  if (reader_saw != std::optional<std::int64_t>(420))
    fail("reader saw " + show(reader_saw) + " instead of the post-insert value 420");
  if (!map->validate().ok()) fail("tree invalid after scenario");
  return out;
}

}  // namespace

GateOutcome run_gated_scenario(GatedScenario scenario, VariantId variant, std::chrono::milliseconds gate_timeout) {
  const auto cfg = VariantConfig::preset(variant);
  switch (scenario) {
    case GatedScenario::SoftInsertVisibility:
    case GatedScenario::SoftDeleteVisibility:
      if (!cfg.soft_ops) return {false, std::string(to_string(variant)) + " has no soft operations"};
      return soft_flip(variant, scenario == GatedScenario::SoftInsertVisibility, gate_timeout);
    case GatedScenario::V6StopWorldRace:
      if (!cfg.gets_bypass_queue) return {false, std::string(to_string(variant)) + " routes gets through the queue"};
      return stop_world_race(variant, gate_timeout);
  }
  return {false, "unknown scenario"};
}

}  // namespace fcrbt::harness
