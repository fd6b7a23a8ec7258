#include <array>
#include <random>

#include "doctest.h"
#include "fcrbt/harness/gated.hpp"
#include "fcrbt/harness/linearizability.hpp"
#include "fcrbt/harness/oracle.hpp"
#include "fcrbt/harness/stress.hpp"
#include "fcrbt/harness/watchdog.hpp"
#include "history_support.hpp"

using namespace fcrbt;
using namespace fcrbt::harness;
using namespace fcrbt::testing;
using namespace std::chrono_literals;

TEST_CASE("sequential replay") {
  const std::vector<Op> ops{{OpKind::Insert, 3, 30}, {OpKind::Insert, 3, 31}, {OpKind::Get, 3, 0},
                            {OpKind::Delete, 3, 0},  {OpKind::Delete, 3, 0},  {OpKind::Get, 3, 0},
                            {OpKind::Insert, 1, 10}, {OpKind::Insert, 2, 20}};
  auto r = replay_sequential(ops);
  const std::vector<OpResult> expected{changed(true), changed(false), read(31),      changed(true),
                                       changed(false), read(std::nullopt), changed(true), changed(true)};
  CHECK(r.results == expected);
  CHECK(r.final_keys == std::vector<std::int64_t>{1, 2});

  auto capped = replay_sequential(ops, 1);
  CHECK(capped.results[7] == changed(false));
  CHECK(capped.final_keys == std::vector<std::int64_t>{1});
}

TEST_CASE("oracle agrees with a direct-indexed table") {
  constexpr std::int64_t kKeys = 256;
  std::array<std::optional<std::int64_t>, kKeys> table{};
  OracleMap oracle;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    const Op op{static_cast<OpKind>(rng() % 3), static_cast<std::int64_t>(rng() % kKeys),
                static_cast<std::int64_t>(rng() % 1000)};
    auto& slot = table[static_cast<std::size_t>(op.key)];
    OpResult want;
    switch (op.kind) {
      case OpKind::Get: want = read(slot); break;
      case OpKind::Insert:
        want = changed(!slot.has_value());
        slot = op.value;
        break;
      case OpKind::Delete:
        want = changed(slot.has_value());
        slot.reset();
        break;
    }
    REQUIRE(oracle.apply(op) == want);
  }
  std::vector<std::int64_t> keys;
  for (std::int64_t k = 0; k < kKeys; ++k)
    if (table[static_cast<std::size_t>(k)]) keys.push_back(k);
  CHECK(oracle.keys() == keys);
}

TEST_CASE("linearizability checker accepts legal histories") {
  using K = OpKind;
  SUBCASE("sequential") {
    const std::vector<HistoryEvent> h{event(0, 0, K::Insert, 1, 10, changed(true), 1, 2),
                                      event(1, 0, K::Get, 1, 0, read(10), 3, 4),
                                      event(2, 0, K::Delete, 1, 0, changed(true), 5, 6),
                                      event(3, 0, K::Get, 1, 0, read(std::nullopt), 7, 8)};
    auto r = check_linearizable(h);
    CHECK(r.linearizable);
    CHECK(r.witness == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("read concurrent with an insert may see either state") {
    for (auto seen : {std::optional<std::int64_t>{}, std::optional<std::int64_t>{10}}) {
      const std::vector<HistoryEvent> h{event(0, 0, K::Insert, 1, 10, changed(true), 1, 4),
                                        event(1, 1, K::Get, 1, 0, read(seen), 2, 3)};
      CHECK(check_linearizable(h).linearizable);
    }
  }
  SUBCASE("needs reordering against invocation order") {
    const std::vector<HistoryEvent> h{event(0, 0, K::Get, 1, 0, read(10), 1, 5),
                                      event(1, 1, K::Insert, 1, 10, changed(true), 2, 3)};
    auto r = check_linearizable(h);
    CHECK(r.linearizable);
    CHECK(r.witness == std::vector<std::size_t>{1, 0});
  }
  SUBCASE("initial state is honoured") {
    OracleMap init;
    init.insert(4, 40);
    const std::vector<HistoryEvent> h{event(0, 0, K::Get, 4, 0, read(40), 1, 2)};
    CHECK(check_linearizable(h, init).linearizable);
    CHECK_FALSE(check_linearizable(h).linearizable);
  }
}

TEST_CASE("linearizability checker rejects the illegal catalog") {
  const auto catalog = illegal_histories();
  CHECK(catalog.size() >= 5);
  for (const auto& [name, h] : catalog) {
    CAPTURE(name);
    CHECK_FALSE(check_linearizable(h).linearizable);
  }
}

TEST_CASE("linearizability checker input limits") {
  std::vector<HistoryEvent> big;
  for (std::size_t i = 0; i <= kMaxHistoryEvents; ++i)
    big.push_back(event(i, 0, OpKind::Get, 0, 0, read(std::nullopt), 2 * i + 1, 2 * i + 2));
  CHECK_THROWS_AS(check_linearizable(big), std::length_error);
  big.pop_back();
  CHECK(check_linearizable(big).linearizable);

  const std::vector<HistoryEvent> backwards{event(0, 0, OpKind::Get, 0, 0, read(std::nullopt), 5, 5)};
  CHECK_THROWS_AS(check_linearizable(backwards), std::invalid_argument);
}

TEST_CASE("recorded histories are linearizable") {
  for (VariantId id : {VariantId::CoarseLock, VariantId::V5, VariantId::V6}) {
    CAPTURE(to_string(id));
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto map = make_variant(id, 16, 4);
      const auto h = record_history(*map, 3, 3, 4, seed);
      REQUIRE(h.size() == 9);
      INFO("seed " << seed);
      CHECK(check_linearizable(h).linearizable);
    }
  }
}

TEST_CASE("stress") {
  SUBCASE("V1 mixed workload") {
    StressOptions o;
    o.variant = VariantConfig::preset(VariantId::V1);
    o.threads = 4;
    o.ops_per_thread = 10000;
    auto r = run_stress(o);
    INFO(r.failure);
    CHECK(r.passed());
  }
  SUBCASE("V6 under a tight budget") {
    StressOptions o;
    o.variant = VariantConfig::preset(VariantId::V6);
    o.threads = 8;
    o.ops_per_thread = 4000;
    o.max_nodes = 64;
    o.key_max = 128;
    o.insert_pct = 30;
    o.delete_pct = 30;
    auto r = run_stress(o);
    INFO(r.failure);
    CHECK(r.passed());
    CHECK(r.stats.stop_worlds > 0);
    CHECK(r.stats.compactions > 0);
    CHECK(r.stop_world_checks == r.stats.stop_worlds);
  }
  SUBCASE("single thread is deterministic and variant independent") {
    StressOptions o;
    o.threads = 1;
    o.ops_per_thread = 20000;
    o.max_nodes = 200;
    o.key_max = 400;
    o.prepopulate = 100;
    o.variant = VariantConfig::preset(VariantId::CoarseLock);
    auto base = run_stress(o);
    CHECK(base.passed());
    for (VariantId id : {VariantId::V5, VariantId::V3, VariantId::FutureWork}) {
      CAPTURE(to_string(id));
      o.variant = VariantConfig::preset(id);
      auto r = run_stress(o);
      CHECK(r.passed());
      CHECK(r.results == base.results);
    }
  }
}

TEST_CASE("gated interleavings") {
  for (VariantId id : {VariantId::V5, VariantId::V6, VariantId::FutureWork})
    for (auto s : {GatedScenario::SoftInsertVisibility, GatedScenario::SoftDeleteVisibility}) {
      CAPTURE(to_string(id));
      CAPTURE(to_string(s));
      auto out = run_gated_scenario(s, id);
      INFO(out.detail);
      CHECK(out.passed);
    }
  for (VariantId id : {VariantId::V6, VariantId::FutureWork}) {
    CAPTURE(to_string(id));
    auto out = run_gated_scenario(GatedScenario::V6StopWorldRace, id);
    INFO(out.detail);
    CHECK(out.passed);
  }
  CHECK_FALSE(run_gated_scenario(GatedScenario::SoftInsertVisibility, VariantId::V1).passed);
  CHECK_FALSE(run_gated_scenario(GatedScenario::V6StopWorldRace, VariantId::V5).passed);
}

TEST_CASE("watchdog") {
  SUBCASE("fires its action when not disarmed") {
    std::string got;
    {
      Watchdog dog(10ms, [] { return std::string("stuck at op 3"); }, [&](const std::string& s) { got = s; });
      std::this_thread::sleep_for(100ms);
      CHECK(dog.fired());
    }
    CHECK(got == "stuck at op 3");
  }
  SUBCASE("stays quiet once disarmed") {
    Watchdog dog(50ms, {}, [](const std::string&) { FAIL("fired"); });
    dog.disarm();
    std::this_thread::sleep_for(100ms);
    CHECK_FALSE(dog.fired());
  }
}
