#include <chrono>
#include <future>
#include <memory>
#include <semaphore>
#include <thread>
#include <vector>

#include "doctest.h"
#include "fcrbt/combiner.hpp"
#include "fcrbt/wait_strategy.hpp"

using namespace fcrbt;
using namespace std::chrono_literals;

TEST_CASE("backoff schedule") {
  const std::span<const int> s = kDefaultBackoffMs;
  CHECK(backoff_delay(s, 0) == 0ms);
  CHECK(backoff_delay(s, 1) == 1ms);
  CHECK(backoff_delay(s, 2) == 3ms);
  CHECK(backoff_delay(s, 3) == 10ms);
  CHECK(backoff_delay(s, 10) == 3033ms);
  CHECK(backoff_delay(s, 11) == 5000ms);
  CHECK(backoff_delay(s, 15) == 5000ms);
  CHECK_THROWS_AS(backoff_delay(std::span<const int>{}, 1), std::invalid_argument);
}

TEST_CASE("backoff waiter sleeps through the schedule") {
  OpRecord rec;
  rec.prepare(OpKind::Insert, 1, 1);
  std::vector<std::chrono::milliseconds> slept;
  WaitCounters counters;
  WaitContext ctx;
  ctx.counters = &counters;
  ctx.sleeper = [&](std::chrono::milliseconds d) {
    slept.push_back(d);
    if (slept.size() == 3) rec.release(OpStatus::Done);
  };
  CHECK(wait_for_done(WaitStrategy::backoff(), rec, ctx) == OpStatus::Done);
  CHECK(slept == std::vector<std::chrono::milliseconds>{1ms, 3ms, 10ms});
  CHECK(counters.sleeps == 3);
  CHECK(counters.completion_phases == 1);
}

TEST_CASE("already finished record returns without waiting") {
  for (auto strategy : {WaitStrategy::sleep_awake(), WaitStrategy::spin(), WaitStrategy::backoff(),
                        WaitStrategy::per_thread_flag()}) {
    OpRecord rec;
    rec.prepare(OpKind::Get, 1, 0);
    rec.release(OpStatus::Done);
    WaitCounters counters;
    WaitContext ctx;
    ctx.counters = &counters;
    ctx.sleeper = [](std::chrono::milliseconds) { FAIL("slept"); };
    CHECK(wait_for_done(strategy, rec, ctx) == OpStatus::Done);
    CHECK(counters.sleeps == 0);
  }
}

TEST_CASE("sleep-awake waiter ignores spurious wakeups") {
  OpRecord rec;
  rec.prepare(OpKind::Delete, 3, 0);
  rec.advance(OpStatus::Pending, OpStatus::Claimed);
  auto waiter = std::async(std::launch::async, [&] { return wait_for_done(WaitStrategy::sleep_awake(), rec); });
  std::this_thread::sleep_for(20ms);
  rec.status.notify_all();
  CHECK(waiter.wait_for(50ms) == std::future_status::timeout);
  rec.release(OpStatus::Done);
  CHECK(waiter.get() == OpStatus::Done);
}

TEST_CASE("per-thread flag waiter") {
  std::atomic<bool> flag{true};
  WaitContext ctx;
  ctx.stop_signal = &flag;

  SUBCASE("holds while the flag is raised") {
    OpRecord rec;
    rec.prepare(OpKind::Insert, 1, 1);
    auto waiter = std::async(std::launch::async, [&] { return wait_for_done(WaitStrategy::per_thread_flag(), rec, ctx); });
    std::this_thread::sleep_for(20ms);
    rec.release(OpStatus::Done);
    CHECK(waiter.wait_for(50ms) == std::future_status::timeout);
    flag.store(false);
    flag.notify_all();
    CHECK(waiter.get() == OpStatus::Done);
  }
  SUBCASE("a handed-back record is returned even with the flag raised") {
    OpRecord rec;
    rec.prepare(OpKind::Delete, 1, 0);
    rec.release(OpStatus::CallerExecutes);
    CHECK(wait_for_done(WaitStrategy::per_thread_flag(), rec, ctx) == OpStatus::CallerExecutes);
  }
}

TEST_CASE("registration") {
  CombinerState state(8);
  std::vector<ThreadRegistration> regs;
  std::vector<std::thread> threads;
  std::mutex m;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      auto r = state.register_thread();
      std::lock_guard lock(m);
      regs.push_back(std::move(r));
    });
  for (auto& t : threads) t.join();
  CHECK(state.registered() == 8);

  std::thread ninth([&] { CHECK_THROWS_AS(state.register_thread(), RegistrationError); });
  ninth.join();

  regs.pop_back();
  CHECK(state.registered() == 7);
  auto mine = state.register_thread();
  CHECK(mine.valid());
  CHECK(mine.thread_id() == std::this_thread::get_id());
  CHECK_THROWS_AS(state.register_thread(), RegistrationError);

  ThreadRegistration moved = std::move(mine);
  CHECK_FALSE(mine.valid());
  CHECK(moved.valid());
  CHECK(state.registered() == 8);
}

TEST_CASE("publication queue") {
  SUBCASE("fifo and full") {
    PublicationQueue q(4);
    OpRecord recs[5];
    for (int i = 0; i < 4; ++i) CHECK(q.try_push(&recs[i]));
    CHECK_FALSE(q.try_push(&recs[4]));
    CHECK_THROWS_AS(q.push(&recs[4]), std::length_error);
    for (int i = 0; i < 4; ++i) CHECK(q.try_pop() == &recs[i]);
    CHECK(q.try_pop() == nullptr);
  }
  SUBCASE("per-producer order is preserved") {
    constexpr int kProducers = 4, kPer = 5000;
    PublicationQueue q(64);
    std::vector<std::unique_ptr<OpRecord[]>> recs;
    for (int p = 0; p < kProducers; ++p) recs.push_back(std::make_unique<OpRecord[]>(kPer));
    for (int p = 0; p < kProducers; ++p)
      for (int i = 0; i < kPer; ++i) {
        recs[p][i].owner = static_cast<std::size_t>(p);
        recs[p][i].key = i;
      }
    std::vector<std::thread> producers;
    for (int p = 0; p < kProducers; ++p)
      producers.emplace_back([&, p] {
        for (int i = 0; i < kPer; ++i)
          while (!q.try_push(&recs[p][i])) std::this_thread::yield();
      });
    std::vector<std::int64_t> next(kProducers, 0);
    int seen = 0;
    bool ordered = true;
    while (seen < kProducers * kPer) {
      OpRecord* r = q.try_pop();
      if (r == nullptr) continue;
      ordered = ordered && r->key == next[r->owner];
      next[r->owner] = r->key + 1;
      ++seen;
    }
    for (auto& t : producers) t.join();
    CHECK(ordered);
  }
}

TEST_CASE("combiner dispatches in FIFO order") {
  PublicationQueue q(16);
  CombinerState state(1);
  std::vector<std::int64_t> order;
  Combiner c(q, state, [&](OpRecord& r) {
    order.push_back(r.key);
    r.release(OpStatus::Done);
  });
  OpRecord recs[10];
  for (int i = 0; i < 10; ++i) {
    recs[i].prepare(OpKind::Get, i, 0);
    q.push(&recs[i]);
  }
  c.start();
  for (auto& r : recs) wait_for_done(WaitStrategy::sleep_awake(), r);
  c.shutdown();
  CHECK(order == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  for (int i = 0; i < 10; ++i) CHECK(recs[i].sequence == static_cast<std::uint64_t>(i + 1));
  CHECK(c.dispatched() == 10);
}

TEST_CASE("idle combiner sleeps on the doorbell") {
  PublicationQueue q(4);
  CombinerState state(1);
  Combiner c(q, state, [](OpRecord& r) { r.release(OpStatus::Done); }, IdlePolicy{4});
  c.start();
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (c.idle_sleeps() == 0 && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(1ms);
  CHECK(c.idle_sleeps() >= 1);
  CHECK(c.dispatched() == 0);

  OpRecord rec;
  rec.prepare(OpKind::Get, 1, 0);
  publish(q, state, rec);
  CHECK(wait_for_done(WaitStrategy::sleep_awake(), rec) == OpStatus::Done);
  c.shutdown();
}

TEST_CASE("shutdown resolves queued records") {
  PublicationQueue q(16);
  CombinerState state(1);
  std::binary_semaphore entered{0}, gate{0};
  Combiner c(q, state, [&](OpRecord& r) {
    entered.release();
    gate.acquire();
    r.release(OpStatus::Done);
  });
  c.start();

  OpRecord first;
  first.prepare(OpKind::Insert, 0, 0);
  publish(q, state, first);
  entered.acquire();

  OpRecord rest[5];
  for (int i = 0; i < 5; ++i) {
    rest[i].prepare(OpKind::Insert, i + 1, 0);
    publish(q, state, rest[i]);
  }
  std::thread closer([&] { c.shutdown(); });
  while (state.running.load()) std::this_thread::yield();
  gate.release();
  closer.join();

  CHECK(first.status.load() == OpStatus::Done);
  for (auto& r : rest) CHECK(wait_for_done(WaitStrategy::sleep_awake(), r) == OpStatus::Shutdown);
  CHECK(c.dispatched() == 1);
  c.shutdown();

  OpRecord late;
  late.prepare(OpKind::Get, 9, 0);
  publish(q, state, late);
  CHECK(late.status.load() == OpStatus::Shutdown);
}

TEST_CASE("global stop-world waits for pending operations") {
  CombinerState state(4);
  state.pending_ops.store(3);
  std::atomic<bool> raised{false};
  std::atomic<bool> entered{false};
  std::thread combiner([&] {
    state.enter_stop_world(StopWorldScope::Global, [&] { raised = true; });
    entered = true;
  });
  while (!raised) std::this_thread::yield();
  CHECK(state.stop_world.load());
  for (int i = 0; i < 3; ++i) {
    std::this_thread::sleep_for(5ms);
    CHECK_FALSE(entered.load());
    state.pending_ops.fetch_sub(1);
  }
  combiner.join();
  CHECK(entered);
  CHECK(state.epoch() % 2 == 1);
  state.exit_stop_world(StopWorldScope::Global);
  CHECK_FALSE(state.stop_world.load());
  CHECK(state.epoch() % 2 == 0);
}

TEST_CASE("per-thread stop-world flags registered threads and waits for their marks") {
  CombinerState state(4);
  std::vector<ThreadRegistration> regs(2);
  std::thread a([&] { regs[0] = state.register_thread(); });
  std::thread b([&] { regs[1] = state.register_thread(); });
  a.join();
  b.join();
  regs[0].slot().pending_mark = true;
  regs[1].slot().pending_mark = true;

  std::atomic<bool> entered{false};
  std::thread combiner([&] {
    state.enter_stop_world(StopWorldScope::PerThread);
    entered = true;
  });
  while (!regs[1].slot().stop_flag.load()) std::this_thread::yield();
  CHECK(regs[0].slot().stop_flag.load());
  for (std::size_t i = 0; i < 4; ++i)
    if (!state.slot(i).in_use) CHECK_FALSE(state.slot(i).stop_flag.load());

  regs[0].slot().pending_mark = false;
  std::this_thread::sleep_for(5ms);
  CHECK_FALSE(entered.load());
  regs[1].slot().pending_mark = false;
  combiner.join();
  CHECK(state.in_stop_world());
  state.exit_stop_world(StopWorldScope::PerThread);
  CHECK_FALSE(regs[0].slot().stop_flag.load());
  CHECK_FALSE(regs[1].slot().stop_flag.load());
  CHECK_FALSE(state.in_stop_world());
}
