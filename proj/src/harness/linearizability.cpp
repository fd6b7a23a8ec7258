#include "fcrbt/harness/linearizability.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace fcrbt::harness {

namespace {

std::atomic<std::uint64_t> g_clock{0};

struct Search {
  std::span<const HistoryEvent> events;
  std::vector<std::size_t> order;
  std::unordered_set<std::string> dead;

  static std::string key(std::uint32_t done, const OracleMap& state) {
    std::string k = std::to_string(done) + "|";
    for (const auto& [key, value] : state.entries()) k += std::to_string(key) + ":" + std::to_string(value) + ",";
    return k;
  }

  bool minimal(std::size_t i, std::uint32_t done) const {
    for (std::size_t j = 0; j < events.size(); ++j) {
      if (j == i || (done & (1u << j)) != 0) continue;
      if (events[j].end < events[i].start) return false;
    }
    return true;
  }

  bool run(std::uint32_t done, const OracleMap& state) {
    if (order.size() == events.size()) return true;
    const std::string memo = key(done, state);
    if (dead.contains(memo)) return false;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if ((done & (1u << i)) != 0 || !minimal(i, done)) continue;
      OracleMap next = state;
      if (next.apply(events[i].op) != events[i].result) continue;
      order.push_back(i);
      if (run(done | (1u << i), next)) return true;
      order.pop_back();
    }
    dead.insert(memo);
    return false;
  }
};

}  // namespace

std::uint64_t HistoryRecorder::tick() { return g_clock.fetch_add(1, std::memory_order_seq_cst) + 1; }

std::vector<HistoryEvent> HistoryRecorder::merge() const {
  std::vector<HistoryEvent> all;
  for (const auto& log : logs_) all.insert(all.end(), log.begin(), log.end());
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < all.size(); ++i) all[i].id = i;
  return all;
}

LinearizabilityResult check_linearizable(std::span<const HistoryEvent> history, const OracleMap& initial) {
  if (history.size() > kMaxHistoryEvents)
    throw std::length_error("history of " + std::to_string(history.size()) + " events exceeds the brute-force bound of " +
                            std::to_string(kMaxHistoryEvents));
  for (const auto& ev : history)
    if (ev.end <= ev.start) throw std::invalid_argument("event " + std::to_string(ev.id) + " has no response after its invocation");

  Search search{history, {}, {}};
  LinearizabilityResult result;
  result.linearizable = search.run(0, initial);
  if (result.linearizable)
    for (std::size_t i : search.order) result.witness.push_back(history[i].id);
  return result;
}

}  // namespace fcrbt::harness
