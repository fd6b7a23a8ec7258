#include "fcrbt/harness/watchdog.hpp"

#include <cstdlib>
#include <iostream>

namespace fcrbt::harness {

Watchdog::Watchdog(std::chrono::milliseconds budget, Dump dump, Action on_expire) {
  thread_ = std::thread([this, budget, dump = std::move(dump), on_expire = std::move(on_expire)] {
    std::unique_lock lock(mu_);
    if (cv_.wait_for(lock, budget, [this] { return !armed_; })) return;
    fired_ = true;
    const std::string report = dump ? dump() : std::string("(no dump)");
    if (on_expire) {
      on_expire(report);
      return;
    }
    std::cerr << "watchdog expired after " << budget.count() << " ms; suspected deadlock\n" << report << std::endl;
    std::abort();
  });
}

Watchdog::~Watchdog() {
  disarm();
  if (thread_.joinable()) thread_.join();
}

void Watchdog::disarm() {
  {
    std::lock_guard lock(mu_);
    armed_ = false;
  }
  cv_.notify_all();
}

}  // namespace fcrbt::harness
