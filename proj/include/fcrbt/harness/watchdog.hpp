#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace fcrbt::harness {

/// Fires `on_expire` with a diagnostic dump if not disarmed in time. The
/// default action prints the dump and aborts: a deadlocked worker cannot
/// be recovered in-process.
class Watchdog {
 public:
  using Dump = std::function<std::string()>;
  using Action = std::function<void(const std::string&)>;

  Watchdog(std::chrono::milliseconds budget, Dump dump, Action on_expire = {});
  ~Watchdog();

  Watchdog(const Watchdog&) = delete;
  Watchdog& operator=(const Watchdog&) = delete;

  void disarm();
  bool fired() const { return fired_; }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool armed_ = true;
  std::atomic<bool> fired_{false};
  std::thread thread_;
};

}  // namespace fcrbt::harness
