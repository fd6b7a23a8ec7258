#pragma once

#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include "fcrbt/op_record.hpp"

namespace fcrbt {

/// Bounded multi-producer FIFO of record pointers (sequence-numbered ring).
/// A doorbell counter lets an idle consumer block until the next push.
class PublicationQueue {
 public:
  explicit PublicationQueue(std::size_t capacity)
      : capacity_(std::bit_ceil(capacity == 0 ? std::size_t{1} : capacity)),
        mask_(capacity_ - 1),
        cells_(std::make_unique<Cell[]>(capacity_)) {
    for (std::size_t i = 0; i < capacity_; ++i) cells_[i].seq.store(i, std::memory_order_relaxed);
  }

  PublicationQueue(const PublicationQueue&) = delete;
  PublicationQueue& operator=(const PublicationQueue&) = delete;

  std::size_t capacity() const { return capacity_; }

  bool try_push(OpRecord* rec) {
    std::size_t pos = tail_.load(std::memory_order_relaxed);
    for (;;) {
      Cell& cell = cells_[pos & mask_];
      const std::size_t seq = cell.seq.load(std::memory_order_acquire);
      const auto diff = static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos);
      if (diff == 0) {
        if (tail_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) {
          cell.rec = rec;
          cell.seq.store(pos + 1, std::memory_order_release);
          ring();
          return true;
        }
      } else if (diff < 0) {
        return false;
      } else {
        pos = tail_.load(std::memory_order_relaxed);
      }
    }
  }

  void push(OpRecord* rec) {
    if (!try_push(rec)) throw std::length_error("publication queue full");
  }

  OpRecord* try_pop() {
    std::size_t pos = head_.load(std::memory_order_relaxed);
    for (;;) {
      Cell& cell = cells_[pos & mask_];
      const std::size_t seq = cell.seq.load(std::memory_order_acquire);
      const auto diff = static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos + 1);
      if (diff == 0) {
        if (head_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) {
          OpRecord* rec = cell.rec;
          cell.seq.store(pos + mask_ + 1, std::memory_order_release);
          return rec;
        }
      } else if (diff < 0) {
        return nullptr;
      } else {
        pos = head_.load(std::memory_order_relaxed);
      }
    }
  }

  std::uint32_t doorbell() const { return doorbell_.load(std::memory_order_seq_cst); }

  /// Sleeps until a push (or ring()) happens after `seen` was read.
  void wait_doorbell(std::uint32_t seen) const { doorbell_.wait(seen, std::memory_order_seq_cst); }

  void ring() {
    doorbell_.fetch_add(1, std::memory_order_seq_cst);
    doorbell_.notify_one();
  }

 private:
  struct Cell {
    std::atomic<std::size_t> seq;
    OpRecord* rec = nullptr;
  };

  const std::size_t capacity_;
  const std::size_t mask_;
  std::unique_ptr<Cell[]> cells_;
  alignas(64) std::atomic<std::size_t> tail_{0};
  alignas(64) std::atomic<std::size_t> head_{0};
  alignas(64) std::atomic<std::uint32_t> doorbell_{0};
};

}  // namespace fcrbt
