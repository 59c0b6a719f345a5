/*
 * Copyright 2026 The bstsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file buffers.hpp
 * @brief Per-subtree staging buffers sitting between the register layer and
 *        the first BRAM level of each subtree.
 *
 * Two slot-mapping policies:
 *
 *  - Direct: a probe goes to the slot equal to its index in the admitted
 *    chunk. The lower half of the slots feeds port A and the upper half port B;
 *    each half drains its lowest occupied slot. A taken slot rejects the
 *    probe even when other slots are free.
 *  - Queue: a circular FIFO with read/write pointers. Probes arriving in the
 *    same cycle are labelled 0, 1, ... per buffer and land at
 *    (write_ptr + label) mod S. Only a lack of free slots rejects a probe.
 *
 * A buffer drains at most one probe per port per cycle.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bstsim/memory.hpp"

namespace bstsim {

enum class BufferPolicy { Direct, Queue };

/// What a buffer slot holds: the engine's probe id plus its position in the
/// chunk it was admitted with.
struct BufferedProbe {
  std::uint32_t probe = 0;
  std::uint32_t chunk_index = 0;

  friend bool operator==(const BufferedProbe&, const BufferedProbe&) = default;
};

enum class InsertStatus { Accepted, SlotOccupied, BufferFull };

struct InsertResult {
  InsertStatus status = InsertStatus::Accepted;
  std::size_t slot = 0;  // slot written, or the slot that was found taken

  bool accepted() const { return status == InsertStatus::Accepted; }
};

struct DrainedProbe {
  BufferedProbe probe;
  std::size_t slot = 0;
  Port port = Port::A;
};

/// At most two probes, port A first.
class DrainResult {
 public:
  void push(const DrainedProbe& d) { items_[count_++] = d; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const DrainedProbe& operator[](std::size_t i) const { return items_[i]; }
  const DrainedProbe* begin() const { return items_.data(); }
  const DrainedProbe* end() const { return items_.data() + count_; }

 private:
  std::array<DrainedProbe, kPortsPerPartition> items_{};
  std::size_t count_ = 0;
};

/// Same-cycle ordinal of a probe among the probes bound for one buffer.
struct Label {
  BufferedProbe probe;
  std::uint32_t buffer = 0;
  std::uint32_t ordinal = 0;
};

struct RoutedProbe {
  BufferedProbe probe;
  std::uint32_t buffer = 0;
};

/// Labels probes leaving the register layer in one cycle. Within each target
/// buffer, probes ordered by chunk index get ordinals 0, 1, 2, ...
/// The output keeps the input order.
std::vector<Label> queue_label(std::span<const RoutedProbe> probes);

class SubtreeBuffer {
 public:
  /// Throws ConfigError when slots == 0.
  SubtreeBuffer(std::uint32_t subtree, std::size_t slots, BufferPolicy policy);

  std::uint32_t subtree() const { return subtree_; }
  BufferPolicy policy() const { return policy_; }
  std::size_t capacity() const { return slots_.size(); }
  std::size_t occupancy() const { return occupancy_; }
  bool empty() const { return occupancy_ == 0; }
  bool full() const { return occupancy_ == slots_.size(); }
  std::size_t read_ptr() const { return read_ptr_; }
  std::size_t write_ptr() const { return write_ptr_; }
  const std::optional<BufferedProbe>& slot(std::size_t i) const { return slots_[i]; }

  /// Direct policy. Throws ConfigError when chunk_index >= capacity().
  InsertResult direct_insert(const BufferedProbe& probe);

  /// Direct policy: lowest occupied slot of each half, lower half on port A.
  DrainResult direct_drain();

  /// Queue policy. Tries slot (write_ptr + label.ordinal) mod S. Accepted
  /// probes become visible to the write pointer only after queue_commit().
  InsertResult queue_insert(const BufferedProbe& probe, const Label& label);

  /// Advances write_ptr past the probes accepted since the last commit.
  void queue_commit();

  /// Queue policy: up to two oldest probes, the older on port A.
  DrainResult queue_drain();

  /// Dispatches to the policy's drain.
  DrainResult drain() { return policy_ == BufferPolicy::Direct ? direct_drain() : queue_drain(); }

 private:
  void require(BufferPolicy p) const;

  std::uint32_t subtree_;
  BufferPolicy policy_;
  std::vector<std::optional<BufferedProbe>> slots_;
  std::size_t occupancy_ = 0;
  std::size_t read_ptr_ = 0;
  std::size_t write_ptr_ = 0;
  std::size_t uncommitted_ = 0;
};

}  // namespace bstsim
