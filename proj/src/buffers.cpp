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

#include "bstsim/buffers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "bstsim/errors.hpp"

namespace bstsim {

std::vector<Label> queue_label(std::span<const RoutedProbe> probes) {
  std::vector<std::size_t> order(probes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probes[a].probe.chunk_index < probes[b].probe.chunk_index;
  });

  std::vector<Label> labels(probes.size());
  std::unordered_map<std::uint32_t, std::uint32_t> next_ordinal;
  for (std::size_t i : order) {
    const auto& p = probes[i];
    labels[i] = Label{p.probe, p.buffer, next_ordinal[p.buffer]++};
  }
  return labels;
}

SubtreeBuffer::SubtreeBuffer(std::uint32_t subtree, std::size_t slots, BufferPolicy policy)
    : subtree_(subtree), policy_(policy), slots_(slots) {
  if (slots == 0) throw ConfigError("buffer needs at least one slot");
}

void SubtreeBuffer::require(BufferPolicy p) const {
  if (policy_ != p) {
    throw std::logic_error(std::string("buffer operation requires ") +
                           (p == BufferPolicy::Direct ? "direct" : "queue") + " policy");
  }
}

InsertResult SubtreeBuffer::direct_insert(const BufferedProbe& probe) {
  require(BufferPolicy::Direct);
  if (probe.chunk_index >= slots_.size()) {
    throw ConfigError("chunk index " + std::to_string(probe.chunk_index) +
                      " has no slot in a " + std::to_string(slots_.size()) + "-slot buffer");
  }
  auto& slot = slots_[probe.chunk_index];
  if (slot) return {InsertStatus::SlotOccupied, probe.chunk_index};
  slot = probe;
  ++occupancy_;
  return {InsertStatus::Accepted, probe.chunk_index};
}

DrainResult SubtreeBuffer::direct_drain() {
  require(BufferPolicy::Direct);
  DrainResult out;
  const std::size_t half = slots_.size() / 2;
  auto take_lowest = [&](std::size_t from, std::size_t to, Port port) {
    for (std::size_t i = from; i < to; ++i) {
      if (slots_[i]) {
        out.push({*slots_[i], i, port});
        slots_[i].reset();
        --occupancy_;
        return;
      }
    }
  };
  take_lowest(0, half, Port::A);
  take_lowest(half, slots_.size(), Port::B);
  return out;
}

InsertResult SubtreeBuffer::queue_insert(const BufferedProbe& probe, const Label& label) {
  require(BufferPolicy::Queue);
  const std::size_t target = (write_ptr_ + label.ordinal) % slots_.size();
  if (slots_[target]) return {InsertStatus::BufferFull, target};
  slots_[target] = probe;
  ++occupancy_;
  ++uncommitted_;
  return {InsertStatus::Accepted, target};
}

void SubtreeBuffer::queue_commit() {
  require(BufferPolicy::Queue);
  write_ptr_ = (write_ptr_ + uncommitted_) % slots_.size();
  uncommitted_ = 0;
}

DrainResult SubtreeBuffer::queue_drain() {
  require(BufferPolicy::Queue);
  DrainResult out;
  for (Port port : {Port::A, Port::B}) {
    auto& slot = slots_[read_ptr_];
    if (!slot) break;
    out.push({*slot, read_ptr_, port});
    slot.reset();
    --occupancy_;
    read_ptr_ = (read_ptr_ + 1) % slots_.size();
  }
  return out;
}

}  // namespace bstsim
