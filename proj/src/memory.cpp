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

#include "bstsim/memory.hpp"

#include <string>

#include "bstsim/errors.hpp"

namespace bstsim {

std::uint64_t bram_blocks_for(std::uint64_t nodes) {
  return (nodes * kNodeBits + kBramBlockBits - 1) / kBramBlockBits;
}

std::optional<Port> BramPartition::issue_read(std::uint64_t cycle, NodeAddr addr) {
  if (!slice_.contains(addr)) {
    throw AddressingError("node " + std::to_string(addr.index()) + " not in partition " +
                          std::to_string(id_));
  }
  if (cycle != cycle_) {
    cycle_ = cycle;
    grants_ = 0;
  }
  if (grants_ >= kPortsPerPartition) return std::nullopt;
  return static_cast<Port>(grants_++);
}

RegisterLayer::RegisterLayer(const CompleteTree& tree, unsigned levels) : levels_(levels) {
  if (levels > tree.height() + 1) {
    throw ConfigError("register layer of " + std::to_string(levels) +
                      " levels exceeds the tree");
  }
  const auto all = tree.nodes();
  nodes_.assign(all.begin(), all.begin() + ((std::size_t{1} << levels) - 1));
}

const KeyValue& RegisterLayer::read(NodeAddr addr) const {
  if (!holds(addr)) {
    throw AddressingError("node " + std::to_string(addr.index()) +
                          " is not in the register layer");
  }
  return nodes_[addr.index()];
}

std::vector<KeyValue> RegisterLayer::read_all(std::span<const NodeAddr> addrs) const {
  std::vector<KeyValue> out;
  out.reserve(addrs.size());
  for (NodeAddr a : addrs) out.push_back(read(a));
  return out;
}

std::size_t PartitionLayout::slot(std::uint32_t subtree, unsigned level) const {
  const unsigned x = reg_levels();
  if (subtree >= num_subtrees_ || level < x || level > tree_height_) {
    throw AddressingError("no partition for subtree " + std::to_string(subtree) +
                          " level " + std::to_string(level));
  }
  return std::size_t{subtree} * (tree_height_ - x + 1) + (level - x);
}

BramPartition& PartitionLayout::partition(std::uint32_t subtree, unsigned level) {
  return partitions_[slot(subtree, level)];
}

const BramPartition& PartitionLayout::partition(std::uint32_t subtree, unsigned level) const {
  return partitions_[slot(subtree, level)];
}

std::uint32_t PartitionLayout::subtree_of(NodeAddr addr) const {
  const unsigned level = addr.level();
  const unsigned x = reg_levels();
  if (level < x) {
    throw AddressingError("node " + std::to_string(addr.index()) + " is a register node");
  }
  if (kind_ == LayoutKind::Horizontal) return 0;
  return addr.offset() >> (level - x);
}

const BramPartition* PartitionLayout::find(NodeAddr addr) const {
  if (addr.level() < reg_levels()) return nullptr;
  return &partition(subtree_of(addr), addr.level());
}

std::uint64_t PartitionLayout::bram_blocks() const {
  std::uint64_t total = 0;
  for (const auto& p : partitions_) total += p.bram_blocks();
  return total;
}

PartitionLayout layout_horizontal(const CompleteTree& tree, unsigned reg_levels,
                                  std::uint32_t first_id) {
  if (reg_levels > tree.height()) {
    throw ConfigError("register levels " + std::to_string(reg_levels) +
                      " must not exceed tree height " + std::to_string(tree.height()));
  }
  PartitionLayout layout;
  layout.kind_ = LayoutKind::Horizontal;
  layout.tree_height_ = tree.height();
  layout.num_subtrees_ = 1;
  layout.registers_ = RegisterLayer(tree, reg_levels);
  std::uint32_t id = first_id;
  for (unsigned level = reg_levels; level <= tree.height(); ++level) {
    const std::uint32_t first = (std::uint32_t{1} << level) - 1;
    layout.partitions_.emplace_back(id++, 0, level,
                                    NodeSlice{first, first + (std::uint32_t{1} << level)});
  }
  return layout;
}

PartitionLayout layout_hybrid(const CompleteTree& tree, unsigned reg_levels,
                              std::uint32_t num_subtrees, std::uint32_t first_id) {
  if (reg_levels < 1 || reg_levels > tree.height()) {
    throw ConfigError("hybrid layout needs 1 <= register levels <= tree height (" +
                      std::to_string(tree.height()) + "), got " +
                      std::to_string(reg_levels));
  }
  if (num_subtrees != (std::uint32_t{1} << reg_levels)) {
    throw ConfigError("hybrid layout with " + std::to_string(reg_levels) +
                      " register levels needs " +
                      std::to_string(std::uint32_t{1} << reg_levels) + " subtrees, got " +
                      std::to_string(num_subtrees));
  }
  PartitionLayout layout;
  layout.kind_ = LayoutKind::Hybrid;
  layout.tree_height_ = tree.height();
  layout.num_subtrees_ = num_subtrees;
  layout.registers_ = RegisterLayer(tree, reg_levels);
  std::uint32_t id = first_id;
  for (std::uint32_t s = 0; s < num_subtrees; ++s) {
    for (unsigned level = reg_levels; level <= tree.height(); ++level) {
      // Subtree s owns a contiguous run of 2^(level - x) nodes on each level.
      const std::uint32_t width = std::uint32_t{1} << (level - reg_levels);
      const std::uint32_t first = NodeAddr::at(level, s * width).index();
      layout.partitions_.emplace_back(id++, s, level, NodeSlice{first, first + width});
    }
  }
  return layout;
}

}  // namespace bstsim
