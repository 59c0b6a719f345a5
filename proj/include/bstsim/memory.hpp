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
 * @file memory.hpp
 * @brief On-chip memory model: dual-port BRAM partitions, the port-free
 *        register layer, and the (level, subtree) -> partition layouts.
 *
 * A partition stores every node of one tree level inside one subtree and
 * grants at most two reads per cycle, one per port. The register layer holds
 * the top `x` levels and serves any number of reads in a cycle.
 *
 * Partition capacity is reported in 36-kbit blocks but never limits the
 * simulation; tree loading happens before cycle 0 and is not modeled.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bstsim/tree.hpp"

namespace bstsim {

enum class Port : std::uint8_t { A = 0, B = 1 };

inline constexpr unsigned kPortsPerPartition = 2;
inline constexpr std::uint64_t kBramBlockBits = 36 * 1024;
inline constexpr std::uint64_t kNodeBits = 64;

/// Half-open range of level-order indices.
struct NodeSlice {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - begin; }
  bool contains(NodeAddr addr) const { return addr.index() >= begin && addr.index() < end; }
};

/// Number of 36-kbit blocks needed to hold `nodes` key/value pairs.
std::uint64_t bram_blocks_for(std::uint64_t nodes);

class BramPartition {
 public:
  BramPartition(std::uint32_t id, std::uint32_t subtree, unsigned level, NodeSlice slice)
      : id_(id), subtree_(subtree), level_(level), slice_(slice) {}

  std::uint32_t id() const { return id_; }
  std::uint32_t subtree() const { return subtree_; }
  unsigned level() const { return level_; }
  const NodeSlice& slice() const { return slice_; }
  unsigned ports() const { return kPortsPerPartition; }
  std::uint64_t bram_blocks() const { return bram_blocks_for(slice_.size()); }

  /// Requests one read in `cycle`. The first two requests of a cycle get
  /// ports A then B; later ones return nullopt (port conflict). The budget
  /// resets whenever the cycle number changes. Throws AddressingError when
  /// addr is outside this partition.
  std::optional<Port> issue_read(std::uint64_t cycle, NodeAddr addr);

  /// Reads granted so far in `cycle` (0 for any other cycle).
  unsigned grants_in(std::uint64_t cycle) const { return cycle == cycle_ ? grants_ : 0; }

  void reset() {
    cycle_ = ~std::uint64_t{0};
    grants_ = 0;
  }

 private:
  std::uint32_t id_;
  std::uint32_t subtree_;
  unsigned level_;
  NodeSlice slice_;
  std::uint64_t cycle_ = ~std::uint64_t{0};
  unsigned grants_ = 0;
};

class RegisterLayer {
 public:
  RegisterLayer() = default;
  /// Copies levels 0..levels-1 of the tree.
  RegisterLayer(const CompleteTree& tree, unsigned levels);

  unsigned levels() const { return levels_; }
  std::span<const KeyValue> nodes() const { return nodes_; }
  bool holds(NodeAddr addr) const { return addr.index() < nodes_.size(); }

  const KeyValue& read(NodeAddr addr) const;

  /// All requested reads are served in the same cycle; there is no port budget.
  std::vector<KeyValue> read_all(std::span<const NodeAddr> addrs) const;

 private:
  unsigned levels_ = 0;
  std::vector<KeyValue> nodes_;
};

enum class LayoutKind { Horizontal, Hybrid };

class PartitionLayout {
 public:
  LayoutKind kind() const { return kind_; }
  unsigned tree_height() const { return tree_height_; }
  unsigned reg_levels() const { return registers_.levels(); }
  std::uint32_t num_subtrees() const { return num_subtrees_; }

  const RegisterLayer& registers() const { return registers_; }
  std::span<const BramPartition> partitions() const { return partitions_; }
  std::span<BramPartition> partitions() { return partitions_; }

  /// Partition storing `level` of `subtree`. level must be >= reg_levels().
  BramPartition& partition(std::uint32_t subtree, unsigned level);
  const BramPartition& partition(std::uint32_t subtree, unsigned level) const;

  /// Partition holding a node, or nullptr when it lives in the register layer.
  const BramPartition* find(NodeAddr addr) const;

  /// Subtree a node at level >= reg_levels() belongs to.
  std::uint32_t subtree_of(NodeAddr addr) const;

  std::uint64_t bram_blocks() const;

  friend PartitionLayout layout_horizontal(const CompleteTree&, unsigned, std::uint32_t);
  friend PartitionLayout layout_hybrid(const CompleteTree&, unsigned, std::uint32_t,
                                       std::uint32_t);

 private:
  std::size_t slot(std::uint32_t subtree, unsigned level) const;

  LayoutKind kind_ = LayoutKind::Horizontal;
  unsigned tree_height_ = 0;
  std::uint32_t num_subtrees_ = 1;
  RegisterLayer registers_;
  std::vector<BramPartition> partitions_;
};

/// One partition per level. With reg_levels > 0 the top levels move to
/// registers and only levels reg_levels..height get partitions. Partition ids
/// start at first_id so several replicas can share one id space.
PartitionLayout layout_horizontal(const CompleteTree& tree, unsigned reg_levels = 0,
                                  std::uint32_t first_id = 0);

/// Register layer of reg_levels levels plus num_subtrees private partition
/// chains, one per node of level reg_levels. Requires num_subtrees == 2^reg_levels
/// and 1 <= reg_levels <= height; throws ConfigError otherwise.
PartitionLayout layout_hybrid(const CompleteTree& tree, unsigned reg_levels,
                              std::uint32_t num_subtrees, std::uint32_t first_id = 0);

}  // namespace bstsim
