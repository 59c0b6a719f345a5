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
 * @file tree.hpp
 * @brief Complete binary search tree stored in level order.
 *
 * The tree is the dataset every engine searches. Node i has children 2i+1 and
 * 2i+2, so each level occupies a contiguous index range
 * [2^level - 1, 2^(level+1) - 2]. Keys follow the odd-key rule: the node at
 * in-order position p stores key 2p+1 and value p. Every odd key in
 * [1, 2 * node_count - 1] is therefore a hit and every even key a miss.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bstsim {

inline constexpr unsigned kMaxTreeHeight = 25;

struct KeyValue {
  std::uint32_t key = 0;
  std::uint32_t value = 0;

  friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

enum class Direction { Left, Right };

/// Flat level-order node index. Level and offset are derived.
class NodeAddr {
 public:
  constexpr NodeAddr() = default;
  constexpr explicit NodeAddr(std::uint32_t index) : index_(index) {}

  static constexpr NodeAddr at(unsigned level, std::uint32_t offset) {
    return NodeAddr(((std::uint32_t{1} << level) - 1) + offset);
  }

  constexpr std::uint32_t index() const { return index_; }

  constexpr unsigned level() const {
    unsigned level = 0;
    for (std::uint64_t v = std::uint64_t{index_} + 1; v > 1; v >>= 1) ++level;
    return level;
  }

  constexpr std::uint32_t offset() const {
    return index_ - ((std::uint32_t{1} << level()) - 1);
  }

  constexpr NodeAddr parent() const { return NodeAddr((index_ - 1) / 2); }

  friend constexpr bool operator==(NodeAddr, NodeAddr) = default;

 private:
  std::uint32_t index_ = 0;
};

struct LookupResult {
  bool found = false;
  std::uint32_t value = 0;
  unsigned comparisons = 0;
  unsigned terminal_level = 0;

  friend bool operator==(const LookupResult&, const LookupResult&) = default;
};

class CompleteTree {
 public:
  /// Builds a tree of `height` levels below the root using the odd-key rule.
  /// Throws ConfigError if height exceeds kMaxTreeHeight.
  static CompleteTree build(unsigned height);

  unsigned height() const { return height_; }
  std::uint32_t node_count() const { return static_cast<std::uint32_t>(nodes_.size()); }
  std::uint32_t leaf_count() const { return std::uint32_t{1} << height_; }
  std::span<const KeyValue> nodes() const { return nodes_; }
  const KeyValue& node(NodeAddr addr) const { return nodes_[addr.index()]; }
  bool contains(NodeAddr addr) const { return addr.index() < nodes_.size(); }

  /// Nodes of one level, left to right.
  std::span<const KeyValue> level(unsigned level) const;

  /// In-order position of a node; its key is 2 * position + 1.
  std::uint32_t inorder_position(NodeAddr addr) const;

  /// Key of the leaf at in-order leaf rank `rank` (0 = leftmost).
  std::uint32_t leaf_key(std::uint32_t rank) const;

  /// Throws AddressingError when addr is a leaf of this tree.
  NodeAddr child(NodeAddr addr, Direction dir) const;

 private:
  CompleteTree(unsigned height, std::vector<KeyValue> nodes)
      : height_(height), nodes_(std::move(nodes)) {}

  unsigned height_ = 0;
  std::vector<KeyValue> nodes_;
};

inline constexpr std::uint32_t complete_node_count(unsigned height) {
  return static_cast<std::uint32_t>((std::uint64_t{1} << (height + 1)) - 1);
}

NodeAddr child_addr(NodeAddr addr, Direction dir, unsigned tree_height);

/// Plain BST descent from the root; the functional oracle for every engine.
LookupResult reference_lookup(const CompleteTree& tree, std::uint32_t key);

}  // namespace bstsim
