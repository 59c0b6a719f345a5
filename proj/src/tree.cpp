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

#include "bstsim/tree.hpp"

#include <string>

#include "bstsim/errors.hpp"

namespace bstsim {

CompleteTree CompleteTree::build(unsigned height) {
  if (height > kMaxTreeHeight) {
    throw ConfigError("tree height " + std::to_string(height) + " out of range [0, " +
                      std::to_string(kMaxTreeHeight) + "]");
  }
  std::vector<KeyValue> nodes(complete_node_count(height));
  for (unsigned level = 0; level <= height; ++level) {
    const std::uint32_t first = (std::uint32_t{1} << level) - 1;
    const std::uint32_t width = std::uint32_t{1} << level;
    const unsigned span_shift = height - level;
    for (std::uint32_t offset = 0; offset < width; ++offset) {
      // Subtree of this node covers 2^(span_shift+1) - 1 in-order positions.
      const std::uint32_t pos = ((2 * offset + 1) << span_shift) - 1;
      nodes[first + offset] = KeyValue{2 * pos + 1, pos};
    }
  }
  return CompleteTree(height, std::move(nodes));
}

std::span<const KeyValue> CompleteTree::level(unsigned level) const {
  if (level > height_) {
    throw AddressingError("level " + std::to_string(level) + " beyond tree height " +
                          std::to_string(height_));
  }
  return std::span<const KeyValue>(nodes_).subspan((std::size_t{1} << level) - 1,
                                                   std::size_t{1} << level);
}

std::uint32_t CompleteTree::inorder_position(NodeAddr addr) const {
  return node(addr).value;
}

std::uint32_t CompleteTree::leaf_key(std::uint32_t rank) const {
  if (rank >= leaf_count()) {
    throw ConfigError("leaf rank " + std::to_string(rank) + " out of range for " +
                      std::to_string(leaf_count()) + " leaves");
  }
  return 4 * rank + 1;
}

NodeAddr CompleteTree::child(NodeAddr addr, Direction dir) const {
  return child_addr(addr, dir, height_);
}

NodeAddr child_addr(NodeAddr addr, Direction dir, unsigned tree_height) {
  if (addr.level() >= tree_height) {
    throw AddressingError("node " + std::to_string(addr.index()) + " is a leaf");
  }
  return NodeAddr(2 * addr.index() + (dir == Direction::Left ? 1 : 2));
}

LookupResult reference_lookup(const CompleteTree& tree, std::uint32_t key) {
  LookupResult result;
  std::uint32_t index = 0;
  for (unsigned level = 0;; ++level) {
    const KeyValue& kv = tree.nodes()[index];
    ++result.comparisons;
    result.terminal_level = level;
    if (key == kv.key) {
      result.found = true;
      result.value = kv.value;
      return result;
    }
    if (level == tree.height()) return result;
    index = 2 * index + (key < kv.key ? 1 : 2);
  }
}

}  // namespace bstsim
