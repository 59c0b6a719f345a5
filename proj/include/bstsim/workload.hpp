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
 * @file workload.hpp
 * @brief Key-set generators (Equal, Random, Split) and the key-set file format.
 *
 * Random sets use std::mt19937_64 seeded with the 64-bit seed. Bounded draws
 * use Lemire's multiply-shift with rejection, so the sequence does not depend
 * on the standard library's distribution implementation.
 *
 * Key-set file: a 16-byte little-endian header
 *   bytes 0-3   magic "BSTK"
 *   bytes 4-5   format version (1)
 *   bytes 6-7   kind (0 equal, 1 random, 2 split)
 *   bytes 8-15  key count
 * followed by count little-endian 32-bit keys.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bstsim/tree.hpp"

namespace bstsim {

inline constexpr std::string_view kPrngName = "mt19937_64";
inline constexpr std::uint16_t kKeySetFormatVersion = 1;

enum class KeySetKind : std::uint16_t { Equal = 0, Random = 1, Split = 2 };

std::string_view to_string(KeySetKind kind);
/// Throws ConfigError for anything but "equal", "random", "split".
KeySetKind parse_key_set_kind(std::string_view name);

struct KeySet {
  KeySetKind kind = KeySetKind::Equal;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> keys;

  std::size_t size() const { return keys.size(); }
};

/// `size` copies of the key of the leaf at in-order leaf rank `leaf_rank`.
KeySet gen_equal(const CompleteTree& tree, std::size_t size, std::uint32_t leaf_rank = 0);

/// `size` keys drawn uniformly over the tree's nodes (hits only). With
/// include_misses, draws are uniform over [1, 2 * node_count], so even keys
/// (guaranteed misses) make up half of the set.
KeySet gen_random(const CompleteTree& tree, std::size_t size, std::uint64_t seed,
                  bool include_misses = false);

/// Key i is a leaf of subtree (i mod num_subtrees), where subtrees are rooted
/// at level reg_levels. Each subtree's leaves are visited left to right and
/// wrap around. Throws ConfigError unless num_subtrees == 2^reg_levels and
/// reg_levels <= height.
KeySet gen_split(const CompleteTree& tree, std::size_t size, std::uint32_t num_subtrees,
                 unsigned reg_levels);

/// Uniform draw in [0, bound), bound > 0.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

inline constexpr std::uint32_t kNoSubtree = 0xffffffffu;

/// Subtree (rooted at level reg_levels) that the search for `key` enters, or
/// kNoSubtree when the search ends inside the top reg_levels levels.
std::uint32_t subtree_of_key(const CompleteTree& tree, std::uint32_t key, unsigned reg_levels);

void write_key_set(std::ostream& out, const KeySet& set);
/// Throws std::runtime_error on a bad header or truncated body.
KeySet read_key_set(std::istream& in);

void save_key_set(const std::filesystem::path& path, const KeySet& set);
KeySet load_key_set(const std::filesystem::path& path);

}  // namespace bstsim
