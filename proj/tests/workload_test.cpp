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

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "bstsim/errors.hpp"
#include "bstsim/workload.hpp"

namespace bstsim {
namespace {

// Independent subtree oracle: walk the level-order array by key comparison.
std::uint32_t walk_subtree(const CompleteTree& tree, std::uint32_t key, unsigned x) {
  std::uint32_t i = 0;
  for (unsigned l = 0; l < x; ++l) {
    const auto k = tree.nodes()[i].key;
    if (key == k) return kNoSubtree;
    i = key < k ? 2 * i + 1 : 2 * i + 2;
  }
  return i - ((1u << x) - 1);
}

TEST(Equal, LeftmostLeaf) {
  const auto tree = CompleteTree::build(2);
  const auto set = gen_equal(tree, 4);
  EXPECT_EQ(set.keys, (std::vector<std::uint32_t>{1, 1, 1, 1}));
  EXPECT_EQ(set.kind, KeySetKind::Equal);
}

TEST(Equal, EmptySet) {
  EXPECT_TRUE(gen_equal(CompleteTree::build(3), 0).keys.empty());
}

TEST(Equal, LeafRank) {
  const auto tree = CompleteTree::build(3);
  EXPECT_EQ(gen_equal(tree, 2, 7).keys, (std::vector<std::uint32_t>{29, 29}));
  EXPECT_THROW(gen_equal(tree, 2, 8), ConfigError);
}

TEST(Random, Deterministic) {
  const auto tree = CompleteTree::build(10);
  EXPECT_EQ(gen_random(tree, 500, 42).keys, gen_random(tree, 500, 42).keys);
  EXPECT_NE(gen_random(tree, 500, 42).keys, gen_random(tree, 500, 43).keys);
}

TEST(Random, AllHits) {
  const auto tree = CompleteTree::build(8);
  for (auto k : gen_random(tree, 5000, 7).keys) {
    ASSERT_TRUE(reference_lookup(tree, k).found) << k;
  }
}

TEST(Random, MissesRoughlyHalf) {
  const auto tree = CompleteTree::build(8);
  const auto keys = gen_random(tree, 20000, 7, true).keys;
  std::size_t misses = 0;
  for (auto k : keys) {
    ASSERT_GE(k, 1u);
    ASSERT_LE(k, 2 * tree.node_count());
    misses += !reference_lookup(tree, k).found;
  }
  EXPECT_NEAR(static_cast<double>(misses) / keys.size(), 0.5, 0.02);
}

TEST(Random, SubtreeHistogramNearUniform) {
  const auto tree = CompleteTree::build(15);
  const auto keys = gen_random(tree, 65536, 1).keys;
  std::array<std::size_t, 8> hist{};
  std::size_t reg_hits = 0;
  for (auto k : keys) {
    const auto s = subtree_of_key(tree, k, 3);
    if (s == kNoSubtree) {
      ++reg_hits;
    } else {
      ++hist[s];
    }
  }
  const double expect = (keys.size() - reg_hits) / 8.0;
  for (auto c : hist) EXPECT_LT(std::abs(c - expect) / expect, 0.05);
}

TEST(BoundedDraw, InRangeAndCoversSmallBound) {
  std::mt19937_64 rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = bounded_draw(rng, 5);
    ASSERT_LT(v, 5u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Split, RoundRobinTargets) {
  const auto tree = CompleteTree::build(4);
  const auto keys = gen_split(tree, 8, 4, 2).keys;
  std::vector<std::uint32_t> targets;
  for (auto k : keys) targets.push_back(walk_subtree(tree, k, 2));
  EXPECT_EQ(targets, (std::vector<std::uint32_t>{0, 1, 2, 3, 0, 1, 2, 3}));
  for (auto k : keys) EXPECT_EQ(reference_lookup(tree, k).terminal_level, 4u);
}

TEST(Split, LeavesInOrderAndWrap) {
  const auto tree = CompleteTree::build(3);
  // 2 subtrees of height 2, 4 leaves each: leaf ranks 0..3 and 4..7.
  const auto keys = gen_split(tree, 10, 2, 1).keys;
  std::vector<std::uint32_t> expect;
  for (std::uint32_t i = 0; i < 10; ++i) {
    const std::uint32_t rank = (i % 2) * 4 + (i / 2) % 4;
    expect.push_back(tree.leaf_key(rank));
  }
  EXPECT_EQ(keys, expect);
}

TEST(Split, SingleSubtree) {
  const auto tree = CompleteTree::build(2);
  const auto keys = gen_split(tree, 5, 1, 0).keys;
  EXPECT_EQ(keys, (std::vector<std::uint32_t>{1, 5, 9, 13, 1}));
}

TEST(Split, InvalidShape) {
  const auto tree = CompleteTree::build(3);
  EXPECT_THROW(gen_split(tree, 4, 3, 2), ConfigError);
  EXPECT_THROW(gen_split(tree, 4, 16, 4), ConfigError);
}

TEST(SubtreeOfKey, MatchesWalk) {
  const auto tree = CompleteTree::build(6);
  for (unsigned x = 0; x <= 6; ++x) {
    for (std::uint32_t k = 0; k <= 2 * tree.node_count() + 1; ++k) {
      ASSERT_EQ(subtree_of_key(tree, k, x), walk_subtree(tree, k, x)) << k << " x=" << x;
    }
  }
}

TEST(KindNames, RoundTrip) {
  for (auto k : {KeySetKind::Equal, KeySetKind::Random, KeySetKind::Split}) {
    EXPECT_EQ(parse_key_set_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_key_set_kind("zipf"), ConfigError);
}

TEST(KeySetFile, RoundTrip) {
  const auto tree = CompleteTree::build(9);
  const auto set = gen_random(tree, 1234, 77);
  std::stringstream buf;
  write_key_set(buf, set);
  EXPECT_EQ(buf.str().size(), 16u + 4u * 1234u);
  const auto back = read_key_set(buf);
  EXPECT_EQ(back.kind, KeySetKind::Random);
  EXPECT_EQ(back.keys, set.keys);
}

TEST(KeySetFile, HeaderLayout) {
  KeySet set{KeySetKind::Split, 0, {0x01020304u}};
  std::stringstream buf;
  write_key_set(buf, set);
  const std::string s = buf.str();
  const std::string expect("BSTK\x01\x00\x02\x00\x01\x00\x00\x00\x00\x00\x00\x00\x04\x03\x02\x01",
                           20);
  EXPECT_EQ(s, expect);
}

TEST(KeySetFile, BadMagicAndTruncation) {
  std::stringstream bad("XXXX\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00");
  EXPECT_THROW(read_key_set(bad), std::runtime_error);
  KeySet set{KeySetKind::Equal, 0, {1, 1, 1}};
  std::stringstream buf;
  write_key_set(buf, set);
  std::stringstream cut(buf.str().substr(0, buf.str().size() - 2));
  EXPECT_THROW(read_key_set(cut), std::runtime_error);
}

}  // namespace
}  // namespace bstsim
