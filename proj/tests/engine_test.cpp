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

#include <algorithm>
#include <vector>

#include "bstsim/engine.hpp"
#include "bstsim/errors.hpp"
#include "bstsim/workload.hpp"

namespace bstsim {
namespace {

TEST(ChunkSize, PerVariant) {
  EXPECT_EQ(derive_chunk_size(EngineConfig::hrz(4)), 2u);
  EXPECT_EQ(derive_chunk_size(EngineConfig::dup(8, 4)), 16u);
  EXPECT_EQ(derive_chunk_size(EngineConfig::hyb(4, BufferPolicy::Direct, 4)), 8u);
}

TEST(EngineConfig, Names) {
  EXPECT_EQ(EngineConfig::hrz(3).name(), "hrz");
  EXPECT_EQ(EngineConfig::dup(4, 3).name(), "dup4");
  EXPECT_EQ(EngineConfig::hyb(8, BufferPolicy::Direct, 3).name(), "hyb8");
  EXPECT_EQ(EngineConfig::hyb(8, BufferPolicy::Queue, 3).name(), "hyb8q");
}

TEST(EngineConfig, Invalid) {
  EXPECT_THROW(EngineConfig::dup(1, 3).validate(), ConfigError);
  EXPECT_THROW(EngineConfig::hyb(3, BufferPolicy::Queue, 3).validate(), ConfigError);
  EXPECT_THROW(EngineConfig::hyb(16, BufferPolicy::Queue, 3).validate(), ConfigError);
  auto direct = EngineConfig::hyb(4, BufferPolicy::Direct, 5);
  direct.buffer_slots = 4;
  EXPECT_THROW(direct.validate(), ConfigError);
  const auto tree = CompleteTree::build(4);
  EXPECT_THROW(Engine(EngineConfig::hrz(5), tree), ConfigError);
}

TEST(BuildEngine, Dup8MemoryNodes) {
  const auto tree = CompleteTree::build(19);
  const Engine e(EngineConfig::dup(8, 19), tree);
  EXPECT_EQ(tree.node_count(), (1u << 20) - 1);
  EXPECT_EQ(e.memory_nodes(), 8ull * ((1u << 20) - 1));
}

TEST(BuildEngine, HrzShape) {
  const auto tree = CompleteTree::build(2);
  const Engine e(EngineConfig::hrz(2), tree);
  EXPECT_EQ(e.partition_count(), 3u);
  EXPECT_TRUE(e.buffers().empty());
  EXPECT_EQ(e.memory_nodes(), 7u);
}

TEST(BuildEngine, HybShape) {
  const auto tree = CompleteTree::build(5);
  const Engine e(EngineConfig::hyb(4, BufferPolicy::Queue, 5), tree);
  EXPECT_EQ(e.register_node_count(), 3u);
  EXPECT_EQ(e.buffers().size(), 4u);
  EXPECT_EQ(e.partition_count(), 16u);
  EXPECT_EQ(e.buffers()[0].capacity(), 8u);
  EXPECT_EQ(e.memory_nodes(), tree.node_count());
}

TEST(RouteSubtree, Examples) {
  const KeyValue root{15, 7};
  EXPECT_EQ(route_subtree(3, NodeAddr(0), root), 0u);
  EXPECT_EQ(route_subtree(20, NodeAddr(0), root), 1u);
  const KeyValue n{21, 10};
  EXPECT_EQ(route_subtree(25, NodeAddr::at(1, 1), n), 3u);
  EXPECT_THROW(route_subtree(21, NodeAddr::at(1, 1), n), std::logic_error);
}

TEST(Admit, HrzTwoPerCycle) {
  const auto tree = CompleteTree::build(3);
  Engine e(EngineConfig::hrz(3), tree);
  const std::vector<std::uint32_t> keys = {1, 3, 5};
  e.load(keys);
  EXPECT_EQ(e.step().admitted, 2u);
  EXPECT_EQ(e.step().admitted, 1u);
  EXPECT_EQ(e.step().admitted, 0u);
}

TEST(Admit, SingleKeyAnyVariant) {
  const auto tree = CompleteTree::build(4);
  for (const auto& cfg : {EngineConfig::hrz(4), EngineConfig::dup(4, 4),
                          EngineConfig::hyb(4, BufferPolicy::Direct, 4)}) {
    Engine e(cfg, tree);
    const std::vector<std::uint32_t> keys = {9};
    e.load(keys);
    EXPECT_EQ(e.step().admitted, 1u) << cfg.name();
  }
}

TEST(Admit, StalledHybAdmitsNothing) {
  const auto tree = CompleteTree::build(6);
  Engine e(EngineConfig::hyb(4, BufferPolicy::Direct, 6), tree);
  const auto keys = gen_equal(tree, 64).keys;
  e.load(keys);
  bool saw_stall = false;
  while (!e.finished()) {
    const auto before = e.stall_cycles();
    const auto s = e.step();
    if (s.stalled) {
      saw_stall = true;
      EXPECT_EQ(s.admitted, 0u);
      EXPECT_EQ(e.stall_cycles(), before + 1);
    }
  }
  EXPECT_TRUE(saw_stall);
}

TEST(Step, HrzSixLeafKeysTrace) {
  const auto tree = CompleteTree::build(2);
  Engine e(EngineConfig::hrz(2), tree);
  const std::vector<std::uint32_t> keys = {1, 5, 9, 13, 1, 5};
  e.load(keys);
  std::vector<std::uint32_t> admitted;
  while (!e.finished()) admitted.push_back(e.step().admitted);
  EXPECT_EQ(admitted, (std::vector<std::uint32_t>{2, 2, 2, 0, 0}));
  EXPECT_EQ(e.cycle(), 5u);
  EXPECT_EQ(e.probe(5).result->completion_cycle, 5u);
}

TEST(Step, HrzMaxInFlight) {
  const unsigned h = 6;
  const auto tree = CompleteTree::build(h);
  Engine e(EngineConfig::hrz(h), tree);
  const auto r = e.run(gen_equal(tree, 1000).keys);
  EXPECT_EQ(r.max_in_flight, 2u * (h + 1));
}

TEST(Step, HybEqualDrainsTwoPerCycle) {
  const unsigned h = 10;
  const auto tree = CompleteTree::build(h);
  for (auto policy : {BufferPolicy::Direct, BufferPolicy::Queue}) {
    Engine e(EngineConfig::hyb(8, policy, h), tree);
    const auto r = e.run(gen_equal(tree, 20000).keys);
    EXPECT_NEAR(r.throughput, 2.0, 0.01);
    EXPECT_GT(r.stall_cycles, 0u);
  }
}

// Hrz/Dup never stall, so key i completes at (i / chunk) + 1 + terminal level.
TEST(Run, NoStallVariantsMatchClosedFormTiming) {
  for (unsigned h : {0u, 1u, 3u, 7u}) {
    const auto tree = CompleteTree::build(h);
    const auto keys = gen_random(tree, 777, 11, true).keys;
    for (const auto& cfg : {EngineConfig::hrz(h), EngineConfig::dup(2, h),
                            EngineConfig::dup(3, h), EngineConfig::dup(8, h)}) {
      Engine e(cfg, tree);
      const auto r = e.run(keys);
      const auto chunk = derive_chunk_size(cfg);
      std::uint64_t last = 0;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto expect = reference_lookup(tree, keys[i]);
        const auto cycle = i / chunk + 1 + expect.terminal_level;
        ASSERT_EQ(r.results[i].lookup, expect);
        ASSERT_EQ(r.results[i].completion_cycle, cycle) << cfg.name() << " key " << i;
        last = std::max<std::uint64_t>(last, cycle);
      }
      EXPECT_EQ(r.total_cycles, last);
      EXPECT_EQ(r.stall_cycles, 0u);
    }
  }
}

TEST(Run, HrzRandomThroughput) {
  const auto tree = CompleteTree::build(15);
  Engine e(EngineConfig::hrz(15), tree);
  const auto r = e.run(gen_random(tree, 65536, 1).keys);
  EXPECT_GE(r.throughput, 1.9);
  EXPECT_LE(r.throughput, 2.0);
}

TEST(Run, Dup8Throughput) {
  const auto tree = CompleteTree::build(15);
  Engine e(EngineConfig::dup(8, 15), tree);
  const auto r = e.run(gen_random(tree, 65536, 1).keys);
  EXPECT_NEAR(r.throughput, 16.0, 0.32);
}

TEST(Run, SingleKeyLatency) {
  const unsigned h = 9;
  const auto tree = CompleteTree::build(h);
  for (const auto& cfg :
       {EngineConfig::hrz(h), EngineConfig::dup(4, h), EngineConfig::hyb(2, BufferPolicy::Direct, h),
        EngineConfig::hyb(8, BufferPolicy::Queue, h)}) {
    Engine e(cfg, tree);
    const std::vector<std::uint32_t> key = {tree.leaf_key(17)};
    const auto r = e.run(key);
    EXPECT_LE(r.total_cycles, h + 2u) << cfg.name();
    EXPECT_EQ(r.results[0].lookup, reference_lookup(tree, key[0]));
  }
}

TEST(Run, EmptyKeysRejected) {
  const auto tree = CompleteTree::build(2);
  Engine e(EngineConfig::hrz(2), tree);
  EXPECT_THROW(e.run({}), std::invalid_argument);
}

TEST(Run, CycleBudget) {
  const auto tree = CompleteTree::build(5);
  Engine e(EngineConfig::hrz(5), tree);
  const std::vector<std::uint32_t> keys(10, 1);
  e.load(keys);
  EXPECT_EQ(e.cycle_budget(), 10u * 7u * 4u);
}

TEST(Run, ReusableEngine) {
  const auto tree = CompleteTree::build(6);
  Engine e(EngineConfig::hyb(4, BufferPolicy::Queue, 6), tree);
  const auto keys = gen_random(tree, 300, 5).keys;
  const auto a = e.run(keys);
  const auto b = e.run(keys);
  EXPECT_EQ(a.total_cycles, b.total_cycles);
  EXPECT_EQ(a.stall_cycles, b.stall_cycles);
}

TEST(Run, RegisterLevelsDoNotChangeHrzTiming) {
  const auto tree = CompleteTree::build(8);
  const auto keys = gen_random(tree, 2000, 3).keys;
  auto base = EngineConfig::dup(4, 8);
  auto tuned = base;
  tuned.reg_levels = 3;
  const auto a = Engine(base, tree).run(keys);
  const auto b = Engine(tuned, tree).run(keys);
  EXPECT_EQ(a.total_cycles, b.total_cycles);
  EXPECT_LT(b.bram_blocks, a.bram_blocks + 1);
  EXPECT_EQ(a.memory_nodes, b.memory_nodes);
}

TEST(Speedup, Examples) {
  const auto tree = CompleteTree::build(10);
  const auto keys = gen_equal(tree, 8192).keys;
  const auto hrz = Engine(EngineConfig::hrz(10), tree).run(keys);
  const auto dup4 = Engine(EngineConfig::dup(4, 10), tree).run(keys);
  const auto dup8 = Engine(EngineConfig::dup(8, 10), tree).run(keys);
  EXPECT_DOUBLE_EQ(speedup(hrz, hrz), 1.0);
  EXPECT_NEAR(speedup(dup4, hrz), 4.0, 0.08);
  EXPECT_NEAR(speedup(dup8, hrz), 8.0, 0.16);
}

TEST(Speedup, MismatchedWorkloads) {
  const auto tree = CompleteTree::build(4);
  const auto a = Engine(EngineConfig::hrz(4), tree).run(gen_equal(tree, 10).keys);
  const auto b = Engine(EngineConfig::hrz(4), tree).run(gen_equal(tree, 10, 1).keys);
  EXPECT_THROW(speedup(a, b), ComparisonError);
}

}  // namespace
}  // namespace bstsim
