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

#include <deque>
#include <random>
#include <vector>

#include "bstsim/buffers.hpp"
#include "bstsim/errors.hpp"

namespace bstsim {
namespace {

BufferedProbe probe(std::uint32_t id, std::uint32_t chunk_index) { return {id, chunk_index}; }

std::vector<std::size_t> drained_slots(const DrainResult& d) {
  std::vector<std::size_t> out;
  for (const auto& x : d) out.push_back(x.slot);
  return out;
}

TEST(DirectBuffer, SlotEqualsChunkIndex) {
  SubtreeBuffer b(6, 8, BufferPolicy::Direct);
  const auto r = b.direct_insert(probe(42, 5));
  EXPECT_TRUE(r.accepted());
  EXPECT_EQ(r.slot, 5u);
  ASSERT_TRUE(b.slot(5));
  EXPECT_EQ(b.slot(5)->probe, 42u);
}

TEST(DirectBuffer, CollisionStallsDespiteFreeSlots) {
  SubtreeBuffer b(0, 8, BufferPolicy::Direct);
  ASSERT_TRUE(b.direct_insert(probe(1, 5)).accepted());
  const auto r = b.direct_insert(probe(2, 5));
  EXPECT_EQ(r.status, InsertStatus::SlotOccupied);
  EXPECT_EQ(b.occupancy(), 1u);
}

TEST(DirectBuffer, EmptyAcceptsAnyValidProbe) {
  for (std::uint32_t i = 0; i < 8; ++i) {
    SubtreeBuffer b(0, 8, BufferPolicy::Direct);
    EXPECT_TRUE(b.direct_insert(probe(i, i)).accepted());
  }
}

TEST(DirectBuffer, ChunkIndexBeyondSlots) {
  SubtreeBuffer b(0, 4, BufferPolicy::Direct);
  EXPECT_THROW(b.direct_insert(probe(0, 4)), ConfigError);
}

TEST(DirectBuffer, DrainLowestPerHalf) {
  SubtreeBuffer b(0, 8, BufferPolicy::Direct);
  for (std::uint32_t s : {1u, 3u, 5u}) ASSERT_TRUE(b.direct_insert(probe(s, s)).accepted());
  const auto d = b.direct_drain();
  EXPECT_EQ(drained_slots(d), (std::vector<std::size_t>{1, 5}));
  EXPECT_EQ(d[0].port, Port::A);
  EXPECT_EQ(d[1].port, Port::B);
  EXPECT_EQ(b.occupancy(), 1u);
}

TEST(DirectBuffer, DrainEmpty) {
  SubtreeBuffer b(0, 8, BufferPolicy::Direct);
  EXPECT_TRUE(b.direct_drain().empty());
}

TEST(DirectBuffer, UpperHalfOnly) {
  SubtreeBuffer b(0, 8, BufferPolicy::Direct);
  ASSERT_TRUE(b.direct_insert(probe(6, 6)).accepted());
  ASSERT_TRUE(b.direct_insert(probe(7, 7)).accepted());
  const auto d = b.direct_drain();
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].slot, 6u);
  EXPECT_EQ(d[0].port, Port::B);
}

TEST(QueueLabel, SameBuffer) {
  std::vector<RoutedProbe> in = {{probe(0, 0), 3}, {probe(1, 1), 3}};
  const auto labels = queue_label(in);
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0].ordinal, 0u);
  EXPECT_EQ(labels[1].ordinal, 1u);
}

TEST(QueueLabel, DistinctBuffers) {
  std::vector<RoutedProbe> in = {{probe(0, 0), 0}, {probe(1, 1), 1}};
  const auto labels = queue_label(in);
  EXPECT_EQ(labels[0].ordinal, 0u);
  EXPECT_EQ(labels[1].ordinal, 0u);
}

TEST(QueueLabel, Empty) { EXPECT_TRUE(queue_label({}).empty()); }

TEST(QueueLabel, OrderedByChunkIndexWithoutGaps) {
  std::vector<RoutedProbe> in = {
      {probe(0, 6), 1}, {probe(1, 2), 1}, {probe(2, 3), 0}, {probe(3, 0), 1}};
  const auto labels = queue_label(in);
  EXPECT_EQ(labels[3].ordinal, 0u);  // chunk index 0
  EXPECT_EQ(labels[1].ordinal, 1u);  // chunk index 2
  EXPECT_EQ(labels[0].ordinal, 2u);  // chunk index 6
  EXPECT_EQ(labels[2].ordinal, 0u);
}

// Advances the write pointer to `wp` by pushing and popping probes.
SubtreeBuffer queue_at(std::size_t slots, std::size_t wp) {
  SubtreeBuffer b(0, slots, BufferPolicy::Queue);
  for (std::size_t i = 0; i < wp; ++i) {
    b.queue_insert(probe(0, 0), Label{probe(0, 0), 0, 0});
    b.queue_commit();
    b.queue_drain();
  }
  return b;
}

TEST(QueueBuffer, WritePointerPlusOrdinal) {
  auto b = queue_at(8, 2);
  ASSERT_EQ(b.write_ptr(), 2u);
  const auto r = b.queue_insert(probe(9, 4), Label{probe(9, 4), 0, 1});
  EXPECT_TRUE(r.accepted());
  EXPECT_EQ(r.slot, 3u);
}

TEST(QueueBuffer, OneFreeSlotTwoIncoming) {
  SubtreeBuffer b(0, 4, BufferPolicy::Queue);
  for (std::uint32_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(b.queue_insert(probe(i, i), Label{probe(i, i), 0, i}).accepted());
  }
  b.queue_commit();
  EXPECT_TRUE(b.queue_insert(probe(10, 0), Label{probe(10, 0), 0, 0}).accepted());
  EXPECT_EQ(b.queue_insert(probe(11, 1), Label{probe(11, 1), 0, 1}).status,
            InsertStatus::BufferFull);
  b.queue_commit();
  EXPECT_TRUE(b.full());
}

TEST(QueueBuffer, ContiguousFromWritePointer) {
  auto b = queue_at(8, 5);
  for (std::uint32_t i = 0; i < 4; ++i) {
    const auto r = b.queue_insert(probe(i, i), Label{probe(i, i), 0, i});
    ASSERT_TRUE(r.accepted());
    EXPECT_EQ(r.slot, (5u + i) % 8);
  }
  b.queue_commit();
  EXPECT_EQ(b.write_ptr(), 1u);
}

TEST(QueueBuffer, DrainTwoOldest) {
  SubtreeBuffer b(0, 8, BufferPolicy::Queue);
  for (std::uint32_t i = 0; i < 3; ++i) {
    b.queue_insert(probe(i, i), Label{probe(i, i), 0, i});
  }
  b.queue_commit();
  auto d = b.queue_drain();
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].probe.probe, 0u);
  EXPECT_EQ(d[0].port, Port::A);
  EXPECT_EQ(d[1].probe.probe, 1u);
  EXPECT_EQ(b.read_ptr(), 2u);
  d = b.queue_drain();
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].probe.probe, 2u);
  EXPECT_TRUE(b.queue_drain().empty());
}

TEST(QueueBuffer, PolicyMismatch) {
  SubtreeBuffer b(0, 4, BufferPolicy::Queue);
  EXPECT_THROW(b.direct_insert(probe(0, 0)), std::logic_error);
  EXPECT_THROW(SubtreeBuffer(0, 0, BufferPolicy::Queue), ConfigError);
}

// Random insert/drain traffic against a std::deque reference model.
TEST(QueueBuffer, FifoAgainstDequeModel) {
  std::mt19937 rng(7);
  for (std::size_t slots : {1u, 2u, 3u, 8u, 16u}) {
    SubtreeBuffer b(0, slots, BufferPolicy::Queue);
    std::deque<std::uint32_t> model;
    std::uint32_t next = 0;
    for (int cycle = 0; cycle < 2000; ++cycle) {
      const auto drained = b.queue_drain();
      for (const auto& d : drained) {
        ASSERT_FALSE(model.empty());
        ASSERT_EQ(d.probe.probe, model.front());
        model.pop_front();
      }
      ASSERT_LE(drained.size(), 2u);
      const int arrivals = static_cast<int>(rng() % 5);
      std::vector<RoutedProbe> routed;
      for (int i = 0; i < arrivals; ++i) {
        routed.push_back({probe(next + i, static_cast<std::uint32_t>(i)), 0});
      }
      const auto labels = queue_label(routed);
      std::uint32_t accepted = 0;
      for (std::size_t i = 0; i < routed.size(); ++i) {
        const auto r = b.queue_insert(routed[i].probe, labels[i]);
        if (!r.accepted()) break;
        model.push_back(routed[i].probe.probe);
        ++accepted;
      }
      b.queue_commit();
      next += static_cast<std::uint32_t>(arrivals);
      ASSERT_EQ(b.occupancy(), model.size());
      ASSERT_EQ(accepted, std::min<std::size_t>(arrivals, slots - (model.size() - accepted)));
    }
  }
}

}  // namespace
}  // namespace bstsim
