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
 * @file engine.hpp
 * @brief Cycle-accurate model of the pipelined BST lookup accelerator.
 *
 * Variants:
 *   - Horizontal (Hrz): one partition per level, two keys admitted per cycle.
 *   - Duplicated (Dup-n): n independent horizontal replicas, 2n keys per cycle;
 *     chunk position i is served by replica i / 2.
 *   - Hybrid (Hyb-T): the top x = log2(T) levels live in registers, the rest is
 *     split into T subtrees with private partition chains, each fronted by a
 *     SubtreeBuffer (direct or queue mapping). 2T keys per cycle.
 *
 * Timing. Every in-flight probe visits one tree level per cycle. Keys admitted
 * in cycle c read level 0 in cycle c, so an unobstructed probe that ends at
 * level L completes in cycle c + L. A probe whose key matches an internal node
 * completes in that cycle and its downstream slot simply stays idle.
 *
 * Work inside one cycle is ordered as:
 *   1. BRAM-level probes read their node and complete or descend.
 *   2. Hybrid buffers drain up to two probes each into their subtree's first
 *      BRAM level, which they read in this cycle.
 *   3. Probes left over from a rejected buffer insert are retried (chunk order).
 *      If any remain, the cycle is a stall: the register pipeline holds and
 *      nothing is admitted.
 *   4. Otherwise a new chunk is admitted and the register pipeline advances;
 *      probes leaving the last register level are routed to a buffer. Rejected
 *      ones stay pending and stall the following cycles.
 *
 * A buffer slot freed in step 2 is therefore reusable by steps 3-4 of the same
 * cycle, while a probe inserted in step 4 is drained no earlier than the next
 * cycle.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bstsim/buffers.hpp"
#include "bstsim/memory.hpp"
#include "bstsim/tree.hpp"

namespace bstsim {

enum class Variant { Horizontal, Duplicated, Hybrid };

struct EngineConfig {
  Variant variant = Variant::Horizontal;
  std::uint32_t replicas = 1;
  std::uint32_t subtrees = 1;
  BufferPolicy policy = BufferPolicy::Direct;
  unsigned tree_height = 0;
  // Hybrid: always log2(subtrees). Hrz/Dup: optional, does not change timing.
  unsigned reg_levels = 0;
  // 0 selects the chunk size.
  std::size_t buffer_slots = 0;

  static EngineConfig hrz(unsigned tree_height);
  static EngineConfig dup(std::uint32_t replicas, unsigned tree_height);
  static EngineConfig hyb(std::uint32_t subtrees, BufferPolicy policy, unsigned tree_height);

  /// Short name: "hrz", "dup4", "hyb8", "hyb8q".
  std::string name() const;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Keys fetched per cycle: Hrz 2, Dup(n) 2n, Hyb(T) 2T.
std::uint32_t derive_chunk_size(const EngineConfig& config);

enum class StageKind : std::uint8_t {
  Queued,          // not yet admitted
  Registers,       // inside the register layer
  AwaitingBuffer,  // left the register layer, buffer insert rejected
  Buffered,        // sitting in a subtree buffer
  Partition,       // inside the BRAM layer
  Done,
};

struct KeyResult {
  LookupResult lookup;
  std::uint64_t completion_cycle = 0;
};

struct SearchProbe {
  std::uint32_t key = 0;
  std::uint64_t chunk_id = 0;
  std::uint32_t chunk_index = 0;
  // Replica for Hrz/Dup, subtree for Hybrid (valid once routed).
  std::uint32_t lane = 0;
  // Next node to read, or the last node read once Done.
  NodeAddr node;
  StageKind stage = StageKind::Queued;
  std::optional<KeyResult> result;
};

struct CycleStats {
  std::uint64_t cycle = 0;
  std::uint32_t admitted = 0;
  std::uint32_t completed = 0;
  std::uint64_t in_flight = 0;  // after this cycle
  bool stalled = false;
  std::vector<std::uint8_t> port_grants;        // indexed by partition id
  std::vector<std::uint32_t> buffer_occupancy;  // after this cycle
};

/// Event hooks for auditing a run. All default to no-ops.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_admit(std::uint64_t /*cycle*/, std::uint32_t /*probe*/,
                        std::uint32_t /*chunk_index*/) {}
  virtual void on_visit(std::uint64_t /*cycle*/, std::uint32_t /*probe*/, NodeAddr /*node*/,
                        bool /*in_registers*/) {}
  virtual void on_port_grant(std::uint64_t /*cycle*/, std::uint32_t /*partition*/,
                             Port /*port*/) {}
  virtual void on_buffer_insert(std::uint64_t /*cycle*/, std::uint32_t /*buffer*/,
                                std::size_t /*slot*/, const BufferedProbe& /*probe*/) {}
  virtual void on_buffer_drain(std::uint64_t /*cycle*/, std::uint32_t /*buffer*/,
                               const DrainedProbe& /*drained*/) {}
  virtual void on_complete(std::uint64_t /*cycle*/, std::uint32_t /*probe*/,
                           const KeyResult& /*result*/) {}
  virtual void on_cycle(const CycleStats& /*stats*/) {}
};

struct RunResult {
  std::string variant;
  std::uint32_t chunk_size = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t keys_processed = 0;
  double throughput = 0.0;
  std::uint64_t stall_cycles = 0;
  // Most probes holding a pipeline stage or buffer slot within one cycle.
  std::uint64_t max_in_flight = 0;
  std::vector<KeyResult> results;  // one per input key, input order
  std::uint64_t memory_nodes = 0;
  std::uint64_t bram_blocks = 0;
  std::vector<std::uint32_t> max_buffer_occupancy;
  std::uint64_t workload_digest = 0;  // tree height + key sequence
};

/// Subtree entered after the last register node: with that node at offset o,
/// 2o for a smaller key and 2o + 1 for a larger one. Throws std::logic_error
/// on equality, which must have completed as a hit.
std::uint32_t route_subtree(std::uint32_t key, NodeAddr last_register_node,
                            const KeyValue& node);

/// baseline.total_cycles / result.total_cycles. Throws ComparisonError when
/// the two runs did not search the same keys in the same tree.
double speedup(const RunResult& result, const RunResult& baseline);

/// Fingerprint of (tree height, key sequence).
std::uint64_t workload_digest(unsigned tree_height, std::span<const std::uint32_t> keys);

class Engine {
 public:
  /// Throws ConfigError when the config is invalid or its tree height does
  /// not match `tree`. The tree must outlive the engine.
  Engine(const EngineConfig& config, const CompleteTree& tree);

  const EngineConfig& config() const { return config_; }
  const CompleteTree& tree() const { return *tree_; }
  std::uint32_t chunk_size() const { return chunk_size_; }
  std::uint64_t memory_nodes() const;
  std::uint64_t bram_blocks() const;
  std::size_t partition_count() const { return partition_count_; }
  std::size_t register_node_count() const;
  std::span<const PartitionLayout> layouts() const { return layouts_; }
  std::span<const SubtreeBuffer> buffers() const { return buffers_; }

  /// Resets all pipeline state and queues `keys` for admission.
  void load(std::span<const std::uint32_t> keys);

  /// Simulates one cycle.
  CycleStats step(RunObserver* observer = nullptr);

  bool finished() const { return completed_ == probes_.size(); }
  bool stalled() const { return !pending_.empty(); }
  std::uint64_t cycle() const { return cycle_; }
  std::uint64_t stall_cycles() const { return stall_cycles_; }
  std::uint64_t in_flight() const { return admitted_ - completed_; }
  std::uint64_t cycle_budget() const;
  const SearchProbe& probe(std::uint32_t id) const { return probes_.at(id); }

  /// load + step until every key has a result. Throws LivelockError when the
  /// cycle budget (keys * (height + 2) * 4) runs out; std::invalid_argument
  /// for an empty key list.
  RunResult run(std::span<const std::uint32_t> keys, RunObserver* observer = nullptr);

 private:
  BramPartition& partition(std::uint32_t lane, unsigned level);
  std::size_t stage_slot(std::uint32_t lane, unsigned level) const;

  void admit(CycleStats& stats, RunObserver* observer);
  void advance_registers(CycleStats& stats, RunObserver* observer);
  void visit_partition(std::uint32_t id, CycleStats& stats, RunObserver* observer);
  // True when the probe completed at `kv`.
  bool compare(std::uint32_t id, const KeyValue& kv, CycleStats& stats, RunObserver* observer);
  // Returns the probes that could not be placed, in chunk order.
  std::vector<RoutedProbe> insert_routed(std::vector<RoutedProbe> routed, RunObserver* observer);

  EngineConfig config_;
  const CompleteTree* tree_;
  std::uint32_t chunk_size_;
  std::uint32_t lanes_;
  unsigned bram_levels_;
  std::size_t partition_count_ = 0;
  std::vector<PartitionLayout> layouts_;
  std::vector<SubtreeBuffer> buffers_;

  std::vector<std::uint32_t> keys_;
  std::vector<SearchProbe> probes_;
  std::vector<std::vector<std::uint32_t>> reg_stages_;
  std::vector<std::vector<std::uint32_t>> bram_now_;
  std::vector<std::vector<std::uint32_t>> bram_next_;
  std::vector<RoutedProbe> pending_;
  std::vector<std::uint32_t> max_occupancy_;
  std::uint64_t cycle_ = 0;
  std::uint64_t next_key_ = 0;
  std::uint64_t chunks_ = 0;
  std::uint64_t admitted_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t stall_cycles_ = 0;
  std::uint64_t max_in_flight_ = 0;
};

/// Same as constructing an Engine.
Engine build_engine(const EngineConfig& config, const CompleteTree& tree);

}  // namespace bstsim
