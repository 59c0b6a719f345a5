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

#include "bstsim/engine.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "bstsim/errors.hpp"

namespace bstsim {

EngineConfig EngineConfig::hrz(unsigned tree_height) {
  EngineConfig c;
  c.variant = Variant::Horizontal;
  c.tree_height = tree_height;
  return c;
}

EngineConfig EngineConfig::dup(std::uint32_t replicas, unsigned tree_height) {
  EngineConfig c;
  c.variant = Variant::Duplicated;
  c.replicas = replicas;
  c.tree_height = tree_height;
  return c;
}

EngineConfig EngineConfig::hyb(std::uint32_t subtrees, BufferPolicy policy,
                               unsigned tree_height) {
  EngineConfig c;
  c.variant = Variant::Hybrid;
  c.subtrees = subtrees;
  c.policy = policy;
  c.tree_height = tree_height;
  c.reg_levels = subtrees == 0 ? 0 : static_cast<unsigned>(std::bit_width(subtrees) - 1);
  return c;
}

std::string EngineConfig::name() const {
  switch (variant) {
    case Variant::Horizontal:
      return "hrz";
    case Variant::Duplicated:
      return "dup" + std::to_string(replicas);
    case Variant::Hybrid:
      return "hyb" + std::to_string(subtrees) + (policy == BufferPolicy::Queue ? "q" : "");
  }
  return "?";
}

void EngineConfig::validate() const {
  if (tree_height > kMaxTreeHeight) {
    throw ConfigError("tree height " + std::to_string(tree_height) + " out of range [0, " +
                      std::to_string(kMaxTreeHeight) + "]");
  }
  switch (variant) {
    case Variant::Horizontal:
      if (replicas != 1) throw ConfigError("hrz has exactly one tree");
      break;
    case Variant::Duplicated:
      if (replicas < 2) {
        throw ConfigError("dup needs at least 2 replicas, got " + std::to_string(replicas));
      }
      break;
    case Variant::Hybrid:
      if (subtrees < 2 || !std::has_single_bit(subtrees)) {
        throw ConfigError("hyb subtree count must be a power of two >= 2, got " +
                          std::to_string(subtrees));
      }
      if (reg_levels != static_cast<unsigned>(std::bit_width(subtrees) - 1)) {
        throw ConfigError("hyb" + std::to_string(subtrees) + " needs " +
                          std::to_string(std::bit_width(subtrees) - 1) +
                          " register levels, got " + std::to_string(reg_levels));
      }
      if (buffer_slots != 0 && policy == BufferPolicy::Direct &&
          buffer_slots < derive_chunk_size(*this)) {
        throw ConfigError("direct-mapped buffers need at least chunk-size (" +
                          std::to_string(derive_chunk_size(*this)) + ") slots");
      }
      break;
  }
  if (reg_levels > tree_height) {
    throw ConfigError("register levels " + std::to_string(reg_levels) +
                      " exceed tree height " + std::to_string(tree_height));
  }
}

std::uint32_t derive_chunk_size(const EngineConfig& config) {
  switch (config.variant) {
    case Variant::Horizontal:
      return kPortsPerPartition;
    case Variant::Duplicated:
      return kPortsPerPartition * config.replicas;
    case Variant::Hybrid:
      return kPortsPerPartition * config.subtrees;
  }
  return kPortsPerPartition;
}

std::uint32_t route_subtree(std::uint32_t key, NodeAddr last_register_node,
                            const KeyValue& node) {
  if (key == node.key) {
    throw std::logic_error("route_subtree called for a key that hits node " +
                           std::to_string(last_register_node.index()));
  }
  return 2 * last_register_node.offset() + (key > node.key ? 1 : 0);
}

std::uint64_t workload_digest(unsigned tree_height, std::span<const std::uint32_t> keys) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(tree_height);
  mix(static_cast<std::uint32_t>(keys.size()));
  for (std::uint32_t k : keys) mix(k);
  return h;
}

double speedup(const RunResult& result, const RunResult& baseline) {
  if (result.workload_digest != baseline.workload_digest ||
      result.keys_processed != baseline.keys_processed) {
    throw ComparisonError("speedup of " + result.variant + " vs " + baseline.variant +
                          ": runs searched different workloads");
  }
  if (result.total_cycles == 0) throw ComparisonError("speedup of an empty run");
  return static_cast<double>(baseline.total_cycles) / static_cast<double>(result.total_cycles);
}

Engine::Engine(const EngineConfig& config, const CompleteTree& tree)
    : config_(config), tree_(&tree), chunk_size_(derive_chunk_size(config)) {
  config_.validate();
  if (config_.tree_height != tree.height()) {
    throw ConfigError("engine configured for height " + std::to_string(config_.tree_height) +
                      " but tree has height " + std::to_string(tree.height()));
  }
  bram_levels_ = tree.height() - config_.reg_levels + 1;
  switch (config_.variant) {
    case Variant::Horizontal:
    case Variant::Duplicated: {
      lanes_ = config_.replicas;
      std::uint32_t next_id = 0;
      for (std::uint32_t r = 0; r < lanes_; ++r) {
        layouts_.push_back(layout_horizontal(tree, config_.reg_levels, next_id));
        next_id += static_cast<std::uint32_t>(layouts_.back().partitions().size());
      }
      break;
    }
    case Variant::Hybrid: {
      lanes_ = config_.subtrees;
      layouts_.push_back(layout_hybrid(tree, config_.reg_levels, config_.subtrees));
      const std::size_t slots = config_.buffer_slots ? config_.buffer_slots : chunk_size_;
      for (std::uint32_t s = 0; s < lanes_; ++s) buffers_.emplace_back(s, slots, config_.policy);
      break;
    }
  }
  for (const auto& l : layouts_) partition_count_ += l.partitions().size();
}

Engine build_engine(const EngineConfig& config, const CompleteTree& tree) {
  return Engine(config, tree);
}

std::uint64_t Engine::memory_nodes() const {
  return std::uint64_t{layouts_.size()} * tree_->node_count();
}

std::uint64_t Engine::bram_blocks() const {
  std::uint64_t total = 0;
  for (const auto& l : layouts_) total += l.bram_blocks();
  return total;
}

std::size_t Engine::register_node_count() const {
  return layouts_.front().registers().nodes().size();
}

std::uint64_t Engine::cycle_budget() const {
  return std::uint64_t{probes_.size()} * (tree_->height() + 2) * 4;
}

std::size_t Engine::stage_slot(std::uint32_t lane, unsigned level) const {
  return std::size_t{lane} * bram_levels_ + (level - config_.reg_levels);
}

BramPartition& Engine::partition(std::uint32_t lane, unsigned level) {
  if (config_.variant == Variant::Hybrid) return layouts_.front().partition(lane, level);
  return layouts_[lane].partition(0, level);
}

void Engine::load(std::span<const std::uint32_t> keys) {
  keys_.assign(keys.begin(), keys.end());
  probes_.assign(keys_.size(), SearchProbe{});
  for (std::size_t i = 0; i < keys_.size(); ++i) probes_[i].key = keys_[i];
  reg_stages_.assign(config_.reg_levels, {});
  bram_now_.assign(std::size_t{lanes_} * bram_levels_, {});
  bram_next_.assign(std::size_t{lanes_} * bram_levels_, {});
  pending_.clear();
  for (auto& l : layouts_) {
    for (auto& p : l.partitions()) p.reset();
  }
  for (auto& b : buffers_) b = SubtreeBuffer(b.subtree(), b.capacity(), b.policy());
  max_occupancy_.assign(buffers_.size(), 0);
  cycle_ = next_key_ = chunks_ = admitted_ = completed_ = 0;
  stall_cycles_ = max_in_flight_ = 0;
}

bool Engine::compare(std::uint32_t id, const KeyValue& kv, CycleStats& stats,
                     RunObserver* observer) {
  SearchProbe& p = probes_[id];
  const unsigned level = p.node.level();
  const bool hit = p.key == kv.key;
  if (!hit && level < tree_->height()) return false;

  if (p.result) throw std::logic_error("probe " + std::to_string(id) + " completed twice");
  KeyResult r;
  r.lookup.found = hit;
  r.lookup.value = hit ? kv.value : 0;
  r.lookup.comparisons = level + 1;
  r.lookup.terminal_level = level;
  r.completion_cycle = cycle_;
  p.result = r;
  p.stage = StageKind::Done;
  ++completed_;
  ++stats.completed;
  if (observer) observer->on_complete(cycle_, id, r);
  return true;
}

void Engine::visit_partition(std::uint32_t id, CycleStats& stats, RunObserver* observer) {
  SearchProbe& p = probes_[id];
  const unsigned level = p.node.level();
  BramPartition& part = partition(p.lane, level);
  const auto port = part.issue_read(cycle_, p.node);
  if (!port) {
    throw std::logic_error("port conflict on partition " + std::to_string(part.id()) +
                           " in cycle " + std::to_string(cycle_));
  }
  ++stats.port_grants[part.id()];
  p.stage = StageKind::Partition;
  if (observer) {
    observer->on_port_grant(cycle_, part.id(), *port);
    observer->on_visit(cycle_, id, p.node, false);
  }
  const KeyValue& kv = tree_->node(p.node);
  if (compare(id, kv, stats, observer)) return;
  p.node = NodeAddr(2 * p.node.index() + (p.key < kv.key ? 1 : 2));
  bram_next_[stage_slot(p.lane, level + 1)].push_back(id);
}

void Engine::admit(CycleStats& stats, RunObserver* observer) {
  const auto remaining = keys_.size() - next_key_;
  const auto count = static_cast<std::uint32_t>(std::min<std::uint64_t>(chunk_size_, remaining));
  if (count == 0) return;
  const std::uint64_t chunk = chunks_++;
  for (std::uint32_t j = 0; j < count; ++j) {
    const auto id = static_cast<std::uint32_t>(next_key_++);
    SearchProbe& p = probes_[id];
    p.chunk_id = chunk;
    p.chunk_index = j;
    p.node = NodeAddr(0);
    p.lane = config_.variant == Variant::Hybrid ? 0 : j / kPortsPerPartition;
    p.stage = StageKind::Registers;
    if (observer) observer->on_admit(cycle_, id, j);
    if (config_.reg_levels == 0) {
      visit_partition(id, stats, observer);
    } else {
      reg_stages_[0].push_back(id);
    }
  }
  admitted_ += count;
  stats.admitted = count;
}

void Engine::advance_registers(CycleStats& stats, RunObserver* observer) {
  const unsigned x = config_.reg_levels;
  std::vector<RoutedProbe> routed;
  for (unsigned k = x; k-- > 0;) {
    std::vector<std::uint32_t> group;
    group.swap(reg_stages_[k]);
    for (std::uint32_t id : group) {
      SearchProbe& p = probes_[id];
      const RegisterLayer& regs = layouts_[p.lane].registers();
      const KeyValue& kv = regs.read(p.node);
      if (observer) observer->on_visit(cycle_, id, p.node, true);
      if (compare(id, kv, stats, observer)) continue;
      const NodeAddr current = p.node;
      p.node = NodeAddr(2 * current.index() + (p.key < kv.key ? 1 : 2));
      if (k + 1 < x) {
        reg_stages_[k + 1].push_back(id);
      } else if (config_.variant == Variant::Hybrid) {
        p.lane = route_subtree(p.key, current, kv);
        p.stage = StageKind::AwaitingBuffer;
        routed.push_back({{id, p.chunk_index}, p.lane});
      } else {
        p.stage = StageKind::Partition;
        bram_next_[stage_slot(p.lane, x)].push_back(id);
      }
    }
  }
  if (!routed.empty()) pending_ = insert_routed(std::move(routed), observer);
}

std::vector<RoutedProbe> Engine::insert_routed(std::vector<RoutedProbe> routed,
                                               RunObserver* observer) {
  std::vector<RoutedProbe> left;
  auto placed = [&](const RoutedProbe& r, std::size_t slot) {
    probes_[r.probe.probe].stage = StageKind::Buffered;
    if (observer) observer->on_buffer_insert(cycle_, r.buffer, slot, r.probe);
  };

  if (config_.policy == BufferPolicy::Direct) {
    for (const auto& r : routed) {
      const auto res = buffers_[r.buffer].direct_insert(r.probe);
      if (res.accepted()) {
        placed(r, res.slot);
      } else {
        left.push_back(r);
      }
    }
    return left;
  }

  const auto labels = queue_label(routed);
  std::vector<bool> blocked(buffers_.size(), false);
  for (std::size_t i = 0; i < routed.size(); ++i) {
    const auto& r = routed[i];
    if (!blocked[r.buffer]) {
      const auto res = buffers_[r.buffer].queue_insert(r.probe, labels[i]);
      if (res.accepted()) {
        placed(r, res.slot);
        continue;
      }
      blocked[r.buffer] = true;
    }
    left.push_back(r);
  }
  for (auto& b : buffers_) b.queue_commit();
  return left;
}

CycleStats Engine::step(RunObserver* observer) {
  ++cycle_;
  CycleStats stats;
  stats.cycle = cycle_;
  stats.port_grants.assign(partition_count_, 0);

  // 1. BRAM levels.
  bram_now_.swap(bram_next_);
  for (auto& stage : bram_next_) stage.clear();
  for (auto& stage : bram_now_) {
    for (std::uint32_t id : stage) visit_partition(id, stats, observer);
    stage.clear();
  }

  // 2. Buffer drain into each subtree's first BRAM level.
  for (auto& buffer : buffers_) {
    for (const auto& d : buffer.drain()) {
      if (observer) observer->on_buffer_drain(cycle_, buffer.subtree(), d);
      visit_partition(d.probe.probe, stats, observer);
    }
  }

  // 3. Retry rejected inserts; 4. admit and advance the register layer.
  if (!pending_.empty()) pending_ = insert_routed(std::move(pending_), observer);
  if (!pending_.empty()) {
    stats.stalled = true;
    ++stall_cycles_;
  } else {
    admit(stats, observer);
    advance_registers(stats, observer);
  }

  stats.in_flight = admitted_ - completed_;
  // Probes that completed this cycle still occupied a stage during it.
  max_in_flight_ = std::max(max_in_flight_, stats.in_flight + stats.completed);
  stats.buffer_occupancy.reserve(buffers_.size());
  for (std::size_t b = 0; b < buffers_.size(); ++b) {
    const auto occ = static_cast<std::uint32_t>(buffers_[b].occupancy());
    stats.buffer_occupancy.push_back(occ);
    max_occupancy_[b] = std::max(max_occupancy_[b], occ);
  }
  if (observer) observer->on_cycle(stats);
  return stats;
}

RunResult Engine::run(std::span<const std::uint32_t> keys, RunObserver* observer) {
  if (keys.empty()) throw std::invalid_argument("run needs at least one key");
  load(keys);
  const std::uint64_t budget = cycle_budget();
  while (!finished()) {
    if (cycle_ >= budget) {
      throw LivelockError(config_.name() + ": " + std::to_string(keys.size() - completed_) +
                          " keys unresolved after " + std::to_string(cycle_) + " cycles");
    }
    step(observer);
  }

  RunResult out;
  out.variant = config_.name();
  out.chunk_size = chunk_size_;
  out.total_cycles = cycle_;
  out.keys_processed = keys.size();
  out.throughput = static_cast<double>(keys.size()) / static_cast<double>(cycle_);
  out.stall_cycles = stall_cycles_;
  out.max_in_flight = max_in_flight_;
  out.results.reserve(probes_.size());
  for (const auto& p : probes_) out.results.push_back(*p.result);
  out.memory_nodes = memory_nodes();
  out.bram_blocks = bram_blocks();
  out.max_buffer_occupancy = max_occupancy_;
  out.workload_digest = workload_digest(tree_->height(), keys);
  return out;
}

}  // namespace bstsim
