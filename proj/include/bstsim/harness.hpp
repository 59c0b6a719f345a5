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
 * @file harness.hpp
 * @brief Benchmark matrix: run every variant on every key set and report
 *        cycle counts and speedups relative to the horizontal baseline.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bstsim/engine.hpp"
#include "bstsim/workload.hpp"

namespace bstsim {

inline constexpr std::string_view kToolVersion = BSTSIM_VERSION;
inline constexpr std::string_view kKeyRule = "odd-key: in-order position p holds key 2p+1, value p";

struct SetSpec {
  KeySetKind kind = KeySetKind::Equal;
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::uint32_t leaf_rank = 0;
  // Split only. 0 matches each hybrid variant's subtree count; hrz/dup rows
  // then use the largest hybrid count in the run (8 when there is none).
  std::uint32_t split_subtrees = 0;
  bool include_misses = false;

  friend bool operator==(const SetSpec&, const SetSpec&) = default;
};

enum class ReportFormat { Csv, JsonLines };

struct RunSpec {
  unsigned tree_height = 15;
  std::vector<EngineConfig> variants;
  std::vector<SetSpec> sets;
  unsigned repetitions = 1;
  ReportFormat format = ReportFormat::Csv;
  unsigned jobs = 1;  // 0 = one per hardware thread
};

/// "64k" -> 65536, "256K" -> 262144, "1m" -> 1048576, "1000" -> 1000.
std::size_t parse_count(std::string_view text);

/// "hrz", "dup<n>", "hyb<T>", "hyb<T>q". Throws ConfigError with a hint.
EngineConfig parse_variant(std::string_view name, unsigned tree_height);

/// "kind:size[:seed=N][:leaf=N][:t=N][:misses]".
SetSpec parse_set(std::string_view text);
std::string format_set(const SetSpec& set);

/// Checks a RunSpec against its tree height; adds hrz when missing.
/// Throws ConfigError.
void validate(RunSpec& spec);

struct ReportRow {
  std::string variant;
  std::string set_kind;
  std::uint64_t set_size = 0;
  double total_cycles = 0;
  double throughput = 0;
  double stall_cycles = 0;
  double speedup_vs_hrz = 0;
  std::uint64_t memory_nodes = 0;
  std::uint64_t bram_blocks = 0;
  std::uint64_t max_buffer_occupancy = 0;
  std::uint64_t seed = 0;
  std::string prng_name;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportMetadata {
  std::string tool_version{kToolVersion};
  unsigned tree_height = 0;
  std::string key_rule{kKeyRule};
  std::string prng_name{kPrngName};
  unsigned repetitions = 1;
  std::string timestamp;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct Report {
  ReportMetadata metadata;
  std::vector<ReportRow> rows;

  const ReportRow* find(std::string_view variant, std::string_view set_kind) const;
};

/// Column names, in order.
const std::vector<std::string>& report_columns();

/// Runs the variant x set matrix. Rows are variant-major, set-minor.
/// Engine errors are rethrown with the failing cell named.
Report execute_matrix(const RunSpec& spec);

/// Writes the metadata prologue then the rows.
/// CSV: "# {json metadata}" line, header, one line per row.
/// JSON-lines: {"metadata": {...}} line, then one object per row.
void emit_report(const Report& report, ReportFormat format, std::ostream& out);
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

/// Parses CSV as written by emit_report. Throws std::runtime_error.
Report read_csv_report(std::istream& in);

/// Fixed-notation shortest round-trip decimal.
std::string format_number(double v);

}  // namespace bstsim
