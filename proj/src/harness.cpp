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

#include "bstsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bstsim/errors.hpp"

namespace bstsim {

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata_json(const ReportMetadata& m) {
  return json{{"tool", "bstsim"},           {"tool_version", m.tool_version},
              {"tree_height", m.tree_height}, {"key_rule", m.key_rule},
              {"prng", m.prng_name},          {"repetitions", m.repetitions},
              {"timestamp", m.timestamp}};
}

ReportMetadata metadata_from_json(const json& j) {
  ReportMetadata m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.tree_height = j.at("tree_height").get<unsigned>();
  m.key_rule = j.at("key_rule").get<std::string>();
  m.prng_name = j.at("prng").get<std::string>();
  m.repetitions = j.at("repetitions").get<unsigned>();
  m.timestamp = j.at("timestamp").get<std::string>();
  return m;
}

// One concrete key set a cell runs on.
struct ResolvedSet {
  std::size_t set_index;
  std::uint64_t seed;
  std::uint32_t split_subtrees;

  auto operator<=>(const ResolvedSet&) const = default;
};

struct Job {
  EngineConfig config;
  std::size_t keyset;  // index into the generated key sets
};

}  // namespace

std::size_t parse_count(std::string_view text) {
  std::uint64_t mult = 1;
  std::string_view digits = text;
  if (!text.empty()) {
    switch (text.back()) {
      case 'k':
      case 'K':
        mult = 1024;
        break;
      case 'm':
      case 'M':
        mult = 1024 * 1024;
        break;
      default:
        break;
    }
    if (mult != 1) digits.remove_suffix(1);
  }
  return static_cast<std::size_t>(parse_u64(digits, "count") * mult);
}

EngineConfig parse_variant(std::string_view name_in, unsigned tree_height) {
  const std::string name = lower(name_in);
  const std::string_view n = name;
  EngineConfig config;
  if (n == "hrz") {
    config = EngineConfig::hrz(tree_height);
  } else if (n.starts_with("dup")) {
    const auto replicas = parse_u64(n.substr(3), "replica count in '" + name + "'");
    if (replicas < 2 || replicas > 1024) {
      throw ConfigError("variant '" + name + "': dup needs 2..1024 replicas");
    }
    config = EngineConfig::dup(static_cast<std::uint32_t>(replicas), tree_height);
  } else if (n.starts_with("hyb")) {
    std::string_view digits = n.substr(3);
    BufferPolicy policy = BufferPolicy::Direct;
    if (digits.ends_with('q')) {
      policy = BufferPolicy::Queue;
      digits.remove_suffix(1);
    }
    const auto t = parse_u64(digits, "subtree count in '" + name + "'");
    if (t < 2 || t > (std::uint64_t{1} << 24) || !std::has_single_bit(t)) {
      throw ConfigError("variant '" + name + "': T must be a power of two >= 2");
    }
    config = EngineConfig::hyb(static_cast<std::uint32_t>(t), policy, tree_height);
  } else {
    throw ConfigError("unknown variant '" + name + "' (expected hrz, dup<n>, hyb<T> or hyb<T>q)");
  }
  config.validate();
  return config;
}

SetSpec parse_set(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2) {
    throw ConfigError("key set '" + std::string(text) + "' must look like kind:size[:opt=value]");
  }
  SetSpec set;
  set.kind = parse_key_set_kind(lower(parts[0]));
  set.size = parse_count(parts[1]);
  if (set.size == 0) throw ConfigError("key set '" + std::string(text) + "' is empty");
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto opt = parts[i];
    const auto eq = opt.find('=');
    const auto key = opt.substr(0, eq);
    const auto value = eq == std::string_view::npos ? std::string_view{} : opt.substr(eq + 1);
    if (key == "seed" && set.kind == KeySetKind::Random) {
      set.seed = parse_u64(value, "seed");
    } else if (key == "leaf" && set.kind == KeySetKind::Equal) {
      set.leaf_rank = static_cast<std::uint32_t>(parse_u64(value, "leaf rank"));
    } else if (key == "t" && set.kind == KeySetKind::Split) {
      const auto t = parse_u64(value, "subtree count");
      if (t == 0 || t > (std::uint64_t{1} << 24) || !std::has_single_bit(t)) {
        throw ConfigError("split subtree count must be a power of two, got " +
                          std::string(value));
      }
      set.split_subtrees = static_cast<std::uint32_t>(t);
    } else if (key == "misses" && eq == std::string_view::npos &&
               set.kind == KeySetKind::Random) {
      set.include_misses = true;
    } else {
      throw ConfigError("option '" + std::string(opt) + "' not valid for a " +
                        std::string(to_string(set.kind)) + " set");
    }
  }
  return set;
}

std::string format_set(const SetSpec& set) {
  std::string out = std::string(to_string(set.kind)) + ":" + std::to_string(set.size);
  switch (set.kind) {
    case KeySetKind::Equal:
      if (set.leaf_rank) out += ":leaf=" + std::to_string(set.leaf_rank);
      break;
    case KeySetKind::Random:
      out += ":seed=" + std::to_string(set.seed);
      if (set.include_misses) out += ":misses";
      break;
    case KeySetKind::Split:
      if (set.split_subtrees) out += ":t=" + std::to_string(set.split_subtrees);
      break;
  }
  return out;
}

void validate(RunSpec& spec) {
  if (spec.tree_height > kMaxTreeHeight) {
    throw ConfigError("tree height " + std::to_string(spec.tree_height) + " out of range [0, " +
                      std::to_string(kMaxTreeHeight) + "]");
  }
  if (spec.sets.empty()) throw ConfigError("no key sets given");
  if (spec.repetitions == 0) throw ConfigError("repetitions must be >= 1");
  for (auto& v : spec.variants) {
    v.tree_height = spec.tree_height;
    v.validate();
  }
  const bool has_hrz = std::any_of(spec.variants.begin(), spec.variants.end(), [](const auto& v) {
    return v.variant == Variant::Horizontal;
  });
  if (!has_hrz) spec.variants.insert(spec.variants.begin(), EngineConfig::hrz(spec.tree_height));
  const std::uint64_t leaves = std::uint64_t{1} << spec.tree_height;
  for (const auto& s : spec.sets) {
    if (s.size == 0) throw ConfigError("key set " + format_set(s) + " is empty");
    if (s.kind == KeySetKind::Equal && s.leaf_rank >= leaves) {
      throw ConfigError("key set " + format_set(s) + ": leaf rank beyond " +
                        std::to_string(leaves) + " leaves");
    }
    if (s.kind == KeySetKind::Split && s.split_subtrees > leaves) {
      throw ConfigError("key set " + format_set(s) + ": more subtrees than leaves");
    }
  }
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "variant",      "set_kind",      "set_size",       "total_cycles",
      "throughput",   "stall_cycles",  "speedup_vs_hrz", "memory_nodes",
      "bram_blocks",  "max_buffer_occupancy", "seed",    "prng_name"};
  return columns;
}

const ReportRow* Report::find(std::string_view variant, std::string_view set_kind) const {
  for (const auto& r : rows) {
    if (r.variant == variant && r.set_kind == set_kind) return &r;
  }
  return nullptr;
}

Report execute_matrix(const RunSpec& spec_in) {
  RunSpec spec = spec_in;
  validate(spec);
  const CompleteTree tree = CompleteTree::build(spec.tree_height);

  std::uint32_t widest_hyb = 0;
  for (const auto& v : spec.variants) {
    if (v.variant == Variant::Hybrid) widest_hyb = std::max(widest_hyb, v.subtrees);
  }
  const std::uint32_t max_subtrees = tree.leaf_count();
  const std::uint32_t default_split =
      std::min(widest_hyb ? widest_hyb : std::uint32_t{8}, max_subtrees);

  // Resolve the concrete key sets of every cell.
  std::map<ResolvedSet, std::size_t> keyset_ids;
  std::vector<ResolvedSet> resolved;
  auto resolve = [&](const ResolvedSet& r) {
    auto [it, inserted] = keyset_ids.try_emplace(r, resolved.size());
    if (inserted) resolved.push_back(r);
    return it->second;
  };
  // cell_sets[v][s] = key set ids averaged for that cell
  std::vector<std::vector<std::vector<std::size_t>>> cell_sets(spec.variants.size());
  for (std::size_t v = 0; v < spec.variants.size(); ++v) {
    const auto& cfg = spec.variants[v];
    for (std::size_t s = 0; s < spec.sets.size(); ++s) {
      const auto& set = spec.sets[s];
      std::vector<std::size_t> ids;
      if (set.kind == KeySetKind::Random) {
        for (unsigned r = 0; r < spec.repetitions; ++r) ids.push_back(resolve({s, set.seed + r, 0}));
      } else if (set.kind == KeySetKind::Split) {
        std::uint32_t t = set.split_subtrees;
        if (t == 0) t = cfg.variant == Variant::Hybrid ? cfg.subtrees : default_split;
        ids.push_back(resolve({s, 0, t}));
      } else {
        ids.push_back(resolve({s, 0, 0}));
      }
      cell_sets[v].push_back(std::move(ids));
    }
  }

  std::vector<KeySet> keysets;
  keysets.reserve(resolved.size());
  for (const auto& r : resolved) {
    const auto& set = spec.sets[r.set_index];
    switch (set.kind) {
      case KeySetKind::Equal:
        keysets.push_back(gen_equal(tree, set.size, set.leaf_rank));
        break;
      case KeySetKind::Random:
        keysets.push_back(gen_random(tree, set.size, r.seed, set.include_misses));
        break;
      case KeySetKind::Split:
        keysets.push_back(gen_split(tree, set.size, r.split_subtrees,
                                    static_cast<unsigned>(std::bit_width(r.split_subtrees) - 1)));
        break;
    }
  }

  // Every variant on each of its key sets, plus hrz on every key set.
  std::vector<Job> jobs;
  std::map<std::pair<std::string, std::size_t>, std::size_t> job_ids;
  auto add_job = [&](const EngineConfig& cfg, std::size_t keyset) {
    auto [it, inserted] = job_ids.try_emplace({cfg.name(), keyset}, jobs.size());
    if (inserted) jobs.push_back({cfg, keyset});
    return it->second;
  };
  const EngineConfig hrz = *std::find_if(spec.variants.begin(), spec.variants.end(), [](auto& v) {
    return v.variant == Variant::Horizontal;
  });
  for (std::size_t v = 0; v < spec.variants.size(); ++v) {
    for (const auto& ids : cell_sets[v]) {
      for (auto id : ids) {
        add_job(spec.variants[v], id);
        add_job(hrz, id);
      }
    }
  }

  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        Engine engine(jobs[i].config, tree);
        results[i] = engine.run(keysets[jobs[i].keyset].keys);
        results[i].results = {};  // per-key outcomes are not reported
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = spec.jobs ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i]) continue;
    const auto& r = resolved[jobs[i].keyset];
    const std::string cell =
        jobs[i].config.name() + " x " + format_set(spec.sets[r.set_index]);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const LivelockError& e) {
      throw LivelockError("cell " + cell + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("cell " + cell + ": " + e.what());
    }
  }

  Report report;
  report.metadata.tree_height = spec.tree_height;
  report.metadata.repetitions = spec.repetitions;
  report.metadata.timestamp = utc_timestamp();
  for (std::size_t v = 0; v < spec.variants.size(); ++v) {
    const auto& cfg = spec.variants[v];
    for (std::size_t s = 0; s < spec.sets.size(); ++s) {
      const auto& set = spec.sets[s];
      const auto& ids = cell_sets[v][s];
      double cycles = 0, stalls = 0, hrz_cycles = 0;
      ReportRow row;
      for (auto id : ids) {
        const auto& res = results[job_ids.at({cfg.name(), id})];
        const auto& base = results[job_ids.at({hrz.name(), id})];
        cycles += static_cast<double>(res.total_cycles);
        stalls += static_cast<double>(res.stall_cycles);
        hrz_cycles += static_cast<double>(base.total_cycles);
        row.memory_nodes = res.memory_nodes;
        row.bram_blocks = res.bram_blocks;
        for (auto occ : res.max_buffer_occupancy) {
          row.max_buffer_occupancy = std::max<std::uint64_t>(row.max_buffer_occupancy, occ);
        }
      }
      const double n = static_cast<double>(ids.size());
      row.variant = cfg.name();
      row.set_kind = std::string(to_string(set.kind));
      row.set_size = set.size;
      row.total_cycles = cycles / n;
      row.stall_cycles = stalls / n;
      row.throughput = static_cast<double>(set.size) / row.total_cycles;
      row.speedup_vs_hrz = hrz_cycles / cycles;
      row.seed = set.kind == KeySetKind::Random ? set.seed : 0;
      row.prng_name = set.kind == KeySetKind::Random ? std::string(kPrngName) : "none";
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string format_number(double v) {
  char buf[128];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

void emit_report(const Report& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::JsonLines) {
    out << json{{"metadata", metadata_json(report.metadata)}}.dump() << '\n';
    for (const auto& r : report.rows) {
      json j = {{"variant", r.variant},
                {"set_kind", r.set_kind},
                {"set_size", r.set_size},
                {"total_cycles", r.total_cycles},
                {"throughput", r.throughput},
                {"stall_cycles", r.stall_cycles},
                {"speedup_vs_hrz", r.speedup_vs_hrz},
                {"memory_nodes", r.memory_nodes},
                {"bram_blocks", r.bram_blocks},
                {"max_buffer_occupancy", r.max_buffer_occupancy},
                {"seed", r.seed},
                {"prng_name", r.prng_name}};
      out << j.dump() << '\n';
    }
  } else {
    out << "# " << metadata_json(report.metadata).dump() << '\n';
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : report.rows) {
      out << r.variant << ',' << r.set_kind << ',' << r.set_size << ','
          << format_number(r.total_cycles) << ',' << format_number(r.throughput) << ','
          << format_number(r.stall_cycles) << ',' << format_number(r.speedup_vs_hrz) << ','
          << r.memory_nodes << ',' << r.bram_blocks << ',' << r.max_buffer_occupancy << ','
          << r.seed << ',' << r.prng_name << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing report");
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  emit_report(report, format, out);
}

Report read_csv_report(std::istream& in) {
  Report report;
  std::string line;
  bool header_seen = false;
  auto to_double = [](std::string_view s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::runtime_error("bad number '" + std::string(s) + "' in report");
    }
    return v;
  };
  auto to_u64 = [](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::runtime_error("bad integer '" + std::string(s) + "' in report");
    }
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("# ")) {
      try {
        report.metadata = metadata_from_json(json::parse(line.substr(2)));
      } catch (const json::exception& e) {
        throw std::runtime_error(std::string("bad report metadata: ") + e.what());
      }
      continue;
    }
    const auto fields = split(line, ',');
    if (!header_seen) {
      const auto& cols = report_columns();
      if (fields.size() != cols.size() || !std::equal(cols.begin(), cols.end(), fields.begin())) {
        throw std::runtime_error("report header does not match: " + line);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != report_columns().size()) {
      throw std::runtime_error("report row has " + std::to_string(fields.size()) +
                               " fields: " + line);
    }
    ReportRow r;
    r.variant = fields[0];
    r.set_kind = fields[1];
    r.set_size = to_u64(fields[2]);
    r.total_cycles = to_double(fields[3]);
    r.throughput = to_double(fields[4]);
    r.stall_cycles = to_double(fields[5]);
    r.speedup_vs_hrz = to_double(fields[6]);
    r.memory_nodes = to_u64(fields[7]);
    r.bram_blocks = to_u64(fields[8]);
    r.max_buffer_occupancy = to_u64(fields[9]);
    r.seed = to_u64(fields[10]);
    r.prng_name = fields[11];
    report.rows.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("report has no header row");
  return report;
}

}  // namespace bstsim
