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

#include "bstsim/cli.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bstsim/errors.hpp"

namespace bstsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunOptions {
  std::optional<unsigned> height;
  std::string variants;
  std::string sets;
  std::optional<unsigned> repetitions;
  std::string format;
  std::string out;
  std::optional<unsigned> jobs;
  std::optional<unsigned> reg_levels;
  std::optional<std::size_t> buffer_slots;
  std::string config;
};

void add_run_options(CLI::App& app, RunOptions& o) {
  app.add_option("--height", o.height, "Tree height (levels below the root), default 15");
  app.add_option("--variants", o.variants,
                 "Comma-separated variants: hrz, dup<n>, hyb<T>, hyb<T>q");
  app.add_option("--sets", o.sets,
                 "Comma-separated key sets kind:size[:seed=N][:leaf=N][:t=N][:misses], "
                 "kind in equal|random|split, size like 64k");
  app.add_option("--reps", o.repetitions, "Repetitions (seeds seed..seed+reps-1) for random sets");
  app.add_option("--format", o.format, "csv (default) or jsonl");
  app.add_option("--out", o.out, "Report destination (default: stdout or $BSTSIM_OUT_DIR)");
  app.add_option("--jobs", o.jobs, "Parallel cells, 0 = hardware threads (default 1)");
  app.add_option("--reg-levels", o.reg_levels, "Register levels for hrz/dup variants");
  app.add_option("--buffer-slots", o.buffer_slots, "Hybrid buffer slots (default chunk size)");
  app.add_option("--config", o.config, "JSON file with the same fields; flags take precedence");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ReportFormat parse_format(const std::string& f) {
  if (f.empty() || f == "csv") return ReportFormat::Csv;
  if (f == "jsonl" || f == "json-lines") return ReportFormat::JsonLines;
  throw UsageError("unknown format '" + f + "' (expected csv or jsonl)");
}

std::vector<std::string> json_list(const json& j) {
  if (j.is_string()) return split_list(j.get<std::string>());
  return j.get<std::vector<std::string>>();
}

RunSpec build_run_spec(RunOptions o) {
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw UsageError("cannot read config file " + o.config);
    json j;
    try {
      j = json::parse(in);
      if (!o.height && j.contains("height")) o.height = j["height"].get<unsigned>();
      if (o.variants.empty() && j.contains("variants")) {
        const auto v = json_list(j["variants"]);
        for (const auto& s : v) o.variants += (o.variants.empty() ? "" : ",") + s;
      }
      if (o.sets.empty() && j.contains("sets")) {
        const auto v = json_list(j["sets"]);
        for (const auto& s : v) o.sets += (o.sets.empty() ? "" : ",") + s;
      }
      if (!o.repetitions && j.contains("repetitions")) {
        o.repetitions = j["repetitions"].get<unsigned>();
      }
      if (o.format.empty() && j.contains("format")) o.format = j["format"].get<std::string>();
      if (o.out.empty() && j.contains("out")) o.out = j["out"].get<std::string>();
      if (!o.jobs && j.contains("jobs")) o.jobs = j["jobs"].get<unsigned>();
      if (!o.reg_levels && j.contains("reg_levels")) o.reg_levels = j["reg_levels"].get<unsigned>();
      if (!o.buffer_slots && j.contains("buffer_slots")) {
        o.buffer_slots = j["buffer_slots"].get<std::size_t>();
      }
    } catch (const json::exception& e) {
      throw UsageError("config file " + o.config + ": " + e.what());
    }
  }

  RunSpec spec;
  spec.tree_height = o.height.value_or(15);
  spec.repetitions = o.repetitions.value_or(1);
  spec.jobs = o.jobs.value_or(1);
  spec.format = parse_format(o.format);
  try {
    if (o.variants.empty()) throw ConfigError("--variants is required");
    if (o.sets.empty()) throw ConfigError("--sets is required");
    for (const auto& name : split_list(o.variants)) {
      if (spec.tree_height > kMaxTreeHeight) break;  // reported by validate()
      auto cfg = parse_variant(name, std::min(spec.tree_height, kMaxTreeHeight));
      if (cfg.variant != Variant::Hybrid && o.reg_levels) cfg.reg_levels = *o.reg_levels;
      if (cfg.variant == Variant::Hybrid && o.buffer_slots) cfg.buffer_slots = *o.buffer_slots;
      spec.variants.push_back(cfg);
    }
    for (const auto& s : split_list(o.sets)) spec.sets.push_back(parse_set(s));
    validate(spec);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

std::optional<fs::path> resolve_out(const std::string& out, const std::string& default_name) {
  if (!out.empty()) return fs::path(out);
  if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) {
    fs::create_directories(dir);
    return fs::path(dir) / default_name;
  }
  return std::nullopt;
}

void print_table(const Report& report, std::ostream& out) {
  std::vector<std::string> kinds;
  for (const auto& r : report.rows) {
    const auto label = r.set_kind + ":" + std::to_string(r.set_size);
    if (std::find(kinds.begin(), kinds.end(), label) == kinds.end()) kinds.push_back(label);
  }
  out << "speedup vs hrz (tree height " << report.metadata.tree_height << ")\n";
  out << std::left << std::setw(10) << "variant";
  for (const auto& k : kinds) out << std::right << std::setw(16) << k;
  out << '\n';
  std::vector<std::string> variants;
  for (const auto& r : report.rows) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) {
      variants.push_back(r.variant);
    }
  }
  out << std::fixed << std::setprecision(3);
  for (const auto& v : variants) {
    out << std::left << std::setw(10) << v;
    for (const auto& k : kinds) {
      const ReportRow* row = nullptr;
      for (const auto& r : report.rows) {
        if (r.variant == v && r.set_kind + ":" + std::to_string(r.set_size) == k) row = &r;
      }
      out << std::right << std::setw(16);
      if (row) {
        out << row->speedup_vs_hrz;
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  out.unsetf(std::ios::fixed);
}

json tree_summary(const CompleteTree& tree) {
  const auto layout = layout_horizontal(tree);
  return json{{"height", tree.height()},
              {"node_count", tree.node_count()},
              {"leaf_count", tree.leaf_count()},
              {"min_key", 1},
              {"max_key", 2 * std::uint64_t{tree.node_count()} - 1},
              {"key_rule", kKeyRule},
              {"horizontal_partitions", layout.partitions().size()},
              {"bram_blocks", layout.bram_blocks()}};
}

}  // namespace

RunSpec parse_spec(const std::vector<std::string>& args) {
  CLI::App app{"bstsim run"};
  RunOptions o;
  add_run_options(app, o);
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  return build_run_spec(o);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cycle-accurate simulator of a pipelined BST lookup accelerator"};
  app.name("bstsim");
  app.require_subcommand(0, 1);

  unsigned tree_height = 15;
  std::string tree_out;
  auto* gen_tree = app.add_subcommand("gen-tree", "Build the search tree; summary or node dump");
  gen_tree->add_option("--height", tree_height, "Tree height (levels below the root)");
  gen_tree->add_option("--out", tree_out, "Write level-order nodes as CSV to this file");

  unsigned keys_height = 15;
  std::string keys_set;
  std::string keys_out;
  auto* gen_keys = app.add_subcommand("gen-keys", "Generate a key set file (BSTK format)");
  gen_keys->add_option("--height", keys_height, "Tree height");
  gen_keys->add_option("--set", keys_set, "Key set, e.g. random:64k:seed=1 or split:64k:t=8")
      ->required();
  gen_keys->add_option("--out", keys_out, "Output file (default $BSTSIM_OUT_DIR/<kind>.bstk)");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the variant x key-set matrix and write a report");
  add_run_options(*run, run_opts);

  std::string report_in;
  std::string report_format = "table";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Re-read a CSV report and print or convert it");
  report->add_option("--in", report_in, "CSV report written by `run`")->required();
  report->add_option("--format", report_format, "table (default), csv or jsonl");
  report->add_option("--out", report_out, "Destination (default stdout)");

  if (args.empty()) {
    out << app.help();
    return kExitOk;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*gen_tree) {
      const auto tree = CompleteTree::build(tree_height);
      const auto dest = resolve_out(tree_out, "tree.csv");
      if (dest) {
        std::ofstream f(*dest);
        if (!f) throw std::runtime_error("cannot open " + dest->string());
        f << "index,level,key,value\n";
        for (std::uint32_t i = 0; i < tree.node_count(); ++i) {
          const auto& kv = tree.nodes()[i];
          f << i << ',' << NodeAddr(i).level() << ',' << kv.key << ',' << kv.value << '\n';
        }
        if (!f) throw std::runtime_error("failed writing " + dest->string());
      }
      out << tree_summary(tree).dump() << '\n';
      return kExitOk;
    }
    if (*gen_keys) {
      const auto tree = CompleteTree::build(keys_height);
      const auto set = parse_set(keys_set);
      KeySet keys;
      switch (set.kind) {
        case KeySetKind::Equal:
          keys = gen_equal(tree, set.size, set.leaf_rank);
          break;
        case KeySetKind::Random:
          keys = gen_random(tree, set.size, set.seed, set.include_misses);
          break;
        case KeySetKind::Split: {
          const std::uint32_t t = set.split_subtrees ? set.split_subtrees : 8;
          keys = gen_split(tree, set.size, t,
                           static_cast<unsigned>(std::bit_width(t) - 1));
          break;
        }
      }
      const auto dest =
          resolve_out(keys_out, std::string(to_string(set.kind)) + ".bstk");
      if (!dest) throw UsageError("gen-keys needs --out or $BSTSIM_OUT_DIR");
      save_key_set(*dest, keys);
      out << json{{"file", dest->string()},
                  {"set", format_set(set)},
                  {"count", keys.size()},
                  {"prng", set.kind == KeySetKind::Random ? std::string(kPrngName) : "none"}}
                 .dump()
          << '\n';
      return kExitOk;
    }
    if (*run) {
      const RunSpec spec = build_run_spec(run_opts);
      const Report rep = execute_matrix(spec);
      const auto dest = resolve_out(
          run_opts.out, spec.format == ReportFormat::Csv ? "report.csv" : "report.jsonl");
      if (dest) {
        emit_report(rep, spec.format, *dest);
      } else {
        emit_report(rep, spec.format, out);
      }
      return kExitOk;
    }
    if (*report) {
      std::ifstream in(report_in);
      if (!in) throw std::runtime_error("cannot open " + report_in);
      const Report rep = read_csv_report(in);
      std::ofstream file;
      std::ostream* dest = &out;
      if (!report_out.empty()) {
        file.open(report_out);
        if (!file) throw std::runtime_error("cannot open " + report_out + " for writing");
        dest = &file;
      }
      if (report_format == "table") {
        print_table(rep, *dest);
      } else {
        emit_report(rep, parse_format(report_format), *dest);
      }
      return kExitOk;
    }
    out << app.help();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace bstsim
