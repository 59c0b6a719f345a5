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

#include "bstsim/workload.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bstsim/errors.hpp"

namespace bstsim {

namespace {

constexpr std::array<char, 4> kMagic = {'B', 'S', 'T', 'K'};

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error("key-set file truncated");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::string_view to_string(KeySetKind kind) {
  switch (kind) {
    case KeySetKind::Equal:
      return "equal";
    case KeySetKind::Random:
      return "random";
    case KeySetKind::Split:
      return "split";
  }
  return "?";
}

KeySetKind parse_key_set_kind(std::string_view name) {
  if (name == "equal") return KeySetKind::Equal;
  if (name == "random") return KeySetKind::Random;
  if (name == "split") return KeySetKind::Split;
  throw ConfigError("unknown key set kind '" + std::string(name) +
                    "' (expected equal, random or split)");
}

__extension__ using u128 = unsigned __int128;

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  u128 m = static_cast<u128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

KeySet gen_equal(const CompleteTree& tree, std::size_t size, std::uint32_t leaf_rank) {
  KeySet set;
  set.kind = KeySetKind::Equal;
  set.keys.assign(size, tree.leaf_key(leaf_rank));
  return set;
}

KeySet gen_random(const CompleteTree& tree, std::size_t size, std::uint64_t seed,
                  bool include_misses) {
  KeySet set;
  set.kind = KeySetKind::Random;
  set.seed = seed;
  set.keys.reserve(size);
  std::mt19937_64 rng(seed);
  const std::uint64_t n = tree.node_count();
  for (std::size_t i = 0; i < size; ++i) {
    if (include_misses) {
      set.keys.push_back(static_cast<std::uint32_t>(bounded_draw(rng, 2 * n) + 1));
    } else {
      set.keys.push_back(static_cast<std::uint32_t>(2 * bounded_draw(rng, n) + 1));
    }
  }
  return set;
}

KeySet gen_split(const CompleteTree& tree, std::size_t size, std::uint32_t num_subtrees,
                 unsigned reg_levels) {
  if (reg_levels > tree.height() || reg_levels >= 32 ||
      num_subtrees != (std::uint32_t{1} << reg_levels)) {
    throw ConfigError("split set needs num_subtrees == 2^reg_levels with reg_levels <= " +
                      std::to_string(tree.height()) + ", got " +
                      std::to_string(num_subtrees) + " subtrees, " +
                      std::to_string(reg_levels) + " register levels");
  }
  KeySet set;
  set.kind = KeySetKind::Split;
  set.keys.reserve(size);
  const std::uint32_t leaves_per_subtree = tree.leaf_count() / num_subtrees;
  for (std::size_t i = 0; i < size; ++i) {
    const auto subtree = static_cast<std::uint32_t>(i % num_subtrees);
    const auto round = static_cast<std::uint32_t>((i / num_subtrees) % leaves_per_subtree);
    set.keys.push_back(tree.leaf_key(subtree * leaves_per_subtree + round));
  }
  return set;
}

std::uint32_t subtree_of_key(const CompleteTree& tree, std::uint32_t key, unsigned reg_levels) {
  std::uint32_t index = 0;
  for (unsigned level = 0; level < reg_levels; ++level) {
    const auto& kv = tree.nodes()[index];
    if (kv.key == key) return kNoSubtree;
    index = 2 * index + (key < kv.key ? 1 : 2);
  }
  return NodeAddr(index).offset();
}

void write_key_set(std::ostream& out, const KeySet& set) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kKeySetFormatVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(set.kind));
  put_le<std::uint64_t>(out, set.keys.size());
  for (std::uint32_t k : set.keys) put_le<std::uint32_t>(out, k);
  if (!out) throw std::runtime_error("failed writing key set");
}

KeySet read_key_set(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("not a key-set file (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(in);
  if (version != kKeySetFormatVersion) {
    throw std::runtime_error("unsupported key-set format version " + std::to_string(version));
  }
  const auto kind = get_le<std::uint16_t>(in);
  if (kind > static_cast<std::uint16_t>(KeySetKind::Split)) {
    throw std::runtime_error("unknown key-set kind " + std::to_string(kind));
  }
  const auto count = get_le<std::uint64_t>(in);
  KeySet set;
  set.kind = static_cast<KeySetKind>(kind);
  set.keys.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 26)));
  for (std::uint64_t i = 0; i < count; ++i) set.keys.push_back(get_le<std::uint32_t>(in));
  return set;
}

void save_key_set(const std::filesystem::path& path, const KeySet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_key_set(out, set);
}

KeySet load_key_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_key_set(in);
}

}  // namespace bstsim
