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

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "bstsim/harness.hpp"

namespace bstsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "BSTSIM_OUT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the arguments of the `run` subcommand (without the subcommand name),
/// merging an optional --config JSON file under the command-line flags.
/// Throws UsageError.
RunSpec parse_spec(const std::vector<std::string>& args);

/// Entry point of the command-line tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bstsim
