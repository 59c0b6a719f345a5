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

#include <stdexcept>
#include <string>

namespace bstsim {

/// Invalid user-supplied configuration (tree height, variant, buffer size, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A node address outside the structure it was issued against. Raised by
/// the memory model; inside the engine this always indicates a simulator bug.
class AddressingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The engine exceeded its cycle budget without retiring every key.
class LivelockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two run results that do not describe the same workload were compared.
class ComparisonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bstsim
