// Copyright 2026 The Tandem Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tandem {

inline constexpr const char* kVersion = "1.0.0";

/// Agent index. Agents are numbered from 1.
using AgentIndex = std::uint64_t;

/// Hidden binary state of the world. Both values have prior mass 1/2.
enum class Theta : int { Zero = 0, One = 1 };

inline constexpr double kPriorOne = 0.5;

inline constexpr int to_int(Theta t) { return static_cast<int>(t); }
inline constexpr Theta theta_of(int j) { return j == 0 ? Theta::Zero : Theta::One; }

/// A signal model violates its construction invariants (BLR, p0 != p1, ...).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A conditional quantity was requested on a zero-probability event.
class ZeroProbabilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

}  // namespace tandem
