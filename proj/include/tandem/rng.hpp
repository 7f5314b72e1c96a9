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

namespace tandem::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Independent purposes a path draws randomness for. Adding a kind never
/// perturbs the draws of existing kinds.
enum class DrawKind : std::uint64_t { World = 1, Signal = 2, Randomization = 3, Payoff = 4 };

/// Counter-based stream keyed by (seed, stream id, draw kind): the value at
/// counter c is a pure function of the key and c, so draws can be taken in
/// any order and from any thread.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream, DrawKind kind)
      : key_(mix64(mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) ^ (stream * kGolden)) ^
                   (static_cast<std::uint64_t>(kind) * 0xd1b54a32d192ed03ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ + counter * kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace tandem::rng
