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
#include <cstdlib>
#include <random>
#include <string>

#include "tandem/decision_rule.hpp"
#include "tandem/profiles.hpp"
#include "tandem/signals.hpp"

namespace tandem::testing {

// Randomized suites draw this many cases per property.
inline constexpr int kPropertyCases = 1000;

// TANDEM_TEST_SEED replays a different sample; failures print the case index.
inline std::uint64_t test_seed() {
  const char* env = std::getenv("TANDEM_TEST_SEED");
  return env ? std::strtoull(env, nullptr, 10) : 20261015ULL;
}

inline std::mt19937_64 make_gen(std::uint64_t salt) { return std::mt19937_64(test_seed() ^ (salt * 0x9e3779b97f4a7c15ULL)); }

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline int uniform_int(std::mt19937_64& gen, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

// p0 < p1, both kept away from 0 and 1 so likelihood ratios stay moderate.
inline SignalModel random_model(std::mt19937_64& gen) {
  for (;;) {
    const double a = uniform(gen, 0.02, 0.98);
    const double b = uniform(gen, 0.02, 0.98);
    if (std::abs(a - b) < 1e-3) continue;
    return SignalModel(std::min(a, b), std::max(a, b));
  }
}

// Entries are 0, 1, or (when `randomized`) a uniform probability.
inline DecisionRule random_rule(std::mt19937_64& gen, int K, bool randomized) {
  DecisionRule rule(K);
  for (Window u = 0; u < rule.windows(); ++u) {
    for (int s = 0; s < 2; ++s) {
      const int pick = uniform_int(gen, 0, randomized ? 2 : 1);
      rule.set(u, s, pick == 2 ? uniform(gen, 0.0, 1.0) : static_cast<double>(pick));
    }
  }
  return rule;
}

inline Profile random_table_profile(std::mt19937_64& gen, int K, AgentIndex agents, bool randomized) {
  std::map<AgentIndex, DecisionRule> per_agent;
  for (AgentIndex n = 1; n <= agents; ++n) per_agent.emplace(n, random_rule(gen, K, randomized));
  return table_profile(random_rule(gen, K, randomized), std::move(per_agent), "random");
}

}  // namespace tandem::testing
