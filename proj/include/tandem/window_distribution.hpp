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

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/signals.hpp"

namespace tandem {

/// Law of the window v_n observed by agent `agent`, under each state of the
/// world. mass[j][u] = P^j(v_n = u).
struct WindowDistribution {
  AgentIndex agent = 1;
  int K = 1;
  std::array<std::vector<double>, 2> mass;

  /// v_1: every missing predecessor counts as having decided 0.
  static WindowDistribution initial(int K) { return point(1, K, 0); }

  static WindowDistribution point(AgentIndex agent, int K, Window u) {
    check_window_length(K);
    require(u < window_count(K), "WindowDistribution::point: window out of range");
    WindowDistribution d;
    d.agent = agent;
    d.K = K;
    for (auto& v : d.mass) {
      v.assign(window_count(K), 0.0);
      v[u] = 1.0;
    }
    return d;
  }

  const std::vector<double>& operator[](Theta t) const { return mass[to_int(t)]; }
  std::vector<double>& operator[](Theta t) { return mass[to_int(t)]; }

  double total(Theta t) const {
    const auto& v = mass[to_int(t)];
    return std::accumulate(v.begin(), v.end(), 0.0);
  }

  /// Unconditional P(v_n = u) under the uniform prior.
  double probability(Window u) const { return (1.0 - kPriorOne) * mass[0][u] + kPriorOne * mass[1][u]; }

  void renormalize() {
    for (auto& v : mass) {
      const double t = std::accumulate(v.begin(), v.end(), 0.0);
      if (t > 0.0) {
        for (double& x : v) x /= t;
      }
    }
  }
};

/// P^theta(x_n = 1 | v_n = u).
inline double conditional_decide_one(const DecisionRule& rule, const SignalModel& model, Theta t, Window u) {
  return model.q(t) * rule.prob_one(u, 0) + model.p(t) * rule.prob_one(u, 1);
}

/// P^theta(x_n = decision | v_n = u).
inline double conditional_decision(const DecisionRule& rule, const SignalModel& model, Theta t, Window u,
                                   int decision) {
  const double one = conditional_decide_one(rule, model, t, u);
  return decision == 1 ? one : 1.0 - one;
}

/// P^theta(x_n = 1) for the agent observing `dist`.
inline double decide_one_probability(const WindowDistribution& dist, const DecisionRule& rule,
                                     const SignalModel& model, Theta t) {
  const auto& v = dist[t];
  double total = 0.0;
  for (Window u = 0; u < v.size(); ++u) {
    if (v[u] != 0.0) total += v[u] * conditional_decide_one(rule, model, t, u);
  }
  return total;
}

/// Applies agent dist.agent's rule; `out` receives the law of the next window.
inline void propagate_into(const WindowDistribution& dist, const DecisionRule& rule, const SignalModel& model,
                           WindowDistribution& out) {
  require(rule.window_length() == dist.K, "propagate: rule and distribution disagree on window length");
  const int K = dist.K;
  out.agent = dist.agent + 1;
  out.K = K;
  for (int j = 0; j < 2; ++j) {
    const Theta t = theta_of(j);
    const auto& in = dist.mass[j];
    auto& next = out.mass[j];
    next.assign(in.size(), 0.0);
    for (Window u = 0; u < in.size(); ++u) {
      const double w = in[u];
      if (w == 0.0) continue;
      const double one = conditional_decide_one(rule, model, t, u);
      next[shift_window(u, 1, K)] += w * one;
      next[shift_window(u, 0, K)] += w * (1.0 - one);
    }
  }
}

inline WindowDistribution propagate(const WindowDistribution& dist, const DecisionRule& rule,
                                    const SignalModel& model) {
  WindowDistribution out;
  propagate_into(dist, rule, model, out);
  return out;
}

}  // namespace tandem
