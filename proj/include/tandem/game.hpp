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

// Forward-looking payoffs: agent n earns sum_{k >= n} delta^{k-n} 1{x_k = theta}.
// U_n(y; u, s) is its conditional expectation when agent n observes window u
// and signal s and decides y, everyone else following the profile.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/exact_chain.hpp"
#include "tandem/signals.hpp"
#include "tandem/window_distribution.hpp"

namespace tandem {

struct PayoffQuery {
  AgentIndex agent = 1;
  Window window = 0;
  int signal = 0;
  int action = 0;
  double discount = 0.0;
  std::uint64_t horizon = 0;  // successors n+1 .. n+horizon are evaluated exactly
};

struct PayoffResult {
  double value = 0.0;       // truncated expectation; the exact U_n lies in [value, value + tail_bound]
  double tail_bound = 0.0;  // delta^{T+1} / (1 - delta)
  double posterior = 0.0;   // P(theta = 1 | v_n = u, s_n = s)
};

/// Upper bound on the discounted payoff of all successors past the horizon.
inline double truncation_tail(double discount, std::uint64_t horizon) {
  if (discount == 0.0) return 0.0;
  return std::pow(discount, static_cast<double>(horizon) + 1.0) / (1.0 - discount);
}

inline void check_discount(double discount) {
  require(discount >= 0.0 && discount < 1.0, "discount factor must lie in [0, 1)");
}

namespace detail {

/// sum_{k=n+1}^{n+T} delta^{k-n} P^theta(x_k = theta | v_{n+1} = next).
inline double continuation_value(const Profile& profile, const SignalModel& model, AgentIndex agent, Window next,
                                 Theta t, double discount, std::uint64_t horizon) {
  if (discount == 0.0 || horizon == 0) return 0.0;
  WindowDistribution dist = WindowDistribution::point(agent + 1, profile.window_length(), next);
  WindowDistribution scratch;
  auto cursor = profile.cursor(agent + 1);
  double factor = discount;
  double total = 0.0;
  for (std::uint64_t step = 1; step <= horizon; ++step) {
    const double one = decide_one_probability(dist, cursor->rule(), model, t);
    total += factor * (t == Theta::One ? one : 1.0 - one);
    factor *= discount;
    if (step == horizon) break;
    propagate_into(dist, cursor->rule(), model, scratch);
    std::swap(dist, scratch);
    cursor->advance();
  }
  return total;
}

/// Continuation values for every possible next window, per state of the world.
struct ContinuationTable {
  std::array<std::vector<double>, 2> value;
};

inline ContinuationTable continuation_table(const Profile& profile, const SignalModel& model, AgentIndex agent,
                                            double discount, std::uint64_t horizon) {
  ContinuationTable table;
  const std::size_t windows = window_count(profile.window_length());
  for (int j = 0; j < 2; ++j) {
    table.value[j].resize(windows);
    for (Window w = 0; w < windows; ++w) {
      table.value[j][w] = continuation_value(profile, model, agent, w, theta_of(j), discount, horizon);
    }
  }
  return table;
}

inline double posterior_one(double mass0, double mass1, const SignalModel& model, int s) {
  const double w1 = mass1 * model.signal_probability(Theta::One, s);
  const double w0 = mass0 * model.signal_probability(Theta::Zero, s);
  return w1 / (w0 + w1);
}

inline PayoffResult payoff_from(const ContinuationTable& table, double mass0, double mass1, const SignalModel& model,
                                const PayoffQuery& q, int K) {
  if (!((1.0 - kPriorOne) * mass0 + kPriorOne * mass1 > 0.0)) {
    throw ZeroProbabilityError("payoff: the observed window has zero probability under the profile");
  }
  PayoffResult r;
  r.posterior = posterior_one(mass0, mass1, model, q.signal);
  r.tail_bound = truncation_tail(q.discount, q.horizon);
  const Window next = shift_window(q.window, q.action, K);
  const double immediate = q.action == 1 ? r.posterior : 1.0 - r.posterior;
  r.value = immediate + r.posterior * table.value[1][next] + (1.0 - r.posterior) * table.value[0][next];
  return r;
}

inline void check_query(const PayoffQuery& q, int K) {
  require(q.agent >= 1, "payoff: agent index must be >= 1");
  require(q.window < window_count(K), "payoff: window out of range for K");
  require(q.signal == 0 || q.signal == 1, "payoff: signal must be 0 or 1");
  require(q.action == 0 || q.action == 1, "payoff: action must be 0 or 1");
  check_discount(q.discount);
}

/// Window laws of agents first..last.
inline std::vector<WindowDistribution> window_laws(const Profile& profile, const SignalModel& model,
                                                   AgentIndex first, AgentIndex last) {
  std::vector<WindowDistribution> out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  sweep(profile, model, last, [&](const WindowDistribution& dist, const RuleCursor& cur) {
    if (cur.agent() >= first) out.push_back(dist);
  });
  return out;
}

}  // namespace detail

/// U_n(y; u, s) truncated after `horizon` successors. Successors keep their
/// rules and react to x_n = y through their windows.
inline PayoffResult payoff(const Profile& profile, const SignalModel& model, const PayoffQuery& query) {
  const int K = profile.window_length();
  detail::check_query(query, K);
  const auto laws = detail::window_laws(profile, model, query.agent, query.agent);
  const auto& dist = laws.front();
  const double m0 = dist.mass[0][query.window];
  const double m1 = dist.mass[1][query.window];
  if (!(m0 > 0.0 || m1 > 0.0)) {
    throw ZeroProbabilityError("payoff: window " + window_to_string(query.window, K) + " has zero probability at agent " +
                               std::to_string(query.agent));
  }
  const auto table = detail::continuation_table(profile, model, query.agent, query.discount, query.horizon);
  return detail::payoff_from(table, m0, m1, model, query, K);
}

struct EquilibriumViolation {
  AgentIndex agent = 0;
  Window window = 0;
  int signal = 0;
  double profile_prob_one = 0.0;  // probability the profile decides 1 here
  double payoff0 = 0.0;           // truncated U_n(0; u, s)
  double payoff1 = 0.0;           // truncated U_n(1; u, s)
  double gain = 0.0;              // best truncated payoff minus the profile's
};

struct EquilibriumReport {
  std::string profile;
  AgentIndex first = 1;
  AgentIndex last = 1;
  double epsilon = 0.0;
  double discount = 0.0;
  std::uint64_t horizon = 0;
  double tail_bound = 0.0;
  std::uint64_t checked = 0;  // (agent, window, signal) triples examined
  std::vector<EquilibriumViolation> violations;
};

/// Checks unilateral deviations for agents first..last on every window with
/// positive probability and both signal values. A deviation is recorded
/// only when it beats the profile by more than epsilon + 2 * tail, so each
/// entry is a violation of the exact (untruncated) payoffs. For randomized
/// entries the profile's payoff is the mixture of U(0) and U(1).
inline EquilibriumReport check_equilibrium(const Profile& profile, const SignalModel& model, double discount,
                                           AgentIndex first, AgentIndex last, double epsilon, std::uint64_t horizon,
                                           unsigned workers = 1) {
  check_discount(discount);
  require(first >= 1 && first <= last, "check_equilibrium: bad agent range");
  require(epsilon > 0.0, "check_equilibrium: epsilon must be positive");
  const double tail = truncation_tail(discount, horizon);
  require(2.0 * tail < epsilon, "check_equilibrium: horizon too short, 2 * delta^{T+1} / (1 - delta) must be < epsilon");

  const int K = profile.window_length();
  const auto laws = detail::window_laws(profile, model, first, last);
  const std::size_t count = laws.size();
  std::vector<std::vector<EquilibriumViolation>> found(count);
  std::vector<std::uint64_t> checked(count, 0);

  auto check_agent = [&](std::size_t idx) {
    const WindowDistribution& dist = laws[idx];
    const AgentIndex n = dist.agent;
    const DecisionRule rule = profile.rule(n);
    const auto table = detail::continuation_table(profile, model, n, discount, horizon);
    for (Window u = 0; u < window_count(K); ++u) {
      const double m0 = dist.mass[0][u];
      const double m1 = dist.mass[1][u];
      if (!(m0 > 0.0 || m1 > 0.0)) continue;
      for (int s = 0; s < 2; ++s) {
        PayoffQuery q{n, u, s, 0, discount, horizon};
        const double u0 = detail::payoff_from(table, m0, m1, model, q, K).value;
        q.action = 1;
        const double u1 = detail::payoff_from(table, m0, m1, model, q, K).value;
        const double rho = rule.prob_one(u, s);
        const double chosen = rho * u1 + (1.0 - rho) * u0;
        const double gain = std::max(u0, u1) - chosen;
        ++checked[idx];
        if (gain > epsilon + 2.0 * tail) found[idx].push_back({n, u, s, rho, u0, u1, gain});
      }
    }
  };

  const unsigned pool_size = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < count; ++i) check_agent(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < pool_size; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < count; i += pool_size) check_agent(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  EquilibriumReport report;
  report.profile = profile.descriptor();
  report.first = first;
  report.last = last;
  report.epsilon = epsilon;
  report.discount = discount;
  report.horizon = horizon;
  report.tail_bound = tail;
  for (std::size_t i = 0; i < count; ++i) {
    report.checked += checked[i];
    report.violations.insert(report.violations.end(), found[i].begin(), found[i].end());
  }
  return report;
}

/// Quantities attached to the all-ones window e = (1, ..., 1) at agent n.
struct PosteriorRow {
  AgentIndex n = 0;
  double mass0 = 0.0;                        // P^0(v_n = e)
  double mass1 = 0.0;                        // P^1(v_n = e)
  std::optional<double> pi;                  // P(theta = 1 | v_n = e)
  std::array<std::optional<double>, 2> f{};  // P(theta = 1 | v_n = e, s_n = s)
  std::optional<double> f_lower_bound;       // from f/(1-f) >= (1/M) P^1(e) / P^0(e)
  double gamma = 0.0;                        // P^1(profile decides 0 at e)
};

inline std::vector<PosteriorRow> posterior_sequence(const Profile& profile, const SignalModel& model,
                                                    AgentIndex first, AgentIndex last) {
  require(first >= 1 && first <= last, "posterior_sequence: bad agent range");
  const int K = profile.window_length();
  const Window e = window_mask(K);
  const double M = blr_bounds(model).upper;
  std::vector<PosteriorRow> rows;
  sweep(profile, model, last, [&](const WindowDistribution& dist, const RuleCursor& cur) {
    if (cur.agent() < first) return;
    PosteriorRow row;
    row.n = cur.agent();
    row.mass0 = dist.mass[0][e];
    row.mass1 = dist.mass[1][e];
    row.gamma = 1.0 - conditional_decide_one(cur.rule(), model, Theta::One, e);
    if (row.mass0 > 0.0 || row.mass1 > 0.0) {
      row.pi = row.mass1 / (row.mass0 + row.mass1);
      for (int s = 0; s < 2; ++s) row.f[s] = detail::posterior_one(row.mass0, row.mass1, model, s);
      if (row.mass0 > 0.0) {
        const double odds = row.mass1 / (M * row.mass0);
        row.f_lower_bound = odds / (1.0 + odds);
      } else {
        row.f_lower_bound = 1.0;
      }
    }
    rows.push_back(row);
  });
  return rows;
}

}  // namespace tandem
