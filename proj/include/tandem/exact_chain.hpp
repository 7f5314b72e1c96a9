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

// Exact forward evaluation of the window-state chain, plus the closed-form
// block-start chain of the designed profile and its series diagnostics.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/profiles.hpp"
#include "tandem/schedule.hpp"
#include "tandem/signals.hpp"
#include "tandem/window_distribution.hpp"

namespace tandem {

/// Maximum tolerated |sum - 1| of a window law before a sweep aborts.
inline constexpr double kDriftLimit = 1e-9;
inline constexpr AgentIndex kRenormalizeEvery = 1024;

/// Runs the window chain for agents 1..last. `visit(dist, cursor)` sees the
/// law of v_n and agent n's rule before agent n decides.
template <class Visitor>
void sweep(const Profile& profile, const SignalModel& model, AgentIndex last, Visitor&& visit) {
  const int K = profile.window_length();
  WindowDistribution dist = WindowDistribution::initial(K);
  WindowDistribution next;
  auto cursor = profile.cursor(1);
  for (AgentIndex n = 1; n <= last; ++n) {
    visit(static_cast<const WindowDistribution&>(dist), static_cast<const RuleCursor&>(*cursor));
    if (n == last) break;
    propagate_into(dist, cursor->rule(), model, next);
    std::swap(dist, next);
    cursor->advance();
    if (dist.agent % kRenormalizeEvery == 0) {
      for (int j = 0; j < 2; ++j) {
        const double t = dist.total(theta_of(j));
        if (std::abs(t - 1.0) > kDriftLimit) {
          throw std::runtime_error("window law drifted from unit mass at agent " + std::to_string(dist.agent));
        }
      }
      dist.renormalize();
    }
  }
}

struct TrajectoryPoint {
  AgentIndex n = 0;
  double p0_correct = 0.0;  // P^0(x_n = 0)
  double p1_correct = 0.0;  // P^1(x_n = 1)
  double p_correct = 0.0;   // P(x_n = theta)
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;

  const TrajectoryPoint* find(AgentIndex n) const {
    auto it = std::lower_bound(points.begin(), points.end(), n,
                               [](const TrajectoryPoint& p, AgentIndex v) { return p.n < v; });
    return (it != points.end() && it->n == n) ? &*it : nullptr;
  }
};

inline TrajectoryPoint make_point(AgentIndex n, double p0_correct, double p1_correct) {
  return {n, p0_correct, p1_correct, (1.0 - kPriorOne) * p0_correct + kPriorOne * p1_correct};
}

struct TrajectoryOptions {
  /// Also record every agent that starts a segment (first agent of S_m).
  bool record_segment_starts = false;
};

/// Exact P(x_n = theta) at the requested checkpoints (all within [1, last]).
inline Trajectory error_trajectory(const Profile& profile, const SignalModel& model, AgentIndex last,
                                   std::vector<AgentIndex> checkpoints, TrajectoryOptions options = {}) {
  require(last >= 1, "error_trajectory: N must be >= 1");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (AgentIndex c : checkpoints) require(c >= 1 && c <= last, "error_trajectory: checkpoint outside [1, N]");

  Trajectory out;
  std::size_t next = 0;
  sweep(profile, model, last, [&](const WindowDistribution& dist, const RuleCursor& cur) {
    const AgentIndex n = cur.agent();
    bool record = next < checkpoints.size() && checkpoints[next] == n;
    if (record) ++next;
    if (!record && options.record_segment_starts) {
      const auto role = cur.role();
      record = role && role->kind == RoleKind::SFirst;
    }
    if (!record) return;
    const double one0 = decide_one_probability(dist, cur.rule(), model, Theta::Zero);
    const double one1 = decide_one_probability(dist, cur.rule(), model, Theta::One);
    out.points.push_back(make_point(n, 1.0 - one0, one1));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Block-start chain of the designed profile
// ---------------------------------------------------------------------------

/// Segment index associated with block-start step i: S_{(i+1)/2} for odd i,
/// R_{i/2} for even i.
inline std::uint64_t block_segment(std::uint64_t i) { return (i % 2 == 1) ? (i + 1) / 2 : i / 2; }

/// Transition probabilities of the block-start chain between w_i and w_{i+1}.
struct BlockTransition {
  double up = 0.0;    // P(w_{i+1} = 1 | w_i = 0)
  double down = 0.0;  // P(w_{i+1} = 0 | w_i = 1)
};

/// Closed form: odd steps cross an S-block and can only move 0 -> 1, with
/// probability p^{k_m} / m; even steps cross an R-block and can only move
/// 1 -> 0, with probability q^{r_m} / m. p and q are the signal laws under t.
inline BlockTransition block_start_transition(std::uint64_t i, const SignalModel& model, Theta t) {
  require(i >= 1, "block_start_transition: step must be >= 1");
  const std::uint64_t m = block_segment(i);
  const BlockSizes sizes = block_sizes(m, model);
  const double inv_m = 1.0 / static_cast<double>(m);
  if (i % 2 == 1) return {std::pow(model.p(t), static_cast<double>(sizes.k)) * inv_m, 0.0};
  return {0.0, std::pow(model.q(t), static_cast<double>(sizes.r)) * inv_m};
}

struct BlockStartChain {
  Theta theta = Theta::One;
  std::vector<double> pi;                    // pi[i - 1] = P^theta(w_i = 1)
  std::vector<BlockTransition> transitions;  // transitions[i - 1]: w_i -> w_{i+1}

  double at(std::uint64_t i) const { return pi.at(i - 1); }
};

/// pi_1 .. pi_{2M+1}: the block-start chain through the first M segments.
inline BlockStartChain block_start_trajectory(const SignalModel& model, Theta t, std::uint64_t segments) {
  require(segments >= 1, "block_start_trajectory: need at least one segment");
  BlockStartChain chain;
  chain.theta = t;
  chain.pi.reserve(2 * segments + 1);
  chain.transitions.reserve(2 * segments);
  double pi = 0.0;  // w_1 is agent 2's decision, always 0
  chain.pi.push_back(pi);
  for (std::uint64_t i = 1; i <= 2 * segments; ++i) {
    const BlockTransition tr = block_start_transition(i, model, t);
    chain.transitions.push_back(tr);
    pi = pi + (1.0 - pi) * tr.up - pi * tr.down;
    chain.pi.push_back(pi);
  }
  return chain;
}

/// Window masses observed by a block-first agent of the designed profile.
struct BlockStartObservation {
  std::uint64_t step = 0;  // block-start index i (odd: S-block, even: R-block)
  AgentIndex agent = 0;
  std::array<double, 2> ones{};   // P^j(v_n = (1,1))
  std::array<double, 2> mixed{};  // P^j(v_n in {(0,1), (1,0)})
};

/// Runs the full K = 2 window chain of `profile` (which must expose
/// designed-schedule roles) through `segments` segments and extracts the
/// block-start masses.
inline std::vector<BlockStartObservation> block_start_masses(const Profile& profile, const SignalModel& model,
                                                             std::uint64_t segments) {
  require(profile.window_length() == 2, "block_start_masses: K = 2 profile required");
  const Schedule schedule(model);
  const AgentIndex last = schedule.segment(segments).end() - 1;
  std::vector<BlockStartObservation> out;
  out.reserve(2 * segments);
  sweep(profile, model, last, [&](const WindowDistribution& dist, const RuleCursor& cur) {
    const auto role = cur.role();
    require(role.has_value(), "block_start_masses: profile does not expose agent roles");
    if (role->kind != RoleKind::SFirst && role->kind != RoleKind::RFirst) return;
    BlockStartObservation obs;
    obs.step = 2 * role->segment - (role->kind == RoleKind::SFirst ? 1 : 0);
    obs.agent = cur.agent();
    for (int j = 0; j < 2; ++j) {
      obs.ones[j] = dist.mass[j][designed::k11];
      obs.mixed[j] = dist.mass[j][designed::k01] + dist.mass[j][designed::k10];
    }
    out.push_back(obs);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Series diagnostics
// ---------------------------------------------------------------------------

struct SeriesDiagnostics {
  std::uint64_t M = 0;
  double sum_p1_k = 0.0;  // sum p1^{k_m} / m   (diverges)
  double sum_q1_r = 0.0;  // sum q1^{r_m} / m   (converges)
  double sum_p0_k = 0.0;  // sum p0^{k_m} / m   (converges)
  double sum_q0_r = 0.0;  // sum q0^{r_m} / m   (diverges)
  double alpha_p1 = 0.0;  // log_{p_bar}(p1)
  double alpha_p0 = 0.0;  // log_{p_bar}(p0)
  double beta_q1 = 0.0;   // log_{q_bar}(q1)
  double beta_q0 = 0.0;   // log_{q_bar}(q0)
};

inline void set_series_exponents(const SignalModel& model, SeriesDiagnostics& d) {
  const double lp = std::log(model.p_bar());
  const double lq = std::log(model.q_bar());
  d.alpha_p1 = std::log(model.p1()) / lp;
  d.alpha_p0 = std::log(model.p0()) / lp;
  d.beta_q1 = std::log(model.q1()) / lq;
  d.beta_q0 = std::log(model.q0()) / lq;
}

/// Partial sums at every requested M (sorted ascending, each >= 1).
inline std::vector<SeriesDiagnostics> series_partial_sums(const SignalModel& model,
                                                          std::vector<std::uint64_t> checkpoints) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  std::vector<SeriesDiagnostics> out;
  if (checkpoints.empty()) return out;
  require(checkpoints.front() >= 1, "series_partial_sums: M must be >= 1");
  SeriesDiagnostics acc;
  set_series_exponents(model, acc);
  std::size_t next = 0;
  for (std::uint64_t m = 1; m <= checkpoints.back(); ++m) {
    const BlockSizes s = block_sizes(m, model);
    const double inv = 1.0 / static_cast<double>(m);
    const double k = static_cast<double>(s.k);
    const double r = static_cast<double>(s.r);
    acc.sum_p1_k += std::pow(model.p1(), k) * inv;
    acc.sum_q1_r += std::pow(model.q1(), r) * inv;
    acc.sum_p0_k += std::pow(model.p0(), k) * inv;
    acc.sum_q0_r += std::pow(model.q0(), r) * inv;
    if (m == checkpoints[next]) {
      acc.M = m;
      out.push_back(acc);
      ++next;
    }
  }
  return out;
}

inline SeriesDiagnostics series_diagnostics(const SignalModel& model, std::uint64_t M) {
  require(M >= 2, "series_diagnostics: M must be >= 2");
  return series_partial_sums(model, {M}).front();
}

// ---------------------------------------------------------------------------
// K = 1 transition diagnostics
// ---------------------------------------------------------------------------

/// a[i][j] = P^0(x_n = j | x_{n-1} = i), abar[i][j] = P^1(...). Empty when
/// the predecessor state has zero probability.
struct K1Row {
  AgentIndex n = 0;
  std::array<std::array<std::optional<double>, 2>, 2> a{};
  std::array<std::array<std::optional<double>, 2>, 2> abar{};
  std::array<double, 2> state_mass0{};  // P^0(x_{n-1} = i)
  std::array<double, 2> state_mass1{};  // P^1(x_{n-1} = i)
  double sum_a01 = 0.0;
  double sum_a10 = 0.0;
  double sum_abar01 = 0.0;
  double sum_abar10 = 0.0;
  bool coupling_ok = true;
};

struct K1Diagnostics {
  std::vector<K1Row> rows;
  std::vector<AgentIndex> coupling_failures;
  BlrBounds bounds;
  /// (1/2) min{(1/6)(1 - e^{-1/(2M)}), (1/4)(1 - e^{-m/2})}: a reference
  /// constant only, not a bound asserted for arbitrary profiles.
  double error_floor_reference = 0.0;
};

inline double k1_error_floor_reference(const SignalModel& model) {
  const BlrBounds b = blr_bounds(model);
  return 0.5 * std::min((1.0 / 6.0) * (1.0 - std::exp(-1.0 / (2.0 * b.upper))),
                        0.25 * (1.0 - std::exp(-b.lower / 2.0)));
}

inline constexpr double kCouplingSlack = 1e-12;

inline K1Diagnostics k1_diagnostics(const Profile& profile, const SignalModel& model, AgentIndex last) {
  require(profile.window_length() == 1, "k1_diagnostics: K = 1 profile required");
  require(last >= 1, "k1_diagnostics: N must be >= 1");
  K1Diagnostics out;
  out.bounds = blr_bounds(model);
  out.error_floor_reference = k1_error_floor_reference(model);
  out.rows.reserve(static_cast<std::size_t>(last));
  double s_a01 = 0.0, s_a10 = 0.0, s_b01 = 0.0, s_b10 = 0.0;
  sweep(profile, model, last, [&](const WindowDistribution& dist, const RuleCursor& cur) {
    K1Row row;
    row.n = cur.agent();
    for (Window i = 0; i < 2; ++i) {
      row.state_mass0[i] = dist.mass[0][i];
      row.state_mass1[i] = dist.mass[1][i];
      for (int j = 0; j < 2; ++j) {
        if (dist.mass[0][i] > 0.0) row.a[i][j] = conditional_decision(cur.rule(), model, Theta::Zero, i, j);
        if (dist.mass[1][i] > 0.0) row.abar[i][j] = conditional_decision(cur.rule(), model, Theta::One, i, j);
        if (row.a[i][j] && row.abar[i][j]) {
          const double a = *row.a[i][j];
          const double b = *row.abar[i][j];
          if (a < out.bounds.lower * b - kCouplingSlack || a > out.bounds.upper * b + kCouplingSlack) {
            row.coupling_ok = false;
          }
        }
      }
    }
    if (row.a[0][1]) s_a01 += *row.a[0][1];
    if (row.a[1][0]) s_a10 += *row.a[1][0];
    if (row.abar[0][1]) s_b01 += *row.abar[0][1];
    if (row.abar[1][0]) s_b10 += *row.abar[1][0];
    row.sum_a01 = s_a01;
    row.sum_a10 = s_a10;
    row.sum_abar01 = s_b01;
    row.sum_abar10 = s_b10;
    if (!row.coupling_ok) out.coupling_failures.push_back(row.n);
    out.rows.push_back(row);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

inline constexpr AgentIndex kBruteForceLimit = 20;

namespace detail {

struct Enumerator {
  const std::vector<DecisionRule>& rules;
  const SignalModel& model;
  Theta theta;
  int K;
  std::vector<int> history;  // history[i] = x_{i+1}
  std::vector<double> correct;

  Window window_for(std::size_t n) const {
    Window u = 0;
    for (std::size_t back = static_cast<std::size_t>(K); back >= 1; --back) {
      const bool exists = n > back;
      const int bit = exists ? history[n - back - 1] : 0;
      u = (u << 1) | static_cast<Window>(bit);
    }
    return u;
  }

  void visit(std::size_t n, double weight) {
    if (n > rules.size()) return;
    const Window u = window_for(n);
    const DecisionRule& rule = rules[n - 1];
    for (int s = 0; s < 2; ++s) {
      const double ws = weight * model.signal_probability(theta, s);
      for (int x = 0; x < 2; ++x) {
        const double w = ws * rule.prob(u, s, x);
        if (w == 0.0) continue;
        if (x == to_int(theta)) correct[n - 1] += w;
        history.push_back(x);
        visit(n + 1, w);
        history.pop_back();
      }
    }
  }
};

}  // namespace detail

/// P(x_n = theta) for n = 1..N by enumerating every signal sequence and
/// every randomization outcome along each decision path.
inline Trajectory brute_force_oracle(const Profile& profile, const SignalModel& model, AgentIndex last) {
  require(last >= 1, "brute_force_oracle: N must be >= 1");
  if (last > kBruteForceLimit) throw ContractError("brute_force_oracle: N too large to enumerate (limit 20)");
  std::vector<DecisionRule> rules;
  rules.reserve(static_cast<std::size_t>(last));
  for (AgentIndex n = 1; n <= last; ++n) rules.push_back(profile.rule(n));

  std::array<std::vector<double>, 2> correct;
  for (int j = 0; j < 2; ++j) {
    detail::Enumerator e{rules, model, theta_of(j), profile.window_length(), {}, std::vector<double>(last, 0.0)};
    e.visit(1, 1.0);
    correct[j] = std::move(e.correct);
  }
  Trajectory out;
  for (AgentIndex n = 1; n <= last; ++n) out.points.push_back(make_point(n, correct[0][n - 1], correct[1][n - 1]));
  return out;
}

}  // namespace tandem
