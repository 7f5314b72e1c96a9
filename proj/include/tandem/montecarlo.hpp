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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/rng.hpp"
#include "tandem/signals.hpp"

namespace tandem {

enum class ThetaMode { Zero, One, Prior };

struct SimConfig {
  Profile profile;
  SignalModel model;
  ThetaMode theta_mode = ThetaMode::Prior;
  AgentIndex agents = 1;
  std::uint64_t replications = 1;
  std::uint64_t seed = 0;
  /// Replication r uses stream id first_stream + r.
  std::uint64_t first_stream = 0;
  std::vector<AgentIndex> checkpoints;
  /// 0 = one worker per hardware thread.
  unsigned workers = 0;
};

/// Counters and checkpoint decisions of one sampled path. Cumulative
/// counters are also captured at each checkpoint.
struct PathRecord {
  std::uint64_t stream = 0;
  Theta theta = Theta::Zero;
  std::vector<std::uint8_t> decisions;  // x_n at each checkpoint
  std::vector<std::uint64_t> switches_at;
  std::vector<std::uint64_t> searches_at;
  std::uint64_t switches = 0;  // #{n >= 2 : x_n != x_{n-1}}
  std::uint64_t searches = 0;  // block-first agents that broke the window consensus
  AgentIndex last_switch = 0;  // 0 when the path never switched
};

inline void validate(const SimConfig& config) {
  require(config.agents >= 1, "simulate: N must be >= 1");
  require(config.replications >= 1, "simulate: replications must be >= 1");
  for (AgentIndex c : config.checkpoints) require(c >= 1 && c <= config.agents, "simulate: checkpoint outside [1, N]");
  require(std::is_sorted(config.checkpoints.begin(), config.checkpoints.end()), "simulate: checkpoints must be sorted");
}

/// Samples one path. Deterministic in (seed, stream id); draws are keyed by
/// (agent index, draw kind) so they never depend on evaluation order.
inline PathRecord simulate_path(const SimConfig& config, std::uint64_t replication) {
  PathRecord rec;
  rec.stream = config.first_stream + replication;
  const rng::CounterStream world(config.seed, rec.stream, rng::DrawKind::World);
  const rng::CounterStream signal(config.seed, rec.stream, rng::DrawKind::Signal);
  const rng::CounterStream coin(config.seed, rec.stream, rng::DrawKind::Randomization);

  switch (config.theta_mode) {
    case ThetaMode::Zero: rec.theta = Theta::Zero; break;
    case ThetaMode::One: rec.theta = Theta::One; break;
    case ThetaMode::Prior: rec.theta = world.uniform(0) < kPriorOne ? Theta::One : Theta::Zero; break;
  }
  const double p_signal = config.model.p(rec.theta);
  const int K = config.profile.window_length();
  const std::size_t n_checks = config.checkpoints.size();
  rec.decisions.reserve(n_checks);
  rec.switches_at.reserve(n_checks);
  rec.searches_at.reserve(n_checks);

  auto cursor = config.profile.cursor(1);
  Window u = 0;
  int prev = 0;
  std::size_t next_check = 0;
  for (AgentIndex n = 1;; ++n) {
    const DecisionRule& rule = cursor->rule();
    const int s = signal.uniform(n) < p_signal ? 1 : 0;
    const double rho = rule.prob_one(u, s);
    int x;
    if (rho >= 1.0) {
      x = 1;
    } else if (rho <= 0.0) {
      x = 0;
    } else {
      x = coin.uniform(n) < rho ? 1 : 0;
    }
    if (n >= 2 && x != prev) {
      ++rec.switches;
      rec.last_switch = n;
    }
    if (x != last_decision(u)) {
      const auto role = cursor->role();
      if (role && (role->kind == RoleKind::SFirst || role->kind == RoleKind::RFirst)) ++rec.searches;
    }
    while (next_check < n_checks && config.checkpoints[next_check] == n) {
      rec.decisions.push_back(static_cast<std::uint8_t>(x));
      rec.switches_at.push_back(rec.switches);
      rec.searches_at.push_back(rec.searches);
      ++next_check;
    }
    prev = x;
    u = shift_window(u, x, K);
    if (n == config.agents) break;
    cursor->advance();
  }
  return rec;
}

struct CensusSummary {
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline CensusSummary summarize(const std::vector<double>& values) {
  CensusSummary c;
  if (values.empty()) return c;
  c.min = *std::min_element(values.begin(), values.end());
  c.max = *std::max_element(values.begin(), values.end());
  c.q25 = quantile(values, 0.25);
  c.median = quantile(values, 0.5);
  c.q75 = quantile(values, 0.75);
  double total = 0.0;
  for (double v : values) total += v;
  c.mean = total / static_cast<double>(values.size());
  return c;
}

struct CheckpointEstimate {
  AgentIndex n = 0;
  double mean = 0.0;  // empirical P(x_n = theta)
  double se = 0.0;    // sqrt(mean (1 - mean) / R)
  CensusSummary switches;
  CensusSummary searches;
};

struct PathCounters {
  std::uint64_t stream = 0;
  int theta = 0;
  std::uint64_t switches = 0;
  std::uint64_t searches = 0;
  AgentIndex last_switch = 0;

  friend bool operator==(const PathCounters&, const PathCounters&) = default;
};

struct PathStats {
  std::uint64_t replications = 0;
  std::vector<CheckpointEstimate> checkpoints;
  std::vector<PathCounters> paths;
  CensusSummary switches;
  CensusSummary searches;
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs every replication and reduces in replication order, so the result
/// does not depend on the number of workers.
inline PathStats estimate_error(const SimConfig& config) {
  validate(config);
  const std::uint64_t R = config.replications;
  std::vector<PathRecord> records(R);

  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(config.workers), R));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::uint64_t r = next++; r < R && !failed; r = next++) records[r] = simulate_path(config, r);
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  PathStats stats;
  stats.replications = R;
  const std::size_t n_checks = config.checkpoints.size();
  std::vector<double> switches(R), searches(R);
  for (std::size_t c = 0; c < n_checks; ++c) {
    CheckpointEstimate est;
    est.n = config.checkpoints[c];
    std::uint64_t correct = 0;
    for (std::uint64_t r = 0; r < R; ++r) {
      const PathRecord& rec = records[r];
      if (rec.decisions[c] == static_cast<std::uint8_t>(to_int(rec.theta))) ++correct;
      switches[r] = static_cast<double>(rec.switches_at[c]);
      searches[r] = static_cast<double>(rec.searches_at[c]);
    }
    est.mean = static_cast<double>(correct) / static_cast<double>(R);
    est.se = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(R));
    est.switches = summarize(switches);
    est.searches = summarize(searches);
    stats.checkpoints.push_back(est);
  }
  stats.paths.reserve(R);
  for (std::uint64_t r = 0; r < R; ++r) {
    const PathRecord& rec = records[r];
    stats.paths.push_back({rec.stream, to_int(rec.theta), rec.switches, rec.searches, rec.last_switch});
    switches[r] = static_cast<double>(rec.switches);
    searches[r] = static_cast<double>(rec.searches);
  }
  stats.switches = summarize(switches);
  stats.searches = summarize(searches);
  return stats;
}

}  // namespace tandem
