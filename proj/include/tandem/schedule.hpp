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
#include <cmath>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <string_view>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/signals.hpp"

namespace tandem {

/// Lengths parameterizing segment m: the S-block has 2k-1 agents, the
/// R-block 2r-1, and each block is followed by one transient agent.
struct BlockSizes {
  std::uint64_t k = 1;
  std::uint64_t r = 1;

  friend bool operator==(const BlockSizes&, const BlockSizes&) = default;
};

/// k_m = ceil(log(ln m) / log(1/p_bar)), r_m likewise with q_bar, once
/// ln m exceeds both 1/p_bar and 1/q_bar; k_m = r_m = 1 before that.
inline BlockSizes block_sizes(std::uint64_t m, const SignalModel& model) {
  require(m >= 1, "block_sizes: segment index must be >= 1");
  const double pb = model.p_bar();
  const double qb = model.q_bar();
  const double log_m = std::log(static_cast<double>(m));
  if (!(log_m > std::max(1.0 / pb, 1.0 / qb))) return {1, 1};
  const double loglog = std::log(log_m);
  const auto k = static_cast<std::uint64_t>(std::ceil(loglog / std::log(1.0 / pb)));
  const auto r = static_cast<std::uint64_t>(std::ceil(loglog / std::log(1.0 / qb)));
  return {std::max<std::uint64_t>(k, 1), std::max<std::uint64_t>(r, 1)};
}

enum class RoleKind { Preamble, SFirst, SBody, SRTransient, RFirst, RBody, RSTransient };

inline std::string_view to_string(RoleKind kind) {
  switch (kind) {
    case RoleKind::Preamble: return "preamble";
    case RoleKind::SFirst: return "s_first";
    case RoleKind::SBody: return "s_body";
    case RoleKind::SRTransient: return "sr_transient";
    case RoleKind::RFirst: return "r_first";
    case RoleKind::RBody: return "r_body";
    case RoleKind::RSTransient: return "rs_transient";
  }
  return "unknown";
}

/// Where an agent sits in the segment layout. `segment` is 0 for the
/// preamble; `offset` is the 1-based position inside the block (1 for
/// first agents and transients).
struct AgentRole {
  RoleKind kind = RoleKind::Preamble;
  std::uint64_t segment = 0;
  std::uint64_t offset = 1;

  friend bool operator==(const AgentRole&, const AgentRole&) = default;
};

/// One segment of the layout: S-block, SR transient, R-block, RS transient.
struct Segment {
  std::uint64_t index = 1;
  AgentIndex start = 3;
  BlockSizes sizes;

  std::uint64_t length() const { return 2 * sizes.k + 2 * sizes.r; }
  AgentIndex r_start() const { return start + 2 * sizes.k; }
  AgentIndex end() const { return start + length(); }  // one past the last agent
};

inline constexpr AgentIndex kFirstSegmentStart = 3;

/// Role of the agent at 0-based position `pos` of a segment.
inline AgentRole role_in_segment(const Segment& seg, std::uint64_t pos) {
  const std::uint64_t k = seg.sizes.k;
  const std::uint64_t r = seg.sizes.r;
  const std::uint64_t m = seg.index;
  if (pos == 0) return {RoleKind::SFirst, m, 1};
  if (pos < 2 * k - 1) return {RoleKind::SBody, m, pos + 1};
  if (pos == 2 * k - 1) return {RoleKind::SRTransient, m, 1};
  if (pos == 2 * k) return {RoleKind::RFirst, m, 1};
  if (pos < 2 * k + 2 * r - 1) return {RoleKind::RBody, m, pos - 2 * k + 1};
  return {RoleKind::RSTransient, m, 1};
}

/// Segment layout for one signal model with a memoized table of segment
/// starts. Lookups are safe from concurrent readers; the table grows under
/// an exclusive lock.
class Schedule {
 public:
  explicit Schedule(const SignalModel& model) : model_(model) { starts_.push_back(kFirstSegmentStart); }

  Schedule(const Schedule& other) : model_(other.model_) {
    std::shared_lock lock(other.mutex_);
    starts_ = other.starts_;
  }
  Schedule& operator=(const Schedule&) = delete;

  const SignalModel& model() const { return model_; }

  BlockSizes sizes(std::uint64_t m) const { return block_sizes(m, model_); }

  /// Segment m (1-based).
  Segment segment(std::uint64_t m) const {
    require(m >= 1, "Schedule::segment: index must be >= 1");
    ensure_segments(m);
    std::shared_lock lock(mutex_);
    return {m, starts_[m - 1], sizes(m)};
  }

  AgentRole role_of(AgentIndex n) const {
    require(n >= 1, "role_of: agent index must be >= 1");
    if (n < kFirstSegmentStart) return {RoleKind::Preamble, 0, n};
    const std::uint64_t m = segment_containing(n);
    const Segment seg = segment(m);
    return role_in_segment(seg, n - seg.start);
  }

  /// Index of the segment containing agent n >= 3.
  std::uint64_t segment_containing(AgentIndex n) const {
    require(n >= kFirstSegmentStart, "segment_containing: agent precedes the first segment");
    ensure_agent(n);
    std::shared_lock lock(mutex_);
    auto it = std::upper_bound(starts_.begin(), starts_.end(), n);
    return static_cast<std::uint64_t>(it - starts_.begin());
  }

 private:
  // starts_[i] is the first agent of segment i + 1.
  void ensure_segments(std::uint64_t m) const {
    {
      std::shared_lock lock(mutex_);
      if (starts_.size() > m) return;
    }
    std::unique_lock lock(mutex_);
    while (starts_.size() <= m) grow_locked();
  }

  void ensure_agent(AgentIndex n) const {
    {
      std::shared_lock lock(mutex_);
      if (starts_.back() > n) return;
    }
    std::unique_lock lock(mutex_);
    while (starts_.back() <= n) grow_locked();
  }

  void grow_locked() const {
    const std::uint64_t m = starts_.size();
    const BlockSizes s = sizes(m);
    starts_.push_back(starts_.back() + 2 * s.k + 2 * s.r);
  }

  SignalModel model_;
  mutable std::shared_mutex mutex_;
  mutable std::vector<AgentIndex> starts_;
};

/// Convenience lookup that builds a throwaway schedule; O(m).
inline AgentRole role_of(AgentIndex n, const SignalModel& model) { return Schedule(model).role_of(n); }

}  // namespace tandem
