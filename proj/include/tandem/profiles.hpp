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
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/schedule.hpp"
#include "tandem/signals.hpp"
#include "tandem/window_distribution.hpp"

namespace tandem {

// ---------------------------------------------------------------------------
// Designed K = 2 profile
// ---------------------------------------------------------------------------

namespace designed {

inline constexpr int kWindowLength = 2;
inline const Window k00 = make_window({0, 0});
inline const Window k01 = make_window({0, 1});
inline const Window k10 = make_window({1, 0});
inline const Window k11 = make_window({1, 1});

/// Block-first agent of S_m. On (0,0) with s = 1 it probes: decides 1 with
/// probability 1/m. The mixed windows cannot occur on-path; there the
/// agent copies its immediate predecessor.
inline DecisionRule s_first(std::uint64_t m) {
  DecisionRule rule = DecisionRule::copy(kWindowLength);
  rule.set(k11, 1.0);
  rule.set(k00, 0, 0.0).set(k00, 1, 1.0 / static_cast<double>(m));
  return rule;
}

inline DecisionRule s_body() {
  DecisionRule rule(kWindowLength);
  rule.set(k01, 0.0);
  rule.set(k10, 0, 0.0).set(k10, 1, 1.0);
  rule.set(k00, 0.0);
  rule.set(k11, 1.0);
  return rule;
}

/// Block-first agent of R_m: mirror image of s_first.
inline DecisionRule r_first(std::uint64_t m) {
  DecisionRule rule = DecisionRule::copy(kWindowLength);
  rule.set(k00, 0.0);
  rule.set(k11, 0, 1.0 - 1.0 / static_cast<double>(m)).set(k11, 1, 1.0);
  return rule;
}

inline DecisionRule r_body() {
  DecisionRule rule(kWindowLength);
  rule.set(k10, 1.0);
  rule.set(k01, 0, 0.0).set(k01, 1, 1.0);
  rule.set(k00, 0.0);
  rule.set(k11, 1.0);
  return rule;
}

inline DecisionRule rule_for(const AgentRole& role) {
  switch (role.kind) {
    case RoleKind::Preamble: return DecisionRule::constant(kWindowLength, 0);
    case RoleKind::SFirst: return s_first(role.segment);
    case RoleKind::SBody: return s_body();
    case RoleKind::RFirst: return r_first(role.segment);
    case RoleKind::RBody: return r_body();
    case RoleKind::SRTransient:
    case RoleKind::RSTransient: return DecisionRule::copy(kWindowLength);
  }
  return DecisionRule::copy(kWindowLength);
}

/// Walks the segment layout agent by agent without table lookups.
class Cursor final : public RuleCursor {
 public:
  Cursor(const SignalModel& model, const Schedule& schedule, AgentIndex first)
      : model_(model),
        preamble_(DecisionRule::constant(kWindowLength, 0)),
        s_body_(designed::s_body()),
        s_first_(designed::s_first(1)),
        r_body_(designed::r_body()),
        r_first_(designed::r_first(1)),
        transient_(DecisionRule::copy(kWindowLength)) {
    n_ = first;
    if (first < kFirstSegmentStart) {
      in_preamble_ = true;
      rule_ = &preamble_;
      return;
    }
    enter_segment(schedule.segment(schedule.segment_containing(first)));
    pos_ = first - segment_.start;
    select();
  }

  std::optional<AgentRole> role() const override {
    if (in_preamble_) return AgentRole{RoleKind::Preamble, 0, n_};
    return role_in_segment(segment_, pos_);
  }

  void advance() override {
    ++n_;
    if (in_preamble_) {
      if (n_ < kFirstSegmentStart) return;
      in_preamble_ = false;
      enter_segment(Segment{1, kFirstSegmentStart, block_sizes(1, model_)});
      pos_ = 0;
    } else if (++pos_ == segment_.length()) {
      const std::uint64_t m = segment_.index + 1;
      enter_segment(Segment{m, segment_.end(), block_sizes(m, model_)});
      pos_ = 0;
    }
    select();
  }

 private:
  // Only the probe entries depend on m; patch them in place instead of
  // rebuilding both tables every few agents.
  void enter_segment(const Segment& seg) {
    segment_ = seg;
    const double inv_m = 1.0 / static_cast<double>(seg.index);
    s_first_.set(k00, 1, inv_m);
    r_first_.set(k11, 0, 1.0 - inv_m);
    s_last_ = 2 * seg.sizes.k - 1;
    r_last_ = 2 * seg.sizes.k + 2 * seg.sizes.r - 1;
  }

  void select() {
    if (pos_ == 0) {
      rule_ = &s_first_;
    } else if (pos_ < s_last_) {
      rule_ = &s_body_;
    } else if (pos_ == s_last_) {
      rule_ = &transient_;
    } else if (pos_ == s_last_ + 1) {
      rule_ = &r_first_;
    } else if (pos_ < r_last_) {
      rule_ = &r_body_;
    } else {
      rule_ = &transient_;
    }
  }

  SignalModel model_;
  DecisionRule preamble_, s_body_, s_first_, r_body_, r_first_, transient_;
  Segment segment_;
  std::uint64_t pos_ = 0;
  std::uint64_t s_last_ = 1;
  std::uint64_t r_last_ = 3;
  bool in_preamble_ = false;
};

class Source final : public RuleSource {
 public:
  explicit Source(const SignalModel& model) : model_(model), schedule_(model) {}

  int window_length() const override { return kWindowLength; }
  DecisionRule rule(AgentIndex n) const override { return rule_for(schedule_.role_of(n)); }
  std::optional<AgentRole> role(AgentIndex n) const override { return schedule_.role_of(n); }
  std::unique_ptr<RuleCursor> cursor(AgentIndex first) const override {
    return std::make_unique<Cursor>(model_, schedule_, first);
  }

  const Schedule& schedule() const { return schedule_; }

 private:
  SignalModel model_;
  Schedule schedule_;
};

}  // namespace designed

/// The K = 2 learning profile built on the segment schedule of `model`.
inline Profile designed_profile(const SignalModel& model) {
  return Profile("designed", std::make_shared<designed::Source>(model));
}

// ---------------------------------------------------------------------------
// Myopic Bayesian profile
// ---------------------------------------------------------------------------

/// A (agent, window) pair whose window has zero probability under both
/// states of the world; its rule entry never executes.
struct UnrealizedWindow {
  AgentIndex agent = 0;
  Window window = 0;

  friend bool operator==(const UnrealizedWindow&, const UnrealizedWindow&) = default;
};

/// Relative tolerance under which the two posterior weights count as tied.
inline constexpr double kMyopicTieTolerance = 1e-12;

/// Best response of a myopic agent facing window law `dist`: decide 1 iff
/// P^1(u) f1(s) > P^0(u) f0(s). Ties decide 0. Windows with zero mass under
/// both states copy the most recent predecessor and are reported through
/// `unrealized`.
inline DecisionRule myopic_best_response(const WindowDistribution& dist, const SignalModel& model,
                                         std::vector<UnrealizedWindow>* unrealized = nullptr) {
  DecisionRule rule(dist.K);
  for (Window u = 0; u < rule.windows(); ++u) {
    const double m0 = dist.mass[0][u];
    const double m1 = dist.mass[1][u];
    if (m0 == 0.0 && m1 == 0.0) {
      rule.set(u, last_decision(u));
      if (unrealized) unrealized->push_back({dist.agent, u});
      continue;
    }
    for (int s = 0; s < 2; ++s) {
      const double w1 = m1 * model.signal_probability(Theta::One, s);
      const double w0 = m0 * model.signal_probability(Theta::Zero, s);
      const bool one = (w1 - w0) > kMyopicTieTolerance * std::max(w0, w1);
      rule.set(u, s, one ? 1.0 : 0.0);
    }
  }
  return rule;
}

namespace myopic {

/// Rules built by forward induction. Agents up to the construction horizon
/// are computed eagerly; later agents are appended on demand.
class Source final : public RuleSource {
 public:
  Source(const SignalModel& model, int K, AgentIndex horizon)
      : model_(model), K_(K), dist_(WindowDistribution::initial(K)) {
    check_window_length(K);
    std::unique_lock lock(mutex_);
    extend_locked(horizon);
  }

  int window_length() const override { return K_; }

  DecisionRule rule(AgentIndex n) const override { return at(n); }

  /// Stable reference to agent n's rule (deque storage never relocates).
  const DecisionRule& at(AgentIndex n) const {
    {
      std::shared_lock lock(mutex_);
      if (n <= rules_.size()) return rules_[n - 1];
    }
    std::unique_lock lock(mutex_);
    extend_locked(n);
    return rules_[n - 1];
  }

  std::vector<UnrealizedWindow> unrealized() const {
    std::shared_lock lock(mutex_);
    return unrealized_;
  }

  std::unique_ptr<RuleCursor> cursor(AgentIndex first) const override;

 private:
  void extend_locked(AgentIndex n) const {
    WindowDistribution next;
    while (rules_.size() < n) {
      rules_.push_back(myopic_best_response(dist_, model_, &unrealized_));
      propagate_into(dist_, rules_.back(), model_, next);
      std::swap(dist_, next);
    }
  }

  SignalModel model_;
  int K_;
  mutable std::shared_mutex mutex_;
  mutable std::deque<DecisionRule> rules_;
  mutable std::vector<UnrealizedWindow> unrealized_;
  mutable WindowDistribution dist_;
};

class Cursor final : public RuleCursor {
 public:
  Cursor(std::shared_ptr<const Source> source, AgentIndex first) : source_(std::move(source)) {
    n_ = first;
    rule_ = &source_->at(n_);
  }

  void advance() override {
    ++n_;
    rule_ = &source_->at(n_);
  }

 private:
  std::shared_ptr<const Source> source_;
};

inline std::unique_ptr<RuleCursor> Source::cursor(AgentIndex first) const {
  return std::make_unique<Cursor>(std::static_pointer_cast<const Source>(shared_from_this()), first);
}

}  // namespace myopic

/// Profile of agents who each maximize the probability that their own
/// decision is correct, given the exact window law induced by their
/// predecessors.
inline Profile myopic_profile(const SignalModel& model, int K, AgentIndex horizon) {
  require(horizon >= 1, "myopic_profile: horizon must be >= 1");
  return Profile("myopic:" + std::to_string(K), std::make_shared<myopic::Source>(model, K, horizon));
}

// ---------------------------------------------------------------------------
// Baselines and tables
// ---------------------------------------------------------------------------

enum class BaselineKind { Constant0, Constant1, Copy, FollowSignal };

namespace detail {

/// Fixed fallback rule plus optional per-agent overrides.
class TableSource final : public RuleSource {
 public:
  TableSource(DecisionRule fallback, std::map<AgentIndex, DecisionRule> per_agent)
      : fallback_(std::move(fallback)), per_agent_(std::move(per_agent)) {
    for (const auto& [n, rule] : per_agent_) {
      require(n >= 1, "table profile: agent index must be >= 1");
      require(rule.window_length() == fallback_.window_length(), "table profile: mixed window lengths");
    }
  }

  int window_length() const override { return fallback_.window_length(); }

  DecisionRule rule(AgentIndex n) const override { return lookup(n); }

  const DecisionRule& lookup(AgentIndex n) const {
    auto it = per_agent_.find(n);
    return it == per_agent_.end() ? fallback_ : it->second;
  }

  std::unique_ptr<RuleCursor> cursor(AgentIndex first) const override;

 private:
  DecisionRule fallback_;
  std::map<AgentIndex, DecisionRule> per_agent_;
};

class TableCursor final : public RuleCursor {
 public:
  TableCursor(std::shared_ptr<const TableSource> source, AgentIndex first) : source_(std::move(source)) {
    n_ = first;
    rule_ = &source_->lookup(n_);
  }
  void advance() override { rule_ = &source_->lookup(++n_); }

 private:
  std::shared_ptr<const TableSource> source_;
};

inline std::unique_ptr<RuleCursor> TableSource::cursor(AgentIndex first) const {
  return std::make_unique<TableCursor>(std::static_pointer_cast<const TableSource>(shared_from_this()), first);
}

}  // namespace detail

inline std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Constant0: return "constant0";
    case BaselineKind::Constant1: return "constant1";
    case BaselineKind::Copy: return "copy";
    case BaselineKind::FollowSignal: return "signal";
  }
  return "unknown";
}

inline DecisionRule baseline_rule(BaselineKind kind, int K) {
  switch (kind) {
    case BaselineKind::Constant0: return DecisionRule::constant(K, 0);
    case BaselineKind::Constant1: return DecisionRule::constant(K, 1);
    case BaselineKind::Copy: return DecisionRule::copy(K);
    case BaselineKind::FollowSignal: return DecisionRule::follow_signal(K);
  }
  return DecisionRule::copy(K);
}

/// Every agent uses the same rule.
inline Profile baseline_profile(BaselineKind kind, int K) {
  check_window_length(K);
  return Profile(std::string(to_string(kind)) + ":" + std::to_string(K),
                 std::make_shared<detail::TableSource>(baseline_rule(kind, K), std::map<AgentIndex, DecisionRule>{}));
}

/// `fallback` for every agent except those listed in `per_agent`.
inline Profile table_profile(DecisionRule fallback, std::map<AgentIndex, DecisionRule> per_agent,
                             std::string descriptor = "table") {
  return Profile(std::move(descriptor),
                 std::make_shared<detail::TableSource>(std::move(fallback), std::move(per_agent)));
}

// ---------------------------------------------------------------------------
// Custom role-aware tables
// ---------------------------------------------------------------------------

/// One table entry of a custom profile. Besides literal probabilities an
/// entry may scale with the segment index m of the agent's block.
struct RuleEntry {
  enum class Kind { Literal, InverseSegment, OneMinusInverseSegment };
  Kind kind = Kind::Literal;
  double value = 0.0;

  double resolve(std::uint64_t segment) const {
    if (kind == Kind::Literal) return value;
    require(segment >= 1, "rule entry '1/m' used outside a segment");
    const double inv = 1.0 / static_cast<double>(segment);
    return kind == Kind::InverseSegment ? inv : 1.0 - inv;
  }
};

/// A rule table whose entries may depend on the segment index.
struct RuleTemplate {
  int K = 1;
  std::vector<RuleEntry> entries;  // 2 * 2^K, indexed 2 * window + signal

  static RuleTemplate from(const DecisionRule& rule) {
    RuleTemplate t;
    t.K = rule.window_length();
    for (Window u = 0; u < rule.windows(); ++u) {
      for (int s = 0; s < 2; ++s) t.entries.push_back({RuleEntry::Kind::Literal, rule.prob_one(u, s)});
    }
    return t;
  }

  bool literal() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const RuleEntry& e) { return e.kind == RuleEntry::Kind::Literal; });
  }

  DecisionRule resolve(std::uint64_t segment) const {
    require(entries.size() == 2 * window_count(K), "rule template has the wrong number of entries");
    DecisionRule rule(K);
    for (Window u = 0; u < rule.windows(); ++u) {
      for (int s = 0; s < 2; ++s) rule.set(u, s, entries[2 * u + static_cast<std::size_t>(s)].resolve(segment));
    }
    return rule;
  }
};

/// Lookup order for agent n: `agents`, then `roles` (segment layout of the
/// model), then `fallback`.
struct CustomProfileSpec {
  int K = 1;
  RuleTemplate fallback;
  std::map<RoleKind, RuleTemplate> roles;
  std::map<AgentIndex, RuleTemplate> agents;
  std::string descriptor = "custom";
};

namespace detail {

class CustomSource final : public RuleSource {
 public:
  CustomSource(CustomProfileSpec spec, std::optional<SignalModel> model) : spec_(std::move(spec)) {
    check_window_length(spec_.K);
    auto check = [&](const RuleTemplate& t) {
      require(t.K == spec_.K, "custom profile: mixed window lengths");
      require(t.entries.size() == 2 * window_count(spec_.K), "custom profile: table size mismatch");
      for (const auto& e : t.entries) {
        require(e.kind != RuleEntry::Kind::Literal || (e.value >= 0.0 && e.value <= 1.0),
                "custom profile: probability outside [0, 1]");
      }
    };
    check(spec_.fallback);
    require(spec_.fallback.literal(), "custom profile: default rule must be literal");
    for (const auto& [n, t] : spec_.agents) {
      check(t);
      require(t.literal(), "custom profile: per-agent rules must be literal");
    }
    for (const auto& [kind, t] : spec_.roles) {
      check(t);
      require(kind != RoleKind::Preamble || t.literal(), "custom profile: preamble rules must be literal");
    }
    if (!spec_.roles.empty()) {
      require(model.has_value(), "custom profile: role tables need a signal model for the schedule");
      schedule_.emplace(*model);
    }
  }

  int window_length() const override { return spec_.K; }

  DecisionRule rule(AgentIndex n) const override {
    if (auto it = spec_.agents.find(n); it != spec_.agents.end()) return it->second.resolve(0);
    if (schedule_) {
      const AgentRole r = schedule_->role_of(n);
      if (auto it = spec_.roles.find(r.kind); it != spec_.roles.end()) return it->second.resolve(r.segment);
    }
    return spec_.fallback.resolve(0);
  }

  std::optional<AgentRole> role(AgentIndex n) const override {
    if (!schedule_) return std::nullopt;
    return schedule_->role_of(n);
  }

 private:
  CustomProfileSpec spec_;
  std::optional<Schedule> schedule_;
};

}  // namespace detail

inline Profile custom_profile(CustomProfileSpec spec, std::optional<SignalModel> model = std::nullopt) {
  std::string descriptor = spec.descriptor;
  return Profile(std::move(descriptor), std::make_shared<detail::CustomSource>(std::move(spec), model));
}

}  // namespace tandem
