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
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/schedule.hpp"

namespace tandem {

/// The K most recent predecessor decisions packed into an integer. The most
/// recent decision x_{n-1} is the least significant bit, so the window
/// (x_{n-2}, x_{n-1}) = (1, 0) is the integer 2.
using Window = std::uint32_t;

inline constexpr int kMaxWindowLength = 16;

inline constexpr Window window_mask(int K) { return (Window{1} << K) - 1; }

inline constexpr std::size_t window_count(int K) { return std::size_t{1} << K; }

/// Window observed by the successor of an agent that saw `u` and decided `x`.
inline constexpr Window shift_window(Window u, int x, int K) {
  return ((u << 1) | static_cast<Window>(x)) & window_mask(K);
}

inline constexpr int last_decision(Window u) { return static_cast<int>(u & 1u); }

/// Builds a window from decisions listed oldest first.
inline Window make_window(std::initializer_list<int> oldest_first) {
  Window u = 0;
  for (int x : oldest_first) u = (u << 1) | static_cast<Window>(x != 0);
  return u;
}

/// "01" style rendering, oldest decision first.
inline std::string window_to_string(Window u, int K) {
  std::string s(static_cast<std::size_t>(K), '0');
  for (int i = 0; i < K; ++i) {
    if ((u >> i) & 1u) s[static_cast<std::size_t>(K - 1 - i)] = '1';
  }
  return s;
}

inline Window window_from_string(std::string_view bits) {
  require(!bits.empty() && bits.size() <= static_cast<std::size_t>(kMaxWindowLength), "window string has bad length");
  Window u = 0;
  for (char c : bits) {
    require(c == '0' || c == '1', "window string must contain only 0 and 1");
    u = (u << 1) | static_cast<Window>(c == '1');
  }
  return u;
}

inline void check_window_length(int K) {
  require(K >= 1 && K <= kMaxWindowLength, "window length K must lie in [1, 16]");
}

/// Probability of deciding 1 for every (window, signal) pair. Randomized
/// rules carry probabilities strictly between 0 and 1.
class DecisionRule {
 public:
  explicit DecisionRule(int K = 1, double fill = 0.0) : K_(K) {
    check_window_length(K);
    require(fill >= 0.0 && fill <= 1.0, "DecisionRule: probability outside [0, 1]");
    table_.assign(2 * window_count(K), fill);
  }

  int window_length() const { return K_; }
  std::size_t windows() const { return window_count(K_); }

  double prob_one(Window u, int s) const { return table_[2 * static_cast<std::size_t>(u) + static_cast<std::size_t>(s)]; }

  double prob(Window u, int s, int decision) const {
    const double p = prob_one(u, s);
    return decision == 1 ? p : 1.0 - p;
  }

  DecisionRule& set(Window u, int s, double p) {
    require(u < windows(), "DecisionRule::set: window out of range");
    require(s == 0 || s == 1, "DecisionRule::set: signal must be 0 or 1");
    require(p >= 0.0 && p <= 1.0, "DecisionRule::set: probability outside [0, 1]");
    table_[2 * static_cast<std::size_t>(u) + static_cast<std::size_t>(s)] = p;
    return *this;
  }

  /// Sets the same probability for both signal values.
  DecisionRule& set(Window u, double p) { return set(u, 0, p).set(u, 1, p); }

  bool deterministic() const {
    for (double p : table_) {
      if (p != 0.0 && p != 1.0) return false;
    }
    return true;
  }

  /// True when the decision never depends on the private signal.
  bool ignores_signal() const {
    for (Window u = 0; u < windows(); ++u) {
      if (prob_one(u, 0) != prob_one(u, 1)) return false;
    }
    return true;
  }

  static DecisionRule constant(int K, int c) { return DecisionRule(K, c == 0 ? 0.0 : 1.0); }

  static DecisionRule copy(int K) {
    DecisionRule rule(K);
    for (Window u = 0; u < rule.windows(); ++u) rule.set(u, last_decision(u));
    return rule;
  }

  static DecisionRule follow_signal(int K) {
    DecisionRule rule(K);
    for (Window u = 0; u < rule.windows(); ++u) rule.set(u, 0, 0.0).set(u, 1, 1.0);
    return rule;
  }

  friend bool operator==(const DecisionRule&, const DecisionRule&) = default;

 private:
  int K_;
  std::vector<double> table_;
};

/// Sequential view of a profile's rules: agent(), rule() and role() describe
/// the current agent; advance() moves to the next one.
class RuleCursor {
 public:
  virtual ~RuleCursor() = default;

  AgentIndex agent() const { return n_; }
  const DecisionRule& rule() const { return *rule_; }
  virtual std::optional<AgentRole> role() const { return std::nullopt; }
  virtual void advance() = 0;

 protected:
  AgentIndex n_ = 1;
  const DecisionRule* rule_ = nullptr;
};

class RuleSource : public std::enable_shared_from_this<RuleSource> {
 public:
  virtual ~RuleSource() = default;

  virtual int window_length() const = 0;
  virtual DecisionRule rule(AgentIndex n) const = 0;
  virtual std::optional<AgentRole> role(AgentIndex) const { return std::nullopt; }
  virtual std::unique_ptr<RuleCursor> cursor(AgentIndex first) const;
};

namespace detail {

class LookupCursor final : public RuleCursor {
 public:
  LookupCursor(std::shared_ptr<const RuleSource> source, AgentIndex first) : source_(std::move(source)) {
    n_ = first;
    load();
  }

  std::optional<AgentRole> role() const override { return source_->role(n_); }

  void advance() override {
    ++n_;
    load();
  }

 private:
  void load() {
    current_ = source_->rule(n_);
    rule_ = &current_;
  }

  std::shared_ptr<const RuleSource> source_;
  DecisionRule current_;
};

}  // namespace detail

inline std::unique_ptr<RuleCursor> RuleSource::cursor(AgentIndex first) const {
  return std::make_unique<detail::LookupCursor>(shared_from_this(), first);
}

/// A decision profile: one rule per agent n >= 1, all with window length K.
/// Cheap to copy; the underlying rule source is shared and immutable.
class Profile {
 public:
  Profile(std::string descriptor, std::shared_ptr<const RuleSource> source)
      : descriptor_(std::move(descriptor)), source_(std::move(source)) {
    require(source_ != nullptr, "Profile: null rule source");
  }

  int window_length() const { return source_->window_length(); }
  const std::string& descriptor() const { return descriptor_; }

  DecisionRule rule(AgentIndex n) const {
    require(n >= 1, "Profile::rule: agent index must be >= 1");
    return source_->rule(n);
  }

  std::optional<AgentRole> role(AgentIndex n) const { return source_->role(n); }

  std::unique_ptr<RuleCursor> cursor(AgentIndex first = 1) const {
    require(first >= 1, "Profile::cursor: agent index must be >= 1");
    return source_->cursor(first);
  }

  const RuleSource& source() const { return *source_; }
  std::shared_ptr<const RuleSource> source_ptr() const { return source_; }

 private:
  std::string descriptor_;
  std::shared_ptr<const RuleSource> source_;
};

}  // namespace tandem
