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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tandem/exact_chain.hpp"
#include "tandem/game.hpp"
#include "tandem/profiles.hpp"

namespace tandem {
namespace {

using designed::k00;

const SignalModel kP37(0.3, 0.7);
const SignalModel kP46(0.4, 0.6);

// Monte Carlo estimate of U_n(y; u, s): sample whole paths from agent 1,
// keep those with v_n = u and s_n = s, force x_n = y and score the
// discounted correct decisions of n .. n + T. Shares no code with payoff().
struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t accepted = 0;
};

McEstimate mc_payoff(const Profile& profile, const SignalModel& model, const PayoffQuery& q, std::uint64_t wanted,
                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int K = profile.window_length();
  std::vector<DecisionRule> rules;
  for (AgentIndex n = 1; n <= q.agent + q.horizon; ++n) rules.push_back(profile.rule(n));
  double sum = 0.0, sq = 0.0;
  McEstimate out;
  for (std::uint64_t tries = 0; out.accepted < wanted && tries < 200 * wanted; ++tries) {
    const int theta = unit(gen) < 0.5 ? 1 : 0;
    const double p = theta == 1 ? model.p1() : model.p0();
    std::vector<int> x;
    bool keep = true;
    double score = 0.0, factor = 1.0;
    for (AgentIndex n = 1; n <= q.agent + q.horizon; ++n) {
      Window u = 0;
      for (int back = K; back >= 1; --back) {
        const auto idx = static_cast<std::int64_t>(n) - back;
        u = (u << 1) | static_cast<Window>(idx >= 1 ? x[static_cast<std::size_t>(idx - 1)] : 0);
      }
      const int s = unit(gen) < p ? 1 : 0;
      int decision;
      if (n == q.agent) {
        if (u != q.window || s != q.signal) {
          keep = false;
          break;
        }
        decision = q.action;
      } else {
        decision = unit(gen) < rules[n - 1].prob_one(u, s) ? 1 : 0;
      }
      x.push_back(decision);
      if (n >= q.agent) {
        score += factor * (decision == theta ? 1.0 : 0.0);
        factor *= q.discount;
      }
    }
    if (!keep) continue;
    ++out.accepted;
    sum += score;
    sq += score * score;
  }
  const double n = static_cast<double>(out.accepted);
  out.mean = sum / n;
  out.se = std::sqrt(std::max(0.0, sq / n - out.mean * out.mean) / n);
  return out;
}

TEST(Payoff, ZeroDiscountIsPosterior) {
  auto gen = testing::make_gen(21);
  int checked = 0;
  for (int c = 0; c < 200; ++c) {
    const SignalModel model = testing::random_model(gen);
    const int K = testing::uniform_int(gen, 1, 3);
    const Profile p = testing::random_table_profile(gen, K, 12, true);
    const AgentIndex n = static_cast<AgentIndex>(testing::uniform_int(gen, 1, 12));
    const auto laws = detail::window_laws(p, model, n, n);
    for (Window u = 0; u < window_count(K); ++u) {
      const double m0 = laws[0].mass[0][u], m1 = laws[0].mass[1][u];
      if (!(m0 > 0 || m1 > 0)) continue;
      for (int s = 0; s < 2; ++s) {
        const double w1 = m1 * model.signal_probability(Theta::One, s);
        const double w0 = m0 * model.signal_probability(Theta::Zero, s);
        const double post = w1 / (w0 + w1);
        const PayoffResult r1 = payoff(p, model, {n, u, s, 1, 0.0, 5});
        const PayoffResult r0 = payoff(p, model, {n, u, s, 0, 0.0, 5});
        ASSERT_EQ(r1.value, post);
        ASSERT_EQ(r0.value, 1.0 - post);
        ASSERT_EQ(r1.tail_bound, 0.0);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(Payoff, ConstantOneContinuation) {
  // Agent 1 reports its signal, agent 2 sees it; every later agent decides 1.
  const SignalModel sharp(0.01, 0.99);
  CustomProfileSpec spec;
  spec.K = 1;
  spec.fallback = RuleTemplate::from(DecisionRule::constant(1, 1));
  spec.agents[1] = RuleTemplate::from(DecisionRule::follow_signal(1));
  const Profile p = custom_profile(spec);
  const double delta = 0.9;
  const std::uint64_t T = 200;
  const PayoffResult r = payoff(p, sharp, {2, 1, 1, 1, delta, T});
  const double post = 0.99 * 0.99 / (0.99 * 0.99 + 0.01 * 0.01);
  EXPECT_NEAR(r.posterior, post, 1e-15);
  const double cap = (1 - std::pow(delta, T + 1)) / (1 - delta);
  EXPECT_NEAR(r.value, post * cap, 1e-10);
  EXPECT_LE(r.value, cap);
  EXPECT_GT(r.value, 0.9998 * cap);
}

TEST(Payoff, DesignedSearchAgent) {
  // agent 31 is the first agent of S_8 under p0 = 0.3, p1 = 0.7
  const Profile p = designed_profile(kP37);
  ASSERT_EQ(p.role(31)->kind, RoleKind::SFirst);
  const PayoffResult u0 = payoff(p, kP37, {31, k00, 1, 0, 0.5, 60});
  const PayoffResult u1 = payoff(p, kP37, {31, k00, 1, 1, 0.5, 60});
  EXPECT_LE(u0.tail_bound, std::pow(2.0, -61) / 0.5);
  const double cap = (1 - std::pow(0.5, 61)) / 0.5;
  for (const auto& r : {u0, u1}) {
    EXPECT_GE(r.value, 0.0);
    EXPECT_LE(r.value, cap);
  }
  EXPECT_NE(u0.value, u1.value);
}

TEST(Payoff, MatchesMonteCarlo) {
  struct Case {
    Profile profile;
    SignalModel model;
    PayoffQuery query;
  };
  const std::vector<Case> cases = {
      {designed_profile(kP37), kP37, {11, k00, 1, 1, 0.5, 20}},
      {designed_profile(kP37), kP37, {11, k00, 1, 0, 0.5, 20}},
      {designed_profile(kP46), kP46, {8, designed::k11, 0, 0, 0.7, 25}},
      {myopic_profile(kP46, 1, 60), kP46, {6, 1, 0, 1, 0.6, 30}},
      {myopic_profile(kP37, 2, 60), kP37, {5, designed::k11, 0, 1, 0.8, 30}},
  };
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    const PayoffResult exact = payoff(c.profile, c.model, c.query);
    const McEstimate mc = mc_payoff(c.profile, c.model, c.query, 20000, seed++);
    ASSERT_GT(mc.accepted, 1000u);
    // the Monte Carlo target is the truncated sum, which is what `value` holds
    EXPECT_NEAR(mc.mean, exact.value, 3.5 * mc.se + 1e-12) << c.profile.descriptor() << " agent " << c.query.agent;
  }
}

TEST(Payoff, TruncationMonotonicity) {
  auto gen = testing::make_gen(22);
  for (int c = 0; c < 100; ++c) {
    const SignalModel model = testing::random_model(gen);
    const Profile p = testing::random_table_profile(gen, 2, 80, true);
    const double delta = testing::uniform(gen, 0.1, 0.95);
    const auto T1 = static_cast<std::uint64_t>(testing::uniform_int(gen, 0, 20));
    const auto T2 = T1 + static_cast<std::uint64_t>(testing::uniform_int(gen, 1, 40));
    const AgentIndex n = static_cast<AgentIndex>(testing::uniform_int(gen, 1, 10));
    const auto laws = detail::window_laws(p, model, n, n);
    for (Window u = 0; u < 4; ++u) {
      if (laws[0].probability(u) == 0.0) continue;
      const PayoffResult a = payoff(p, model, {n, u, 1, 1, delta, T1});
      const PayoffResult b = payoff(p, model, {n, u, 1, 1, delta, T2});
      ASSERT_GE(b.value, a.value - 1e-12);
      ASSERT_LE(b.value - a.value, a.tail_bound + 1e-12);
    }
  }
}

TEST(Payoff, Errors) {
  const Profile copy = baseline_profile(BaselineKind::Copy, 2);
  EXPECT_THROW(payoff(copy, kP37, {5, designed::k11, 1, 1, 0.5, 10}), ZeroProbabilityError);
  EXPECT_THROW(payoff(copy, kP37, {5, 7, 1, 1, 0.5, 10}), ContractError);
  EXPECT_THROW(payoff(copy, kP37, {5, 0, 1, 1, 1.0, 10}), ContractError);
  EXPECT_THROW(payoff(copy, kP37, {5, 0, 2, 1, 0.5, 10}), ContractError);
}

TEST(Equilibrium, MyopicIsZeroDiscountFixedPoint) {
  for (const auto& [model, K] : std::vector<std::pair<SignalModel, int>>{{kP46, 1}, {kP37, 2}, {kP46, 3}}) {
    const Profile p = myopic_profile(model, K, 300);
    const EquilibriumReport r = check_equilibrium(p, model, 0.0, 1, 300, 1e-9, 0);
    EXPECT_TRUE(r.violations.empty()) << K;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(Equilibrium, ConstantZeroFirstAgent) {
  const EquilibriumReport r =
      check_equilibrium(baseline_profile(BaselineKind::Constant0, 1), kP46, 0.0, 1, 1, 1e-9, 0);
  ASSERT_EQ(r.violations.size(), 1u);
  const EquilibriumViolation& v = r.violations[0];
  EXPECT_EQ(v.agent, 1u);
  EXPECT_EQ(v.signal, 1);
  EXPECT_NEAR(v.gain, 0.2, 1e-15);
  EXPECT_NEAR(v.payoff1, 0.6, 1e-15);
  EXPECT_NEAR(v.payoff0, 0.4, 1e-15);
}

TEST(Equilibrium, DesignedProfileIsNotAnEquilibrium) {
  const double delta = 0.5, eps = 0.01;
  const EquilibriumReport r = check_equilibrium(designed_profile(kP37), kP37, delta, 1, 120, eps, 20);
  EXPECT_FALSE(r.violations.empty());
  for (const auto& v : r.violations) EXPECT_GT(v.gain, eps + 2 * r.tail_bound);
}

TEST(Equilibrium, WorkersDoNotChangeReport) {
  const Profile p = designed_profile(kP37);
  const EquilibriumReport a = check_equilibrium(p, kP37, 0.5, 1, 80, 0.01, 20, 1);
  const EquilibriumReport b = check_equilibrium(p, kP37, 0.5, 1, 80, 0.01, 20, 4);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].agent, b.violations[i].agent);
    EXPECT_EQ(a.violations[i].gain, b.violations[i].gain);
  }
  EXPECT_EQ(a.checked, b.checked);
}

TEST(Equilibrium, RefusesShortHorizon) {
  EXPECT_THROW(check_equilibrium(designed_profile(kP37), kP37, 0.5, 1, 10, 0.01, 5), ContractError);
  EXPECT_THROW(check_equilibrium(designed_profile(kP37), kP37, 0.5, 1, 10, 0.0, 100), ContractError);
  EXPECT_THROW(check_equilibrium(designed_profile(kP37), kP37, 0.5, 10, 1, 0.01, 100), ContractError);
}

TEST(PosteriorSequence, EqualMassesGiveHalf) {
  const auto rows = posterior_sequence(baseline_profile(BaselineKind::Constant1, 2), kP37, 3, 5);
  for (const auto& r : rows) EXPECT_EQ(*r.pi, 0.5);
}

TEST(PosteriorSequence, UnreachableWindowIsAbsent) {
  const auto rows = posterior_sequence(baseline_profile(BaselineKind::Copy, 2), kP37, 1, 10);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.pi.has_value());
    EXPECT_FALSE(r.f[1].has_value());
  }
}

TEST(PosteriorSequence, DesignedBlockStartsSharpen) {
  const Schedule schedule(kP37);
  const AgentIndex early = schedule.segment(50).start;
  const AgentIndex late = schedule.segment(5000).start;
  const Profile p = designed_profile(kP37);
  const auto a = posterior_sequence(p, kP37, early, early);
  const auto b = posterior_sequence(p, kP37, late, late);
  ASSERT_TRUE(a[0].pi && b[0].pi);
  EXPECT_GT(*b[0].pi, *a[0].pi);
  EXPECT_GT(*b[0].pi, 0.9);
}

TEST(PosteriorSequence, BayesIdentityAndBound) {
  const auto rows = posterior_sequence(designed_profile(kP46), kP46, 1, 3000);
  int defined = 0;
  for (const auto& r : rows) {
    if (!r.pi) continue;
    ++defined;
    ASSERT_EQ(*r.pi, r.mass1 / (r.mass0 + r.mass1));
    for (int s = 0; s < 2; ++s) ASSERT_GE(*r.f[s], *r.f_lower_bound - 1e-15) << r.n;
    ASSERT_GE(r.gamma, 0.0);
    ASSERT_LE(r.gamma, 1.0);
  }
  EXPECT_GT(defined, 2000);
}

}  // namespace
}  // namespace tandem
