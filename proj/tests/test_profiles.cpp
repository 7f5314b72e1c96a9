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

#include "frozen_values.hpp"
#include "support.hpp"
#include "tandem/exact_chain.hpp"
#include "tandem/profiles.hpp"

namespace tandem {
namespace {

using designed::k00;
using designed::k01;
using designed::k10;
using designed::k11;

const SignalModel kP37(0.3, 0.7);
const SignalModel kP46(0.4, 0.6);

TEST(Windows, EncodingAndText) {
  EXPECT_EQ(make_window({0, 1}), 1u);
  EXPECT_EQ(make_window({1, 0}), 2u);
  EXPECT_EQ(window_to_string(k10, 2), "10");
  EXPECT_EQ(window_from_string("011"), 3u);
  EXPECT_EQ(shift_window(k01, 0, 2), k10);
  EXPECT_EQ(last_decision(k01), 1);
  EXPECT_THROW(window_from_string("012"), ContractError);
  EXPECT_THROW(DecisionRule(0), ContractError);
  EXPECT_THROW(DecisionRule(17), ContractError);
}

TEST(DecisionRule, RejectsBadProbabilities) {
  DecisionRule r(1);
  EXPECT_THROW(r.set(0, 0, 1.5), ContractError);
  EXPECT_THROW(r.set(0, 2, 0.5), ContractError);
  EXPECT_THROW(r.set(2, 0, 0.5), ContractError);
}

TEST(Designed, SBodyTable) {
  const DecisionRule r = designed::s_body();
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(r.prob_one(k01, s), 0.0);
    EXPECT_EQ(r.prob_one(k10, s), s);
    EXPECT_EQ(r.prob_one(k00, s), 0.0);
    EXPECT_EQ(r.prob_one(k11, s), 1.0);
  }
}

TEST(Designed, RBodyTable) {
  const DecisionRule r = designed::r_body();
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(r.prob_one(k10, s), 1.0);
    EXPECT_EQ(r.prob_one(k01, s), s);
    EXPECT_EQ(r.prob_one(k00, s), 0.0);
    EXPECT_EQ(r.prob_one(k11, s), 1.0);
  }
}

TEST(Designed, BlockFirstAgentsProbe) {
  const DecisionRule s4 = designed::s_first(4);
  EXPECT_DOUBLE_EQ(s4.prob_one(k00, 1), 0.25);
  EXPECT_EQ(s4.prob_one(k00, 0), 0.0);
  EXPECT_EQ(s4.prob_one(k11, 0), 1.0);
  EXPECT_EQ(s4.prob_one(k11, 1), 1.0);
  const DecisionRule r4 = designed::r_first(4);
  EXPECT_DOUBLE_EQ(r4.prob(k11, 0, 0), 0.25);
  EXPECT_EQ(r4.prob_one(k11, 1), 1.0);
  EXPECT_EQ(r4.prob_one(k00, 0), 0.0);
  EXPECT_EQ(r4.prob_one(k00, 1), 0.0);
}

TEST(Designed, TransientsCopy) {
  const Profile p = designed_profile(kP37);
  const DecisionRule sr = p.rule(4);  // SRTransient of segment 1
  ASSERT_EQ(p.role(4)->kind, RoleKind::SRTransient);
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(sr.prob_one(k01, s), 1.0);
    EXPECT_EQ(sr.prob_one(k11, s), 1.0);
    EXPECT_EQ(sr.prob_one(k10, s), 0.0);
  }
}

TEST(Designed, PreambleDecidesZero) {
  const Profile p = designed_profile(kP37);
  EXPECT_EQ(p.rule(1), DecisionRule::constant(2, 0));
  EXPECT_EQ(p.rule(2), DecisionRule::constant(2, 0));
  EXPECT_EQ(p.window_length(), 2);
  EXPECT_EQ(p.descriptor(), "designed");
}

TEST(Designed, CursorMatchesLookup) {
  for (const SignalModel& model : {kP37, SignalModel(0.1, 0.5), SignalModel(0.6, 0.9)}) {
    const Profile p = designed_profile(model);
    for (AgentIndex first : {1u, 2u, 3u, 7u, 1000u}) {
      auto cur = p.cursor(first);
      for (AgentIndex n = first; n < first + 3000; ++n) {
        ASSERT_EQ(cur->agent(), n);
        ASSERT_EQ(cur->rule(), p.rule(n)) << n;
        ASSERT_EQ(*cur->role(), *p.role(n)) << n;
        cur->advance();
      }
    }
  }
}

TEST(Myopic, FirstAgentFollowsSignal) {
  const Profile p = myopic_profile(kP46, 1, 5);
  const DecisionRule r = p.rule(1);
  EXPECT_EQ(r.prob_one(0, 1), 1.0);  // posterior 0.6
  EXPECT_EQ(r.prob_one(0, 0), 0.0);  // posterior 0.4
}

TEST(Myopic, K1CascadeOnset) {
  constexpr AgentIndex kOnset = frozen::kMyopicK1CascadeOnset;
  const Profile p = myopic_profile(kP46, 1, 3000);
  EXPECT_FALSE(p.rule(kOnset - 1).ignores_signal());
  for (AgentIndex n = kOnset; n <= 3000; ++n) {
    ASSERT_EQ(p.rule(n), DecisionRule::copy(1)) << n;
  }
}

TEST(Myopic, UnrealizedWindowsAreFlaggedAndCopy) {
  const Profile p = myopic_profile(kP37, 2, 3);
  const auto src = std::dynamic_pointer_cast<const myopic::Source>(p.source_ptr());
  ASSERT_TRUE(src);
  const auto flagged = src->unrealized();
  // agent 1 sees (0,0) for sure; agent 2 can only see (0,0) or (0,1)
  const std::vector<UnrealizedWindow> expect = {{1, k01}, {1, k10}, {1, k11}, {2, k10}, {2, k11}};
  EXPECT_EQ(std::vector<UnrealizedWindow>(flagged.begin(), flagged.begin() + 5), expect);
  EXPECT_EQ(p.rule(1).prob_one(k01, 0), 1.0);
  EXPECT_EQ(p.rule(1).prob_one(k10, 1), 0.0);
}

TEST(Myopic, FixedPointAgainstOwnLaws) {
  for (const auto& [model, K] : std::vector<std::pair<SignalModel, int>>{{kP46, 1}, {kP37, 2}, {kP46, 3}, {SignalModel(0.2, 0.45), 2}}) {
    const Profile p = myopic_profile(model, K, 400);
    sweep(p, model, 400, [&](const WindowDistribution& dist, const RuleCursor& cur) {
      ASSERT_EQ(myopic_best_response(dist, model), cur.rule()) << "agent " << cur.agent();
    });
  }
}

TEST(Myopic, ExtendsPastHorizon) {
  const Profile short_build = myopic_profile(kP37, 2, 10);
  const Profile long_build = myopic_profile(kP37, 2, 200);
  for (AgentIndex n = 1; n <= 200; ++n) ASSERT_EQ(short_build.rule(n), long_build.rule(n)) << n;
}

TEST(Myopic, TieDecidesZero) {
  // Equal window masses and a signal whose likelihoods coincide after mixing:
  // with P^0(u) f0(s) == P^1(u) f1(s) the rule must pick 0.
  WindowDistribution d = WindowDistribution::point(5, 1, 0);
  d.mass[0] = {0.6, 0.4};
  d.mass[1] = {0.4, 0.6};
  const DecisionRule r = myopic_best_response(d, kP46);
  EXPECT_EQ(r.prob_one(0, 1), 0.0);  // 0.4 * 0.6 vs 0.6 * 0.4
  EXPECT_EQ(r.prob_one(1, 0), 0.0);  // 0.6 * 0.4 vs 0.4 * 0.6
  EXPECT_EQ(r.prob_one(1, 1), 1.0);
  EXPECT_EQ(r.prob_one(0, 0), 0.0);
}

TEST(Baselines, Tables) {
  EXPECT_EQ(baseline_profile(BaselineKind::Constant0, 2).rule(7), DecisionRule(2, 0.0));
  EXPECT_EQ(baseline_profile(BaselineKind::Constant1, 1).rule(7), DecisionRule(1, 1.0));
  const DecisionRule copy = baseline_profile(BaselineKind::Copy, 2).rule(1);
  EXPECT_EQ(copy.prob_one(k01, 0), 1.0);
  EXPECT_EQ(copy.prob_one(k10, 1), 0.0);
  const DecisionRule sig = baseline_profile(BaselineKind::FollowSignal, 3).rule(1);
  for (Window u = 0; u < 8; ++u) {
    EXPECT_EQ(sig.prob_one(u, 0), 0.0);
    EXPECT_EQ(sig.prob_one(u, 1), 1.0);
  }
  EXPECT_EQ(baseline_profile(BaselineKind::Copy, 2).descriptor(), "copy:2");
}

TEST(Baselines, CopyAtAgentOneDecidesZero) {
  const Trajectory t = error_trajectory(baseline_profile(BaselineKind::Copy, 2), kP46, 1, {1});
  EXPECT_EQ(t.points[0].p0_correct, 1.0);
  EXPECT_EQ(t.points[0].p1_correct, 0.0);
}

TEST(CustomProfile, RolesReproduceDesigned) {
  CustomProfileSpec spec;
  spec.K = 2;
  spec.fallback = RuleTemplate::from(DecisionRule::constant(2, 0));
  auto inv = RuleTemplate::from(designed::s_first(1));
  inv.entries[2 * k00 + 1] = {RuleEntry::Kind::InverseSegment, 0.0};
  spec.roles[RoleKind::SFirst] = inv;
  auto rinv = RuleTemplate::from(designed::r_first(1));
  rinv.entries[2 * k11] = {RuleEntry::Kind::OneMinusInverseSegment, 0.0};
  spec.roles[RoleKind::RFirst] = rinv;
  spec.roles[RoleKind::SBody] = RuleTemplate::from(designed::s_body());
  spec.roles[RoleKind::RBody] = RuleTemplate::from(designed::r_body());
  spec.roles[RoleKind::SRTransient] = RuleTemplate::from(DecisionRule::copy(2));
  spec.roles[RoleKind::RSTransient] = RuleTemplate::from(DecisionRule::copy(2));
  const Profile custom = custom_profile(spec, kP37);
  const Profile reference = designed_profile(kP37);
  for (AgentIndex n = 1; n <= 3000; ++n) ASSERT_EQ(custom.rule(n), reference.rule(n)) << n;
}

TEST(CustomProfile, AgentOverridesWin) {
  CustomProfileSpec spec;
  spec.K = 1;
  spec.fallback = RuleTemplate::from(DecisionRule::copy(1));
  spec.agents[1] = RuleTemplate::from(DecisionRule::follow_signal(1));
  const Profile p = custom_profile(spec);
  EXPECT_EQ(p.rule(1), DecisionRule::follow_signal(1));
  EXPECT_EQ(p.rule(2), DecisionRule::copy(1));
}

TEST(CustomProfile, Validation) {
  CustomProfileSpec spec;
  spec.K = 1;
  spec.fallback = RuleTemplate::from(DecisionRule::copy(2));
  EXPECT_THROW(custom_profile(spec), ContractError);
  spec.fallback = RuleTemplate::from(DecisionRule::copy(1));
  spec.roles[RoleKind::SBody] = RuleTemplate::from(DecisionRule::copy(1));
  EXPECT_THROW(custom_profile(spec), ContractError);  // roles need a model
  EXPECT_NO_THROW(custom_profile(spec, kP37));
}

}  // namespace
}  // namespace tandem
