/*
 * Copyright 2026 The xrsched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <map>
#include <sstream>
#include <stdexcept>

#include "instances.hpp"
#include "xrsched/rlenv.hpp"
#include "xrsched/scenario.hpp"
#include "xrsched/schedulers.hpp"

using namespace xrsched;
using xrsched::testing::make_instance;
using xrsched::testing::share;

namespace {

ScenarioSpec desk(int devices) {
  ScenarioSpec s;
  s.devices = devices;
  s.rb_per_slot = 12;
  return s;
}

}  // namespace

TEST_SUITE("rlenv") {
  TEST_CASE("reset with no slot-0 arrivals is empty") {
    XrEnv env(share(make_instance(1, 4, 2, 5, {100.0}, {{0, 1, 2, 100.0, FrameKind::I}})));
    CHECK(env.state().empty());
    CHECK(env.state().slot == 0);
    CHECK(legal_actions(env.state()) == std::vector<EnvAction>{EnvAction::default_action()});
  }

  TEST_CASE("reset with one arrival builds its row") {
    XrEnv env(share(make_instance(1, 20, 20, 7, {123.0}, {{0, 1, 0, 1000.0, FrameKind::P}})));
    REQUIRE(env.state().size() == 1);
    const StateRow expected = {0.1, 1000.0, 20.0, 123.0, 7.0};
    CHECK(env.state().rows[0] == expected);
    CHECK(env.state().rb_left == 7);
  }

  TEST_CASE("same instance gives the same initial state") {
    auto inst = share(make_episode(desk(4), 3));
    XrEnv a(inst);
    XrEnv b(inst);
    CHECK(a.state().rows == b.state().rows);
    a.step(legal_actions(a.state()).front());
    a.reset();
    CHECK(a.state().rows == b.state().rows);
  }

  TEST_CASE("grant that completes the frame is type 1") {
    XrEnv env(share(make_instance(1, 3, 3, 10, {100.0}, {{0, 1, 0, 350.0, FrameKind::I}})));
    const auto r = env.step(EnvAction::select(0));
    CHECK(r.grant == 4);
    CHECK(r.type == TransitionType::Success);
    CHECK(r.reward == 0.0);
    CHECK(r.next_state.empty());
    CHECK(r.next_state.rb_left == 6);
  }

  TEST_CASE("grant that exhausts the budget is type 2") {
    XrEnv env(share(make_instance(1, 3, 3, 6, {100.0}, {{0, 1, 0, 2000.0, FrameKind::I}})));
    const auto r = env.step(EnvAction::select(0));
    CHECK(r.grant == 6);
    CHECK(r.type == TransitionType::Exhaustion);
    CHECK(r.reward == 0.0);
    REQUIRE(r.next_state.size() == 1);
    CHECK(r.next_state.rows[0][kRemaining] == 1400.0);
    CHECK(r.next_state.rb_left == 0);
    // The following step closes the slot.
    const auto next = env.step(EnvAction::select(0));
    CHECK(next.type == TransitionType::SlotAdvance);
    CHECK(next.next_state.slot == 1);
    CHECK(next.next_state.rb_left == 6);
    CHECK(next.next_state.rows[0][kRfdb] == 2.0);
  }

  TEST_CASE("slot advance dropping an I and a P frame pays -1.1") {
    XrEnv env(share(make_instance(2, 2, 1, 0, {100.0, 100.0},
                                  {{0, 1, 0, 100.0, FrameKind::I}, {1, 2, 0, 100.0, FrameKind::P}})));
    REQUIRE(env.state().size() == 2);
    const auto r = env.step(EnvAction::select(1));
    CHECK(r.type == TransitionType::SlotAdvance);
    CHECK(r.reward == doctest::Approx(-1.1));
    CHECK(r.dropped_weight == WeightSum::of(1.0) + WeightSum::of(0.1));
  }

  TEST_CASE("illegal actions are rejected") {
    XrEnv env(share(make_instance(1, 3, 2, 4, {100.0}, {{0, 1, 0, 100.0, FrameKind::I}, {0, 2, 1, 100.0, FrameKind::P}})));
    CHECK_THROWS_AS(env.step(EnvAction::select(1)), std::invalid_argument);
    CHECK_THROWS_AS(env.step(EnvAction::default_action()), std::invalid_argument);
    XrEnv empty(share(make_instance(1, 3, 2, 4, {100.0}, {{0, 1, 1, 100.0, FrameKind::I}})));
    CHECK_THROWS_AS(empty.step(EnvAction::select(0)), std::invalid_argument);
  }

  TEST_CASE("legal actions list every row") {
    StateMatrix s;
    s.rows.resize(3);
    CHECK(legal_actions(s).size() == 3);
    CHECK(legal_actions(s)[2] == EnvAction::select(2));
    XrEnv env(share(make_instance(2, 3, 2, 10, {100.0, 100.0},
                                  {{0, 1, 0, 100.0, FrameKind::I}, {1, 1, 0, 100.0, FrameKind::I}})));
    REQUIRE(legal_actions(env.state()).size() == 2);
    const auto r = env.step(EnvAction::select(0));
    CHECK(legal_actions(r.next_state).size() == 1);
  }

  TEST_CASE("all frames delivered gives return 0 and a P-frame drop gives -0.1") {
    {
      XrEnv env(share(make_instance(1, 3, 2, 10, {100.0}, {{0, 1, 0, 300.0, FrameKind::I}})));
      PfScheduler pf;
      CHECK(episode_reward_total(run_policy_in_env(env, pf)) == 0.0);
    }
    {
      XrEnv env(share(make_instance(1, 3, 2, 0, {100.0}, {{0, 2, 0, 300.0, FrameKind::P}})));
      PfScheduler pf;
      const auto trace = run_policy_in_env(env, pf);
      CHECK(episode_reward_total(trace) == doctest::Approx(-0.1));
    }
  }

  TEST_CASE("step invariants on random episodes") {
    for (int devices : {2, 4, 6}) {
      for (std::uint64_t seed = 10; seed < 13; ++seed) {
        auto inst = share(make_episode(desk(devices), seed));
        XrEnv env(inst);
        Rng rng(seed);
        std::map<int, int> steps_in_slot;
        std::map<int, std::size_t> rows_at_open;
        rows_at_open[0] = env.state().size();
        int last_rb = env.state().rb_left;
        WeightSum dropped;
        while (!env.done()) {
          const auto s = env.state();
          const auto actions = legal_actions(s);
          const auto a = actions[rng.index(actions.size())];
          const auto r = env.step(a);
          ++steps_in_slot[s.slot];
          dropped += r.dropped_weight;
          if (r.type != TransitionType::SlotAdvance) {
            CHECK(r.reward == 0.0);
            CHECK(r.next_state.slot == s.slot);
            CHECK(r.next_state.rb_left <= last_rb);
          } else {
            CHECK(r.reward == 0.0 - r.dropped_weight.value());
            if (!r.done) {
              CHECK(r.next_state.slot == s.slot + 1);
              CHECK(r.next_state.rb_left == inst->rb_per_slot[static_cast<std::size_t>(s.slot + 1)]);
              rows_at_open[s.slot + 1] = r.next_state.size();
            }
          }
          for (const auto& row : r.next_state.rows) {
            CHECK(row[kRemaining] > 0.0);
            CHECK(row[kRfdb] >= 1.0);
            CHECK(row[kRfdb] <= inst->fdb_slots);
            CHECK(row[kRbLeft] == r.next_state.rb_left);
          }
          last_rb = r.next_state.rb_left;
        }
        for (const auto& [slot, n] : steps_in_slot) CHECK(static_cast<std::size_t>(n) <= rows_at_open[slot] + 1);
        CHECK(env.return_so_far() == dropped);
        CHECK(env.simulator().metrics().failed_weight() == dropped);
      }
    }
  }

  TEST_CASE("greedy selection through the environment matches allocate") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto inst = share(make_episode(desk(4), seed));
      XrEnv env(inst);
      PfiScheduler a;
      const auto trace = run_policy_in_env(env, a);
      std::vector<std::vector<std::pair<FrameKey, int>>> env_grants(static_cast<std::size_t>(inst->num_slots));
      for (const auto& r : trace)
        if (r.slot_outcome) env_grants[static_cast<std::size_t>(r.slot_outcome->slot)] = r.slot_outcome->grants;

      Simulator sim(inst);
      PfiScheduler b;
      b.reset(*inst);
      while (!sim.done()) {
        const int t = sim.slot();
        const auto out = sim.advance_slot(b);
        CHECK(out.grants == env_grants[static_cast<std::size_t>(t)]);
      }
      CHECK(episode_reward_total(trace) == sim.metrics().total_quality());
    }
  }

  TEST_CASE("stepping a finished episode is an error") {
    XrEnv env(share(make_instance(1, 1, 1, 1, {100.0}, {})));
    env.step(EnvAction::default_action());
    CHECK(env.done());
    CHECK_THROWS_AS(env.step(EnvAction::default_action()), std::logic_error);
  }

  TEST_CASE("step trace CSV") {
    XrEnv env(share(make_instance(1, 2, 2, 2, {100.0}, {{0, 1, 0, 350.0, FrameKind::I}})));
    std::ostringstream os;
    StepTraceWriter w(os);
    while (!env.done()) {
      const auto s = env.state();
      const auto a = legal_actions(s).front();
      w.record(s, a, env.step(a));
    }
    CHECK(os.str() ==
          "step,slot,type,action_n,action_k,grant,reward\n"
          "0,0,2,0,1,2,0\n"
          "1,0,3,0,1,0,0\n"
          "2,1,1,0,1,2,0\n"
          "3,1,3,-1,-1,0,0\n");
  }
}
