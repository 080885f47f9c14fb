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

#include "xrsched/rlenv.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace xrsched {

std::vector<EnvAction> legal_actions(const StateMatrix& state) {
  if (state.empty()) return {EnvAction::default_action()};
  std::vector<EnvAction> out;
  out.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) out.push_back(EnvAction::select(i));
  return out;
}

XrEnv::XrEnv(std::shared_ptr<const EpisodeInstance> instance)
    : instance_(std::move(instance)), sim_(instance_) {
  reset();
}

const StateMatrix& XrEnv::reset() {
  sim_ = Simulator(instance_);
  step_ = 0;
  done_ = false;
  dropped_total_ = {};
  sim_.begin_slot();
  rebuild_state();
  return state_;
}

void XrEnv::rebuild_state() {
  state_.slot = sim_.slot();
  state_.step = step_;
  state_.rows.clear();
  state_.keys.clear();
  if (done_) {
    state_.rb_left = 0;
    return;
  }
  state_.rb_left = sim_.rb_left();
  const auto c = sim_.bits_per_rb();
  for (const auto& e : sim_.waiting()) {
    state_.rows.push_back({e.weight, e.remaining_bits, static_cast<double>(e.rfdb),
                           c[static_cast<std::size_t>(e.key.device)],
                           static_cast<double>(state_.rb_left)});
    state_.keys.push_back(e.key);
  }
}

StepResult XrEnv::step(EnvAction action) {
  if (done_) throw std::logic_error("XrEnv::step: episode finished, call reset()");
  const bool empty = state_.empty();
  if (empty && !action.is_default()) {
    throw std::invalid_argument("XrEnv::step: only the default action is legal in an empty state");
  }
  if (!empty && (action.is_default() || action.row >= state_.size())) {
    throw std::invalid_argument(fmt::format("XrEnv::step: illegal row {} for {} rows",
                                            action.is_default() ? -1 : static_cast<long>(action.row),
                                            state_.size()));
  }

  StepResult r;
  if (empty || state_.rb_left == 0) {
    auto outcome = sim_.end_slot();
    r.type = TransitionType::SlotAdvance;
    r.dropped_weight = outcome.dropped_weight;
    r.reward = 0.0 - outcome.dropped_weight.value();
    r.slot_outcome = std::move(outcome);
    if (sim_.done()) {
      done_ = true;
    } else {
      sim_.begin_slot();
    }
  } else {
    const auto& e = sim_.waiting()[action.row];
    const double c = sim_.bits_per_rb()[static_cast<std::size_t>(e.key.device)];
    const int g = std::min(rbs_to_finish(e.remaining_bits, c), sim_.rb_left());
    const bool completed = sim_.grant(action.row, g);
    r.grant = g;
    if (completed) {
      r.type = TransitionType::Success;
    } else {
      if (sim_.rb_left() != 0) throw std::logic_error("XrEnv::step: partial grant left budget");
      r.type = TransitionType::Exhaustion;
    }
  }
  ++step_;
  dropped_total_ += r.dropped_weight;
  rebuild_state();
  r.next_state = state_;
  r.done = done_;
  return r;
}

double episode_reward_total(const std::vector<StepResult>& trace) {
  WeightSum dropped;
  for (const auto& s : trace) dropped += s.dropped_weight;
  return 0.0 - dropped.value();
}

std::vector<StepResult> run_policy_in_env(XrEnv& env, PriorityPolicy& policy) {
  policy.reset(env.instance());
  env.reset();
  std::vector<StepResult> trace;
  std::vector<double> prios;
  std::vector<FrameKey> prio_keys;
  int prio_slot = -1;
  while (!env.done()) {
    const auto& s = env.state();
    EnvAction action = EnvAction::default_action();
    if (!s.empty()) {
      if (prio_slot != s.slot) {
        prios = policy.priorities(env.simulator().policy_input());
        prio_keys = s.keys;
        prio_slot = s.slot;
      }
      const auto waiting = env.simulator().waiting();
      std::size_t best = 0;
      double best_p = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto j = static_cast<std::size_t>(
            std::find(prio_keys.begin(), prio_keys.end(), s.keys[i]) - prio_keys.begin());
        const double p = prios[j];
        if (i == 0 || served_before(waiting[i], p, waiting[best], best_p)) {
          best = i;
          best_p = p;
        }
      }
      action = EnvAction::select(best);
    }
    auto r = env.step(action);
    if (r.slot_outcome) policy.observe(*r.slot_outcome);
    trace.push_back(std::move(r));
  }
  return trace;
}

StepTraceWriter::StepTraceWriter(std::ostream& os) : os_(&os) {
  *os_ << "step,slot,type,action_n,action_k,grant,reward\n";
}

void StepTraceWriter::record(const StateMatrix& before, EnvAction action, const StepResult& result) {
  int n = -1, k = -1;
  if (!action.is_default() && action.row < before.keys.size()) {
    n = before.keys[action.row].device;
    k = before.keys[action.row].index;
  }
  fmt::print(*os_, "{},{},{},{},{},{},{}\n", step_++, before.slot, static_cast<int>(result.type), n,
             k, result.grant, result.reward);
}

}  // namespace xrsched
