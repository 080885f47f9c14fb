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

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "xrsched/episode.hpp"
#include "xrsched/simcore.hpp"

namespace xrsched {

/// Row features: (weight, remaining bits, remaining delay budget,
/// bits per RB, RBs left in the slot).
using StateRow = std::array<double, 5>;

enum StateColumn : std::size_t { kWeight = 0, kRemaining = 1, kRfdb = 2, kBitsPerRb = 3, kRbLeft = 4 };

/// One row per waiting frame, in canonical queue order.
struct StateMatrix {
  int slot = 0;
  long step = 0;
  int rb_left = 0;
  std::vector<StateRow> rows;
  std::vector<FrameKey> keys;

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
};

/// Selects one row, or the default action when there is nothing to pick.
struct EnvAction {
  static constexpr std::size_t kDefault = std::numeric_limits<std::size_t>::max();
  std::size_t row = kDefault;

  static EnvAction default_action() { return {}; }
  static EnvAction select(std::size_t r) { return {r}; }
  bool is_default() const { return row == kDefault; }
  friend bool operator==(EnvAction, EnvAction) = default;
};

enum class TransitionType { Success = 1, Exhaustion = 2, SlotAdvance = 3 };

struct StepResult {
  StateMatrix next_state;
  double reward = 0.0;
  /// Exact magnitude of the reward (weight of the frames dropped).
  WeightSum dropped_weight;
  TransitionType type = TransitionType::SlotAdvance;
  int grant = 0;
  bool done = false;
  /// Episode cut by a time limit rather than reaching a terminal state;
  /// learners keep bootstrapping from next_state.
  bool truncated = false;
  /// Set on slot advances.
  std::optional<SlotOutcome> slot_outcome;
};

/// Legal actions: every row, or only the default action for an empty state.
std::vector<EnvAction> legal_actions(const StateMatrix& state);

/// Multi-decision-per-slot MDP over the simulator.
///
/// Each step picks one waiting frame and grants it min(ceil(r/c), RBs left).
/// A completed frame (type 1) leaves the state; a grant that empties the
/// budget without completing (type 2) leaves the frame. Stepping a state with
/// no RBs left or no rows (type 3) closes the slot: delay budgets tick down,
/// expired frames are dropped into the reward, and the next slot opens.
class XrEnv {
 public:
  explicit XrEnv(std::shared_ptr<const EpisodeInstance> instance);

  /// Restarts the episode at slot 0 with slot-0 arrivals admitted.
  const StateMatrix& reset();
  const StateMatrix& state() const { return state_; }
  bool done() const { return done_; }

  StepResult step(EnvAction action);

  const Simulator& simulator() const { return sim_; }
  const EpisodeInstance& instance() const { return sim_.instance(); }
  /// Sum of step rewards since reset, exact.
  WeightSum return_so_far() const { return dropped_total_; }

 private:
  std::shared_ptr<const EpisodeInstance> instance_;
  Simulator sim_;
  StateMatrix state_;
  long step_ = 0;
  bool done_ = false;
  WeightSum dropped_total_;

  void rebuild_state();
};

/// Undiscounted return of a finished trajectory.
double episode_reward_total(const std::vector<StepResult>& trace);

/// Drives the environment with a fixed-priority policy: at each step the
/// highest-priority waiting frame is selected. Priorities are computed once
/// per slot. Returns the step trace.
std::vector<StepResult> run_policy_in_env(XrEnv& env, PriorityPolicy& policy);

/// CSV `step,slot,type,action_n,action_k,grant,reward`.
class StepTraceWriter {
 public:
  explicit StepTraceWriter(std::ostream& os);
  void record(const StateMatrix& before, EnvAction action, const StepResult& result);

 private:
  std::ostream* os_;
  long step_ = 0;
};

}  // namespace xrsched
