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

#include <map>
#include <span>
#include <vector>

#include "xrsched/episode.hpp"
#include "xrsched/simcore.hpp"

namespace xrsched {

/// Exponential moving average of bits served per slot, one per device.
struct RateHistory {
  std::vector<double> average;
  double beta = 0.01;
  double floor = 1.0;
};

/// (1 - beta) * average + beta * served_bits, floored.
double update_history(double average, double served_bits, double beta, double floor);
RateHistory update_history(RateHistory history, std::span<const double> served_bits);

/// Proportional fair: every frame of device n gets c_n / avg_n.
std::vector<double> pf_priority(const PolicyInput& input, const RateHistory& history);

/// PF scaled by size / remaining, so partially sent frames move up.
std::vector<double> pfi_priority(const PolicyInput& input, const RateHistory& history);

class PfScheduler : public PriorityPolicy {
 public:
  explicit PfScheduler(double beta = 0.01, double floor = 1.0) : beta_(beta), floor_(floor) {}

  /// Seeds each device's average with its episode-mean bits per RB.
  void reset(const EpisodeInstance& instance) override;
  std::vector<double> priorities(const PolicyInput& input) override;
  void observe(const SlotOutcome& outcome) override;

  const RateHistory& history() const { return history_; }

 protected:
  double beta_;
  double floor_;
  RateHistory history_;
};

class PfiScheduler : public PfScheduler {
 public:
  using PfScheduler::PfScheduler;
  std::vector<double> priorities(const PolicyInput& input) override;
};

/// Replays a fixed frame order per slot; frames not listed for a slot rank
/// below the listed ones.
class ScriptedPolicy : public PriorityPolicy {
 public:
  explicit ScriptedPolicy(std::map<int, std::vector<FrameKey>> order_by_slot)
      : order_(std::move(order_by_slot)) {}
  std::vector<double> priorities(const PolicyInput& input) override;

 private:
  std::map<int, std::vector<FrameKey>> order_;
};

// Exhaustive search for tiny instances.

struct OracleLimits {
  int max_devices = 3;
  int max_frames_per_device = 2;
  int max_slots = 8;
  int max_rb_per_slot = 6;
};

struct OracleResult {
  WeightSum failed_weight;
  /// Best achievable sum of Q_n.
  double quality = 0.0;
  /// Service order used in each slot (only slots with waiting frames).
  std::map<int, std::vector<FrameKey>> schedule;
};

/// Maximum total quality over every per-slot frame ordering, with grants
/// following the greedy allocation rule. Throws std::invalid_argument when
/// the instance exceeds `limits`.
OracleResult oracle_best_quality(const EpisodeInstance& instance, const OracleLimits& limits = {});

}  // namespace xrsched
