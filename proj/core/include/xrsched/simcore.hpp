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

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "xrsched/episode.hpp"

namespace xrsched {

/// A frame waiting at the base station.
struct QueueEntry {
  std::size_t frame_id = 0;  ///< index into EpisodeInstance::frames
  FrameKey key;
  int arrival_slot = 0;
  FrameKind kind = FrameKind::I;
  double weight = 1.0;
  double size_bits = 0.0;
  double remaining_bits = 0.0;
  int rfdb = 0;  ///< remaining delay budget in slots, 1..fdb while queued
};

/// Remaining bits after `n_rb` blocks of `c` bits. Non-positive means done.
QueueEntry apply_grant(QueueEntry entry, int n_rb, double c);

/// Delivery indicator: 1 iff nothing is left to send.
inline bool is_success(const QueueEntry& entry) { return entry.remaining_bits <= 0.0; }

/// Smallest m with m*c >= remaining (as evaluated in floating point).
/// Returns INT_MAX when c is zero.
int rbs_to_finish(double remaining_bits, double c);

/// True when entry a is served before entry b: higher priority first,
/// ties broken by earlier arrival, smaller device, smaller k.
bool served_before(const QueueEntry& a, double prio_a, const QueueEntry& b, double prio_b);

/// Indices of `waiting` in service order.
std::vector<std::size_t> priority_order(std::span<const QueueEntry> waiting,
                                        std::span<const double> priorities);

/// Greedy RB allocation. Frames are visited in service order; each receives
/// min(rbs_to_finish, budget left). Result is aligned with `waiting`.
std::vector<int> allocate(std::span<const QueueEntry> waiting, std::span<const double> priorities,
                          int n_rb_total, std::span<const double> c_by_device);

/// Everything a priority policy may look at in one slot.
struct PolicyInput {
  int slot = 0;
  int rb_budget = 0;
  std::span<const QueueEntry> frames;
  std::span<const double> bits_per_rb;  ///< per device
  std::span<const double> gain;         ///< per device
};

struct SlotOutcome {
  int slot = 0;
  /// Non-zero grants in the order they were made.
  std::vector<std::pair<FrameKey, int>> grants;
  std::vector<FrameKey> completed;
  std::vector<FrameKey> dropped;
  WeightSum dropped_weight;
  std::vector<double> served_bits;  ///< per device
  int rb_used = 0;
  int rb_total = 0;
};

/// Frame priority policy. One instance per episode run.
class PriorityPolicy {
 public:
  virtual ~PriorityPolicy() = default;
  virtual void reset(const EpisodeInstance& /*instance*/) {}
  /// One priority per entry of input.frames. Larger is served first.
  virtual std::vector<double> priorities(const PolicyInput& input) = 0;
  virtual void observe(const SlotOutcome& /*outcome*/) {}
};

enum class FrameStatus { Pending, Queued, Completed, Dropped };

struct DeviceMetrics {
  WeightSum failed_weight;
  int i_success = 0;
  int i_total = 0;
  int p_success = 0;
  int p_total = 0;

  /// Q_n: minus the weight of frames that missed their deadline.
  double quality() const { return 0.0 - failed_weight.value(); }
};

struct EpisodeMetrics {
  std::vector<DeviceMetrics> devices;
  std::vector<double> rb_utilization;  ///< per slot, used / available

  WeightSum failed_weight() const;
  double total_quality() const { return 0.0 - failed_weight().value(); }
  /// Success ratios over all devices; 1.0 when no frame of that kind exists.
  double i_success_rate() const;
  double p_success_rate() const;
};

/// Slot-by-slot frame queue simulation.
///
/// A slot is opened with begin_slot() (arrivals admitted), served with
/// grant() calls, and closed with end_slot() (delay budgets decremented,
/// expired frames dropped). advance_slot() does all three using a policy.
class Simulator {
 public:
  explicit Simulator(std::shared_ptr<const EpisodeInstance> instance);
  explicit Simulator(EpisodeInstance instance)
      : Simulator(std::make_shared<const EpisodeInstance>(std::move(instance))) {}

  const EpisodeInstance& instance() const { return *instance_; }
  int slot() const { return slot_; }
  bool done() const { return slot_ >= instance_->num_slots; }
  bool in_slot() const { return in_slot_; }

  void begin_slot();
  std::span<const QueueEntry> waiting() const { return waiting_; }
  int rb_left() const { return rb_left_; }
  int rb_total() const;
  std::span<const double> bits_per_rb() const;
  std::span<const double> gain() const;
  PolicyInput policy_input() const;

  /// Grants n_rb blocks to waiting()[i]. A completed frame leaves the queue
  /// immediately. Returns true on completion.
  bool grant(std::size_t i, int n_rb);

  SlotOutcome end_slot();

  SlotOutcome advance_slot(PriorityPolicy& policy);

  const EpisodeMetrics& metrics() const { return metrics_; }
  std::span<const FrameStatus> ledger() const { return status_; }

 private:
  std::shared_ptr<const EpisodeInstance> instance_;
  int slot_ = 0;
  bool in_slot_ = false;
  std::size_t next_arrival_ = 0;
  std::vector<QueueEntry> waiting_;
  std::vector<FrameStatus> status_;
  int rb_left_ = 0;
  SlotOutcome current_;
  EpisodeMetrics metrics_;

  void resolve(const QueueEntry& entry, bool success);
};

/// Resets `policy` and runs the whole episode.
EpisodeMetrics run_episode(std::shared_ptr<const EpisodeInstance> instance,
                           PriorityPolicy& policy);

/// Per-device failed weight recounted from the frame ledger alone.
std::vector<WeightSum> failed_weight_from_ledger(const EpisodeInstance& instance,
                                                 std::span<const FrameStatus> ledger);

/// CSV `device,Q_n,i_success,i_total,p_success,p_total`.
void write_metrics_csv(std::ostream& os, const EpisodeMetrics& metrics);

/// CSV `slot,event,device,k,rbs`: grants, completions and drops per slot.
void write_slot_trace_csv(std::ostream& os, std::span<const SlotOutcome> outcomes);

}  // namespace xrsched
