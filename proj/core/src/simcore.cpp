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

#include "xrsched/simcore.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace xrsched {

QueueEntry apply_grant(QueueEntry entry, int n_rb, double c) {
  if (n_rb < 0) throw std::invalid_argument("apply_grant: negative RB count");
  if (n_rb > 0) entry.remaining_bits -= n_rb * c;
  return entry;
}

int rbs_to_finish(double remaining_bits, double c) {
  if (remaining_bits <= 0.0) return 0;
  if (!(c > 0.0)) return INT_MAX;
  const double q = std::ceil(remaining_bits / c);
  if (q >= static_cast<double>(INT_MAX)) return INT_MAX;
  int m = static_cast<int>(q);
  // The rounded quotient may sit just below an integer boundary.
  while (remaining_bits - m * c > 0.0) ++m;
  return m;
}

bool served_before(const QueueEntry& a, double prio_a, const QueueEntry& b, double prio_b) {
  if (prio_a != prio_b) return prio_a > prio_b;
  if (a.arrival_slot != b.arrival_slot) return a.arrival_slot < b.arrival_slot;
  return a.key < b.key;
}

std::vector<std::size_t> priority_order(std::span<const QueueEntry> waiting,
                                        std::span<const double> priorities) {
  if (priorities.size() != waiting.size()) {
    throw std::invalid_argument("priority_order: one priority per waiting frame required");
  }
  for (double p : priorities) {
    if (std::isnan(p)) throw std::invalid_argument("priority_order: NaN priority");
  }
  std::vector<std::size_t> order(waiting.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return served_before(waiting[i], priorities[i], waiting[j], priorities[j]);
  });
  return order;
}

std::vector<int> allocate(std::span<const QueueEntry> waiting, std::span<const double> priorities,
                          int n_rb_total, std::span<const double> c_by_device) {
  if (n_rb_total < 0) throw std::invalid_argument("allocate: negative RB budget");
  std::vector<int> grants(waiting.size(), 0);
  int budget = n_rb_total;
  for (std::size_t i : priority_order(waiting, priorities)) {
    if (budget == 0) break;
    const auto& e = waiting[i];
    const int need = rbs_to_finish(e.remaining_bits, c_by_device[static_cast<std::size_t>(e.key.device)]);
    grants[i] = std::min(need, budget);
    budget -= grants[i];
  }
  return grants;
}

WeightSum EpisodeMetrics::failed_weight() const {
  WeightSum s;
  for (const auto& d : devices) s += d.failed_weight;
  return s;
}

double EpisodeMetrics::i_success_rate() const {
  int ok = 0, total = 0;
  for (const auto& d : devices) {
    ok += d.i_success;
    total += d.i_total;
  }
  return total == 0 ? 1.0 : static_cast<double>(ok) / total;
}

double EpisodeMetrics::p_success_rate() const {
  int ok = 0, total = 0;
  for (const auto& d : devices) {
    ok += d.p_success;
    total += d.p_total;
  }
  return total == 0 ? 1.0 : static_cast<double>(ok) / total;
}

Simulator::Simulator(std::shared_ptr<const EpisodeInstance> instance)
    : instance_(std::move(instance)) {
  if (!instance_) throw std::invalid_argument("Simulator: null instance");
  instance_->validate();
  status_.assign(instance_->frames.size(), FrameStatus::Pending);
  metrics_.devices.assign(static_cast<std::size_t>(instance_->num_devices), {});
  metrics_.rb_utilization.reserve(static_cast<std::size_t>(instance_->num_slots));
}

int Simulator::rb_total() const { return instance_->rb_per_slot[static_cast<std::size_t>(slot_)]; }

std::span<const double> Simulator::bits_per_rb() const {
  const auto n = static_cast<std::size_t>(instance_->num_devices);
  return std::span<const double>(instance_->bits_per_rb).subspan(static_cast<std::size_t>(slot_) * n, n);
}

std::span<const double> Simulator::gain() const {
  const auto n = static_cast<std::size_t>(instance_->num_devices);
  return std::span<const double>(instance_->gain).subspan(static_cast<std::size_t>(slot_) * n, n);
}

void Simulator::begin_slot() {
  if (done()) throw std::logic_error("Simulator::begin_slot: episode finished");
  if (in_slot_) throw std::logic_error("Simulator::begin_slot: slot already open");
  const auto& frames = instance_->frames;
  while (next_arrival_ < frames.size() && frames[next_arrival_].arrival_slot == slot_) {
    const auto& f = frames[next_arrival_];
    QueueEntry e;
    e.frame_id = next_arrival_;
    e.key = {f.device, f.index};
    e.arrival_slot = f.arrival_slot;
    e.kind = f.kind;
    e.weight = f.weight;
    e.size_bits = f.size_bits;
    e.remaining_bits = f.size_bits;
    e.rfdb = instance_->fdb_slots;
    waiting_.push_back(e);
    status_[next_arrival_] = FrameStatus::Queued;
    ++next_arrival_;
  }
  // Arrivals are appended in canonical order after older frames, so the
  // queue stays canonically sorted.
  rb_left_ = rb_total();
  current_ = SlotOutcome{};
  current_.slot = slot_;
  current_.rb_total = rb_left_;
  current_.served_bits.assign(static_cast<std::size_t>(instance_->num_devices), 0.0);
  in_slot_ = true;
}

PolicyInput Simulator::policy_input() const {
  if (!in_slot_) throw std::logic_error("Simulator::policy_input: no open slot");
  return {slot_, rb_left_, waiting_, bits_per_rb(), gain()};
}

void Simulator::resolve(const QueueEntry& e, bool success) {
  auto& d = metrics_.devices[static_cast<std::size_t>(e.key.device)];
  if (e.kind == FrameKind::I) {
    ++d.i_total;
    d.i_success += success ? 1 : 0;
  } else {
    ++d.p_total;
    d.p_success += success ? 1 : 0;
  }
  if (!success) d.failed_weight += WeightSum::of(e.weight);
  status_[e.frame_id] = success ? FrameStatus::Completed : FrameStatus::Dropped;
}

bool Simulator::grant(std::size_t i, int n_rb) {
  if (!in_slot_) throw std::logic_error("Simulator::grant: no open slot");
  if (i >= waiting_.size()) throw std::out_of_range("Simulator::grant: bad queue index");
  if (n_rb < 0 || n_rb > rb_left_) throw std::invalid_argument("Simulator::grant: grant exceeds budget");
  if (n_rb == 0) return false;
  auto& e = waiting_[i];
  const auto device = static_cast<std::size_t>(e.key.device);
  const double c = bits_per_rb()[device];
  current_.served_bits[device] += std::min(n_rb * c, e.remaining_bits);
  e = apply_grant(e, n_rb, c);
  rb_left_ -= n_rb;
  current_.rb_used += n_rb;
  current_.grants.emplace_back(e.key, n_rb);
  if (!is_success(e)) return false;
  current_.completed.push_back(e.key);
  resolve(e, true);
  waiting_.erase(waiting_.begin() + static_cast<std::ptrdiff_t>(i));
  return true;
}

SlotOutcome Simulator::end_slot() {
  if (!in_slot_) throw std::logic_error("Simulator::end_slot: no open slot");
  std::vector<QueueEntry> kept;
  kept.reserve(waiting_.size());
  for (auto& e : waiting_) {
    if (e.rfdb <= 1) {
      current_.dropped.push_back(e.key);
      current_.dropped_weight += WeightSum::of(e.weight);
      resolve(e, false);
    } else {
      --e.rfdb;
      kept.push_back(e);
    }
  }
  waiting_ = std::move(kept);
  metrics_.rb_utilization.push_back(
      current_.rb_total == 0 ? 0.0 : static_cast<double>(current_.rb_used) / current_.rb_total);
  in_slot_ = false;
  ++slot_;
  return std::move(current_);
}

SlotOutcome Simulator::advance_slot(PriorityPolicy& policy) {
  if (!in_slot_) begin_slot();
  const auto input = policy_input();
  const auto prios = policy.priorities(input);
  const auto grants = allocate(waiting_, prios, rb_left_, bits_per_rb());
  std::vector<std::pair<FrameKey, int>> plan;
  for (std::size_t i : priority_order(waiting_, prios)) {
    if (grants[i] > 0) plan.emplace_back(waiting_[i].key, grants[i]);
  }
  for (const auto& [key, n] : plan) {
    auto it = std::find_if(waiting_.begin(), waiting_.end(),
                           [&](const QueueEntry& e) { return e.key == key; });
    grant(static_cast<std::size_t>(it - waiting_.begin()), n);
  }
  auto outcome = end_slot();
  policy.observe(outcome);
  return outcome;
}

EpisodeMetrics run_episode(std::shared_ptr<const EpisodeInstance> instance,
                           PriorityPolicy& policy) {
  Simulator sim(std::move(instance));
  policy.reset(sim.instance());
  while (!sim.done()) sim.advance_slot(policy);
  return sim.metrics();
}

std::vector<WeightSum> failed_weight_from_ledger(const EpisodeInstance& instance,
                                                 std::span<const FrameStatus> ledger) {
  if (ledger.size() != instance.frames.size()) {
    throw std::invalid_argument("failed_weight_from_ledger: ledger size mismatch");
  }
  std::vector<WeightSum> out(static_cast<std::size_t>(instance.num_devices));
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    if (ledger[i] == FrameStatus::Dropped) {
      const auto& f = instance.frames[i];
      out[static_cast<std::size_t>(f.device)] += WeightSum::of(f.weight);
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& os, const EpisodeMetrics& metrics) {
  os << "device,Q_n,i_success,i_total,p_success,p_total\n";
  for (std::size_t n = 0; n < metrics.devices.size(); ++n) {
    const auto& d = metrics.devices[n];
    fmt::print(os, "{},{},{},{},{},{}\n", n, d.quality(), d.i_success, d.i_total, d.p_success,
               d.p_total);
  }
}

void write_slot_trace_csv(std::ostream& os, std::span<const SlotOutcome> outcomes) {
  os << "slot,event,device,k,rbs\n";
  for (const auto& o : outcomes) {
    for (const auto& [key, n] : o.grants) {
      fmt::print(os, "{},grant,{},{},{}\n", o.slot, key.device, key.index, n);
    }
    for (const auto& key : o.completed) fmt::print(os, "{},complete,{},{},0\n", o.slot, key.device, key.index);
    for (const auto& key : o.dropped) fmt::print(os, "{},drop,{},{},0\n", o.slot, key.device, key.index);
  }
}

}  // namespace xrsched
