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

#include "xrsched/schedulers.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace xrsched {

double update_history(double average, double served_bits, double beta, double floor) {
  if (served_bits < 0.0) throw std::invalid_argument("update_history: negative served bits");
  return std::max((1.0 - beta) * average + beta * served_bits, floor);
}

RateHistory update_history(RateHistory history, std::span<const double> served_bits) {
  if (served_bits.size() != history.average.size()) {
    throw std::invalid_argument("update_history: device count mismatch");
  }
  for (std::size_t n = 0; n < served_bits.size(); ++n) {
    history.average[n] = update_history(history.average[n], served_bits[n], history.beta, history.floor);
  }
  return history;
}

std::vector<double> pf_priority(const PolicyInput& input, const RateHistory& history) {
  std::vector<double> out;
  out.reserve(input.frames.size());
  for (const auto& f : input.frames) {
    const auto n = static_cast<std::size_t>(f.key.device);
    out.push_back(input.bits_per_rb[n] / history.average.at(n));
  }
  return out;
}

std::vector<double> pfi_priority(const PolicyInput& input, const RateHistory& history) {
  auto out = pf_priority(input, history);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& f = input.frames[i];
    if (!(f.remaining_bits > 0.0)) {
      throw std::invalid_argument(fmt::format(
          "pfi_priority: frame ({},{}) has nothing left to send", f.key.device, f.key.index));
    }
    out[i] *= f.size_bits / f.remaining_bits;
  }
  return out;
}

void PfScheduler::reset(const EpisodeInstance& instance) {
  history_ = RateHistory{};
  history_.beta = beta_;
  history_.floor = floor_;
  history_.average.assign(static_cast<std::size_t>(instance.num_devices), 0.0);
  for (int t = 0; t < instance.num_slots; ++t) {
    for (int n = 0; n < instance.num_devices; ++n) {
      history_.average[static_cast<std::size_t>(n)] += instance.c(t, n);
    }
  }
  for (auto& a : history_.average) a = std::max(a / instance.num_slots, floor_);
}

std::vector<double> PfScheduler::priorities(const PolicyInput& input) {
  return pf_priority(input, history_);
}

void PfScheduler::observe(const SlotOutcome& outcome) {
  history_ = update_history(std::move(history_), outcome.served_bits);
}

std::vector<double> PfiScheduler::priorities(const PolicyInput& input) {
  return pfi_priority(input, history_);
}

std::vector<double> ScriptedPolicy::priorities(const PolicyInput& input) {
  std::vector<double> out(input.frames.size(), 0.0);
  auto it = order_.find(input.slot);
  if (it == order_.end()) return out;
  const auto& order = it->second;
  for (std::size_t i = 0; i < input.frames.size(); ++i) {
    auto pos = std::find(order.begin(), order.end(), input.frames[i].key);
    if (pos != order.end()) out[i] = static_cast<double>(order.end() - pos);
  }
  return out;
}

namespace {

struct MemoKey {
  int slot;
  std::vector<std::pair<std::size_t, double>> queue;
  auto operator<=>(const MemoKey&) const = default;
};

struct MemoValue {
  WeightSum failed;
  std::vector<FrameKey> order;
};

class OracleSearch {
 public:
  WeightSum best(Simulator sim, std::map<int, std::vector<FrameKey>>* schedule) {
    if (sim.done()) return {};
    sim.begin_slot();
    MemoKey key{sim.slot(), {}};
    for (const auto& e : sim.waiting()) key.queue.emplace_back(e.frame_id, e.remaining_bits);

    auto hit = memo_.find(key);
    if (hit == memo_.end()) hit = memo_.emplace(key, solve(sim)).first;
    const MemoValue& v = hit->second;
    if (schedule != nullptr) {
      // Re-walk the chosen branch to record the schedule.
      if (!v.order.empty()) (*schedule)[sim.slot()] = v.order;
      Simulator next = sim;
      apply_order(next, v.order);
      next.end_slot();
      best(std::move(next), schedule);
    }
    return v.failed;
  }

 private:
  std::map<MemoKey, MemoValue> memo_;

  static std::vector<double> priorities_for(const Simulator& sim, const std::vector<FrameKey>& order) {
    std::vector<double> p(sim.waiting().size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto pos = std::find(order.begin(), order.end(), sim.waiting()[i].key);
      p[i] = static_cast<double>(order.end() - pos);
    }
    return p;
  }

  static std::vector<int> grants_for(const Simulator& sim, const std::vector<FrameKey>& order) {
    return allocate(sim.waiting(), priorities_for(sim, order), sim.rb_left(), sim.bits_per_rb());
  }

  static void apply_order(Simulator& sim, const std::vector<FrameKey>& order) {
    const auto grants = grants_for(sim, order);
    std::vector<std::pair<FrameKey, int>> plan;
    for (const auto& k : order) {
      for (std::size_t i = 0; i < sim.waiting().size(); ++i) {
        if (sim.waiting()[i].key == k && grants[i] > 0) plan.emplace_back(k, grants[i]);
      }
    }
    for (const auto& [k, n] : plan) {
      for (std::size_t i = 0; i < sim.waiting().size(); ++i) {
        if (sim.waiting()[i].key == k) {
          sim.grant(i, n);
          break;
        }
      }
    }
  }

  // Enumerates orderings up to the point where the budget runs out; the
  // tail order cannot change any grant.
  void enumerate(const Simulator& sim, std::vector<FrameKey>& prefix, std::vector<bool>& used,
                 int budget, std::vector<std::vector<FrameKey>>& out) {
    const auto w = sim.waiting();
    if (budget == 0 || prefix.size() == w.size()) {
      auto full = prefix;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (!used[i]) full.push_back(w[i].key);
      out.push_back(std::move(full));
      return;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (used[i]) continue;
      const double c = sim.bits_per_rb()[static_cast<std::size_t>(w[i].key.device)];
      const int g = std::min(rbs_to_finish(w[i].remaining_bits, c), budget);
      used[i] = true;
      prefix.push_back(w[i].key);
      enumerate(sim, prefix, used, budget - g, out);
      prefix.pop_back();
      used[i] = false;
    }
  }

  MemoValue solve(const Simulator& sim) {
    std::vector<std::vector<FrameKey>> orders;
    std::vector<FrameKey> prefix;
    std::vector<bool> used(sim.waiting().size(), false);
    enumerate(sim, prefix, used, sim.rb_left(), orders);

    std::set<std::vector<int>> seen;
    MemoValue best{WeightSum::from_units(INT64_MAX), {}};
    for (const auto& order : orders) {
      if (!seen.insert(grants_for(sim, order)).second) continue;
      Simulator next = sim;
      apply_order(next, order);
      const WeightSum dropped = next.end_slot().dropped_weight;
      const WeightSum total = dropped + best_future(std::move(next));
      if (total < best.failed) best = {total, order};
    }
    return best;
  }

  WeightSum best_future(Simulator next) { return best(std::move(next), nullptr); }
};

}  // namespace

OracleResult oracle_best_quality(const EpisodeInstance& instance, const OracleLimits& limits) {
  instance.validate();
  auto reject = [](const std::string& what) {
    throw std::invalid_argument("oracle: instance too large to enumerate: " + what);
  };
  if (instance.num_devices > limits.max_devices) reject("too many devices");
  if (instance.num_slots > limits.max_slots) reject("too many slots");
  for (int rb : instance.rb_per_slot)
    if (rb > limits.max_rb_per_slot) reject("too many RBs per slot");
  std::map<int, int> per_device;
  for (const auto& f : instance.frames) {
    if (++per_device[f.device] > limits.max_frames_per_device) reject("too many frames per device");
  }

  Simulator sim(instance);
  OracleSearch search;
  OracleResult result;
  result.failed_weight = search.best(sim, &result.schedule);
  result.quality = 0.0 - result.failed_weight.value();
  return result;
}

}  // namespace xrsched
