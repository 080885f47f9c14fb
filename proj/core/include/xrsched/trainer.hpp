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

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "xrsched/qnetwork.hpp"
#include "xrsched/rlenv.hpp"
#include "xrsched/rng.hpp"
#include "xrsched/scenario.hpp"

namespace xrsched {

struct TrainConfig {
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_min = 0.05;
  double epsilon_decay = 0.95;  ///< per episode
  std::size_t replay_capacity = 100'000;
  std::size_t batch_size = 64;
  long sync_period = 500;  ///< gradient updates between hard target copies
  std::size_t warmup = 1000;
  double learning_rate = 1e-3;
  int episodes = 50;
  std::vector<int> device_curriculum = {2, 4, 6, 8};
  std::size_t hidden = 32;
  /// One gradient update per this many stored transitions.
  int train_every = 1;
  double divergence_threshold = 1e6;
  /// Return the network with the best test-scenario score seen after any
  /// episode instead of the last one.
  bool keep_best = true;

  void validate() const;
};

/// max(epsilon_min, epsilon_start * epsilon_decay^episode)
double epsilon_at(const TrainConfig& cfg, int episode);

struct Transition {
  StateMatrix state;
  EnvAction action;
  double reward = 0.0;
  StateMatrix next_state;
  bool next_is_default = false;
  TransitionType type = TransitionType::SlotAdvance;
};

/// FIFO experience store with transitions grouped by row count.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return storage_.size(); }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  std::size_t bucket_size(std::size_t rows) const;

  /// Draws one stored transition uniformly, then `batch` transitions (with
  /// replacement) from those with the same row count. Empty when that
  /// bucket holds fewer than `batch` transitions.
  std::vector<const Transition*> sample(Rng& rng, std::size_t batch) const;

 private:
  std::vector<Transition> storage_;
  std::size_t size_ = 0;
  std::uint64_t next_seq_ = 0;
  std::map<std::size_t, std::vector<std::uint64_t>> buckets_;
  std::map<std::size_t, std::size_t> bucket_head_;

  const Transition& by_seq(std::uint64_t seq) const { return storage_[seq % storage_.size()]; }
};

/// Epsilon-greedy: uniform over legal rows with probability epsilon, else
/// argmax Q with ties to the lowest row. Empty states give the default action.
EnvAction act(const StateMatrix& state, const QNetwork& net, const FeatureScaler& scaler,
              double epsilon, Rng& rng);

/// One Adam update on the TD loss with targets from `target`. Returns the
/// pre-update loss, or nothing for an empty batch.
std::optional<double> train_step(QNetwork& net, const QNetwork& target, Adam& optimizer,
                                 std::span<const Transition* const> batch,
                                 const FeatureScaler& scaler, double gamma);

void sync_target(const QNetwork& net, QNetwork& target);

/// Anything with the XrEnv step interface.
template <class Env>
concept DecisionEnvironment = requires(Env& env, const Env& cenv, EnvAction a) {
  { env.reset() } -> std::convertible_to<const StateMatrix&>;
  { cenv.state() } -> std::convertible_to<const StateMatrix&>;
  { cenv.done() } -> std::convertible_to<bool>;
  { env.step(a) } -> std::same_as<StepResult>;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpisodeStats {
  double total_reward = 0.0;
  WeightSum dropped;
  long steps = 0;
  long updates = 0;
  double loss_mean = 0.0;
};

/// Online/target network pair, optimizer and replay buffer.
class DqnAgent {
 public:
  DqnAgent(const TrainConfig& cfg, FeatureScaler scaler, std::uint64_t seed);

  /// Rolls out one episode. With `learn`, transitions from non-empty states
  /// are stored and gradient updates run after warmup.
  template <DecisionEnvironment Env>
  EpisodeStats run_episode(Env& env, double epsilon, bool learn);

  QNetwork& online() { return online_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  FeatureScaler& scaler() { return scaler_; }
  const FeatureScaler& scaler() const { return scaler_; }
  const ReplayBuffer& replay() const { return replay_; }
  long updates() const { return updates_; }

 private:
  TrainConfig cfg_;
  FeatureScaler scaler_;
  QNetwork online_;
  QNetwork target_;
  Adam optimizer_;
  ReplayBuffer replay_;
  Rng rng_;
  long updates_ = 0;
  long stored_ = 0;

  std::optional<double> learn_step();
};

template <DecisionEnvironment Env>
EpisodeStats DqnAgent::run_episode(Env& env, double epsilon, bool learn) {
  EpisodeStats stats;
  double loss_sum = 0.0;
  env.reset();
  while (!env.done()) {
    StateMatrix s = env.state();
    if (learn) scaler_.observe(s);
    const EnvAction a = act(s, online_, scaler_, epsilon, rng_);
    StepResult r = env.step(a);
    ++stats.steps;
    stats.dropped += r.dropped_weight;
    stats.total_reward += r.reward;
    if (learn && !s.empty()) {
      const bool next_default = (r.done && !r.truncated) || r.next_state.empty();
      Transition t{std::move(s), a, r.reward, std::move(r.next_state), next_default, r.type};
      t.state.keys.clear();
      t.next_state.keys.clear();
      replay_.push(std::move(t));
      ++stored_;
      if (replay_.size() >= cfg_.warmup && stored_ % cfg_.train_every == 0) {
        if (auto loss = learn_step()) {
          loss_sum += *loss;
          ++stats.updates;
        }
      }
    }
  }
  stats.loss_mean = stats.updates > 0 ? loss_sum / static_cast<double>(stats.updates) : 0.0;
  return stats;
}

/// Greedy rollout through a fresh environment; returns the simulator metrics.
EpisodeMetrics run_greedy_episode(const QNetwork& net, const FeatureScaler& scaler,
                                  std::shared_ptr<const EpisodeInstance> instance,
                                  StepTraceWriter* trace = nullptr);

struct CurvePoint {
  int episode = 0;
  double epsilon = 0.0;
  double train_return = 0.0;
  double test_return = 0.0;
  double loss_mean = 0.0;
};

struct TrainResult {
  QNetwork net;
  FeatureScaler scaler;
  std::vector<CurvePoint> curve;
};

/// Trains on episodes whose device count is drawn from the curriculum and
/// whose arrival phasing follows `base.phasing`; after every episode the
/// greedy policy is scored on `test_instance`. Without a test instance the
/// last network is returned.
TrainResult train(const TrainConfig& cfg, const ScenarioSpec& base,
                  std::shared_ptr<const EpisodeInstance> test_instance, std::uint64_t seed,
                  const std::function<void(const CurvePoint&)>& progress = {});

/// CSV `episode,epsilon,train_return,test_return,loss_mean`.
void write_learning_curve_csv(std::ostream& os, std::span<const CurvePoint> curve);

}  // namespace xrsched
