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

#include "xrsched/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace xrsched {

void TrainConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("train: ") + what); };
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must be in (0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must be in [0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= 1.0)) fail("epsilon_min must be in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) fail("epsilon_decay must be in (0, 1]");
  if (replay_capacity < 1) fail("replay_capacity must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (sync_period < 1) fail("sync_period must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (episodes < 0) fail("episodes must be >= 0");
  if (device_curriculum.empty()) fail("device curriculum must not be empty");
  for (int d : device_curriculum)
    if (d < 1) fail("curriculum device counts must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (train_every < 1) fail("train_every must be >= 1");
  if (!(divergence_threshold > 0.0)) fail("divergence_threshold must be > 0");
}

double epsilon_at(const TrainConfig& cfg, int episode) {
  return std::max(cfg.epsilon_min, cfg.epsilon_start * std::pow(cfg.epsilon_decay, episode));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  storage_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  const std::size_t cap = storage_.size();
  if (size_ == cap) {
    const std::uint64_t oldest = next_seq_ - cap;
    const std::size_t rows = by_seq(oldest).state.size();
    auto& bucket = buckets_[rows];
    auto& head = bucket_head_[rows];
    if (bucket[head] != oldest) throw std::logic_error("ReplayBuffer: bucket order corrupted");
    ++head;
    if (head > 1024 && head * 2 > bucket.size()) {
      bucket.erase(bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
    --size_;
  }
  const std::size_t rows = t.state.size();
  storage_[next_seq_ % cap] = std::move(t);
  buckets_[rows].push_back(next_seq_);
  bucket_head_.try_emplace(rows, 0);
  ++next_seq_;
  ++size_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  return by_seq(next_seq_ - size_ + i);
}

std::size_t ReplayBuffer::bucket_size(std::size_t rows) const {
  auto it = buckets_.find(rows);
  if (it == buckets_.end()) return 0;
  return it->second.size() - bucket_head_.at(rows);
}

std::vector<const Transition*> ReplayBuffer::sample(Rng& rng, std::size_t batch) const {
  if (size_ == 0 || batch == 0) return {};
  const std::size_t rows = at(rng.index(size_)).state.size();
  const auto& bucket = buckets_.at(rows);
  const std::size_t head = bucket_head_.at(rows);
  const std::size_t live = bucket.size() - head;
  if (live < batch) return {};
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(&by_seq(bucket[head + rng.index(live)]));
  return out;
}

EnvAction act(const StateMatrix& state, const QNetwork& net, const FeatureScaler& scaler,
              double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("act: epsilon must be in [0,1]");
  if (state.empty()) return EnvAction::default_action();
  if (epsilon > 0.0 && rng.uniform() < epsilon) return EnvAction::select(rng.index(state.size()));
  const auto out = net.forward(scaler.normalize(state.rows));
  std::size_t best = 0;
  for (std::size_t j = 1; j < out.q.size(); ++j)
    if (out.q[j] > out.q[best]) best = j;
  return EnvAction::select(best);
}

std::optional<double> train_step(QNetwork& net, const QNetwork& target, Adam& optimizer,
                                 std::span<const Transition* const> batch,
                                 const FeatureScaler& scaler, double gamma) {
  if (batch.empty()) return std::nullopt;
  std::vector<std::vector<StateRow>> inputs;
  std::vector<LossSample> samples;
  inputs.reserve(batch.size());
  samples.reserve(batch.size());
  for (const Transition* t : batch) {
    const double y = td_target(t->reward, t->next_state, t->next_is_default, target, scaler, gamma);
    inputs.push_back(scaler.normalize(t->state.rows));
    samples.push_back({inputs.back(), t->action.row, y});
  }
  net.zero_grad();
  const double loss = td_loss_and_gradient(net, samples);
  optimizer.step(net.tensors());
  return loss;
}

void sync_target(const QNetwork& net, QNetwork& target) { target.copy_parameters_from(net); }

DqnAgent::DqnAgent(const TrainConfig& cfg, FeatureScaler scaler, std::uint64_t seed)
    : cfg_(cfg),
      scaler_(scaler),
      online_(cfg.hidden),
      target_(cfg.hidden),
      optimizer_(cfg.learning_rate),
      replay_(cfg.replay_capacity),
      rng_(derive_seed(seed, {1})) {
  cfg_.validate();
  online_.initialize(derive_seed(seed, {0}));
  sync_target(online_, target_);
}

std::optional<double> DqnAgent::learn_step() {
  const auto batch = replay_.sample(rng_, cfg_.batch_size);
  if (batch.empty()) return std::nullopt;
  const auto loss = train_step(online_, target_, optimizer_, batch, scaler_, cfg_.gamma);
  if (!loss) return std::nullopt;
  if (!std::isfinite(*loss) || *loss > cfg_.divergence_threshold) {
    throw DivergenceError(fmt::format("training diverged: loss {} after {} updates", *loss, updates_));
  }
  ++updates_;
  if (updates_ % cfg_.sync_period == 0) sync_target(online_, target_);
  return loss;
}

EpisodeMetrics run_greedy_episode(const QNetwork& net, const FeatureScaler& scaler,
                                  std::shared_ptr<const EpisodeInstance> instance,
                                  StepTraceWriter* trace) {
  XrEnv env(std::move(instance));
  Rng unused(0);
  while (!env.done()) {
    const EnvAction a = act(env.state(), net, scaler, 0.0, unused);
    if (trace != nullptr) {
      StateMatrix before = env.state();
      const auto r = env.step(a);
      trace->record(before, a, r);
    } else {
      env.step(a);
    }
  }
  return env.simulator().metrics();
}

TrainResult train(const TrainConfig& cfg, const ScenarioSpec& base,
                  std::shared_ptr<const EpisodeInstance> test_instance, std::uint64_t seed,
                  const std::function<void(const CurvePoint&)>& progress) {
  cfg.validate();
  DqnAgent agent(cfg, FeatureScaler(base.traffic.mean_frame_bits, base.fdb_slots, base.rb_per_slot),
                 derive_seed(seed, {0}));
  Rng curriculum(derive_seed(seed, {1}));
  std::vector<CurvePoint> curve;
  std::optional<QNetwork> best;
  FeatureScaler best_scaler;
  double best_return = -INFINITY;
  for (int e = 0; e < cfg.episodes; ++e) {
    ScenarioSpec spec = base;
    spec.devices = cfg.device_curriculum[curriculum.index(cfg.device_curriculum.size())];
    auto instance = std::make_shared<const EpisodeInstance>(
        make_episode(spec, derive_seed(seed, {2, static_cast<std::uint64_t>(e)})));
    XrEnv env(instance);
    const double eps = epsilon_at(cfg, e);
    const auto stats = agent.run_episode(env, eps, true);

    CurvePoint p;
    p.episode = e;
    p.epsilon = eps;
    p.train_return = 0.0 - stats.dropped.value();
    p.loss_mean = stats.loss_mean;
    if (test_instance) {
      p.test_return = run_greedy_episode(agent.online(), agent.scaler(), test_instance).total_quality();
      if (cfg.keep_best && p.test_return > best_return) {
        best_return = p.test_return;
        best = agent.online();
        best_scaler = agent.scaler();
      }
    }
    curve.push_back(p);
    if (progress) progress(p);
  }
  FeatureScaler scaler = best ? best_scaler : agent.scaler();
  scaler.freeze();
  return {best ? *best : agent.online(), scaler, std::move(curve)};
}

void write_learning_curve_csv(std::ostream& os, std::span<const CurvePoint> curve) {
  os << "episode,epsilon,train_return,test_return,loss_mean\n";
  for (const auto& p : curve) {
    fmt::print(os, "{},{},{},{},{}\n", p.episode, p.epsilon, p.train_return, p.test_return,
               p.loss_mean);
  }
}

}  // namespace xrsched
