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

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "xrsched/qnetwork.hpp"
#include "xrsched/scenario.hpp"
#include "xrsched/schedulers.hpp"
#include "xrsched/simcore.hpp"
#include "xrsched/trainer.hpp"

using namespace xrsched;

namespace {

std::vector<StateRow> rows_of(std::size_t n) {
  Rng rng(1);
  std::vector<StateRow> rows(n);
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform();
  return rows;
}

void BM_Forward(benchmark::State& state) {
  QNetwork net(32);
  net.initialize(1);
  const auto rows = rows_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(4)->Arg(8)->Arg(32);

void BM_ForwardBackward(benchmark::State& state) {
  QNetwork net(32);
  net.initialize(2);
  const auto rows = rows_of(static_cast<std::size_t>(state.range(0)));
  const std::vector<double> dq(rows.size(), 0.1);
  QNetwork::Cache cache;
  for (auto _ : state) {
    net.forward(rows, cache);
    net.backward(cache, dq);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(4)->Arg(8)->Arg(32);

// One TD update on a 64-transition batch of 4-row states.
void BM_TrainStep(benchmark::State& state) {
  QNetwork net(32);
  net.initialize(3);
  QNetwork target = net;
  Adam adam;
  std::vector<Transition> store(64);
  for (auto& t : store) {
    t.state.rows = rows_of(4);
    t.next_state.rows = rows_of(4);
    t.action = EnvAction::select(1);
    t.reward = -0.1;
  }
  std::vector<const Transition*> batch;
  for (const auto& t : store) batch.push_back(&t);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(net, target, adam, batch, FeatureScaler(), 0.95));
}
BENCHMARK(BM_TrainStep);

// Whole PF episode per iteration; reports slots per second.
void BM_PfEpisode(benchmark::State& state) {
  ScenarioSpec spec;
  spec.devices = static_cast<int>(state.range(0));
  auto inst = std::make_shared<const EpisodeInstance>(make_episode(spec, 5));
  for (auto _ : state) {
    PfScheduler pf;
    benchmark::DoNotOptimize(run_episode(inst, pf));
  }
  state.SetItemsProcessed(state.iterations() * inst->num_slots);
}
BENCHMARK(BM_PfEpisode)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_MakeEpisode(benchmark::State& state) {
  ScenarioSpec spec;
  spec.devices = 8;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_episode(spec, seed++));
}
BENCHMARK(BM_MakeEpisode)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  ScenarioSpec spec;
  spec.devices = 3;
  spec.episode_slots = 1;
  spec.fdb_slots = 4;
  spec.rb_per_slot = 6;
  spec.phasing = Phasing::Simultaneous;
  EpisodeInstance inst = make_episode(spec, 9);
  // Rescale frame sizes so the six RBs are contended.
  for (auto& f : inst.frames) f.size_bits = 2.5 * inst.c(0, f.device);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_best_quality(inst));
}
BENCHMARK(BM_Oracle);

}  // namespace

BENCHMARK_MAIN();
