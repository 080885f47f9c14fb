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

#include "xrsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "xrsched/trainer.hpp"

#ifndef XRSCHED_VERSION
#define XRSCHED_VERSION "unknown"
#endif

namespace xrsched {

ScenarioSpec scenario_for(const ExperimentConfig& cfg, int devices) {
  ScenarioSpec spec = cfg.scenario;
  spec.devices = devices;
  return spec;
}

std::uint64_t repetition_seed(std::uint64_t base, int devices, int rep) {
  return derive_seed(base, {static_cast<std::uint64_t>(devices), static_cast<std::uint64_t>(rep)});
}

EpisodeMetrics run_scheduler(SchedulerKind kind, std::shared_ptr<const EpisodeInstance> instance,
                             const Checkpoint* checkpoint) {
  switch (kind) {
    case SchedulerKind::Pf: {
      PfScheduler pf;
      return run_episode(std::move(instance), pf);
    }
    case SchedulerKind::Pfi: {
      PfiScheduler pfi;
      return run_episode(std::move(instance), pfi);
    }
    case SchedulerKind::MsDqn:
      if (checkpoint == nullptr) throw std::invalid_argument("msdqn needs a trained checkpoint");
      return run_greedy_episode(checkpoint->net, checkpoint->scaler, std::move(instance));
    case SchedulerKind::Oracle: {
      ScriptedPolicy replay(oracle_best_quality(*instance).schedule);
      return run_episode(std::move(instance), replay);
    }
  }
  throw std::logic_error("run_scheduler: unhandled scheduler");
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < n && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

ResultRow make_row(std::string label, int devices, int rep, const EpisodeMetrics& m) {
  return {std::move(label), devices, rep, m.total_quality(), m.i_success_rate(), m.p_success_rate()};
}

}  // namespace

std::vector<ResultRow> run_compare(const ExperimentConfig& cfg, std::span<const SchedulerKind> schedulers,
                                   std::span<const int> devices, int repetitions, std::uint64_t seed,
                                   const Checkpoint* checkpoint, int threads) {
  if (repetitions < 1) throw std::invalid_argument("compare: repetitions must be >= 1");
  for (auto s : schedulers)
    if (s == SchedulerKind::MsDqn && checkpoint == nullptr)
      throw std::invalid_argument("compare: msdqn requested without a checkpoint");
  const int cells = static_cast<int>(devices.size()) * repetitions;
  // results[cell][scheduler]; each cell shares one instance across schedulers.
  std::vector<std::vector<ResultRow>> results(static_cast<std::size_t>(cells));
  parallel_for(cells, threads, [&](int cell) {
    const int d = devices[static_cast<std::size_t>(cell / repetitions)];
    const int rep = cell % repetitions;
    auto instance = std::make_shared<const EpisodeInstance>(
        make_episode(scenario_for(cfg, d), repetition_seed(seed, d, rep)));
    auto& out = results[static_cast<std::size_t>(cell)];
    for (auto s : schedulers)
      out.push_back(make_row(std::string(to_string(s)), d, rep, run_scheduler(s, instance, checkpoint)));
  });
  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < schedulers.size(); ++s)
    for (const auto& cell : results) rows.push_back(cell[s]);
  return rows;
}

std::vector<ResultRow> run_phasing_study(const ExperimentConfig& cfg, SchedulerKind scheduler,
                                         std::span<const Phasing> phasings, std::span<const int> devices,
                                         int repetitions, std::uint64_t seed,
                                         const Checkpoint* checkpoint, int threads) {
  if (repetitions < 1) throw std::invalid_argument("phasing: repetitions must be >= 1");
  const int cells = static_cast<int>(devices.size()) * repetitions;
  std::vector<std::vector<ResultRow>> results(static_cast<std::size_t>(cells));
  parallel_for(cells, threads, [&](int cell) {
    const int d = devices[static_cast<std::size_t>(cell / repetitions)];
    const int rep = cell % repetitions;
    auto& out = results[static_cast<std::size_t>(cell)];
    for (auto ph : phasings) {
      ScenarioSpec spec = scenario_for(cfg, d);
      spec.phasing = ph;
      auto instance = std::make_shared<const EpisodeInstance>(make_episode(spec, repetition_seed(seed, d, rep)));
      out.push_back(make_row(std::string(to_string(ph)), d, rep, run_scheduler(scheduler, instance, checkpoint)));
    }
  });
  std::vector<ResultRow> rows;
  for (std::size_t p = 0; p < phasings.size(); ++p)
    for (const auto& cell : results) rows.push_back(cell[p]);
  return rows;
}

void write_results_csv(std::ostream& os, std::string_view first_column, std::span<const ResultRow> rows) {
  fmt::print(os, "{},devices,rep,quality,i_rate,p_rate\n", first_column);
  for (const auto& r : rows)
    fmt::print(os, "{},{},{},{},{},{}\n", r.label, r.devices, r.rep, r.quality, r.i_rate, r.p_rate);
}

std::vector<GroupSummary> summarize_rows(std::span<const ResultRow> rows) {
  std::vector<std::pair<std::string, int>> order;
  for (const auto& r : rows) {
    std::pair<std::string, int> key{r.label, r.devices};
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
  }
  std::vector<GroupSummary> out;
  for (const auto& [label, d] : order) {
    GroupSummary g;
    g.label = label;
    g.devices = d;
    std::vector<double> q;
    double i_sum = 0.0, p_sum = 0.0;
    for (const auto& r : rows) {
      if (r.label != label || r.devices != d) continue;
      q.push_back(r.quality);
      i_sum += r.i_rate;
      p_sum += r.p_rate;
    }
    g.quality = summarize(q);
    g.i_rate = i_sum / static_cast<double>(q.size());
    g.p_rate = p_sum / static_cast<double>(q.size());
    out.push_back(std::move(g));
  }
  return out;
}

void print_summary_table(std::ostream& os, std::span<const GroupSummary> groups) {
  fmt::print(os, "{:<14} {:>7} {:>5} {:>20} {:>8} {:>8}\n", "name", "devices", "reps",
             "quality mean +- std", "I rate", "P rate");
  for (const auto& g : groups) {
    fmt::print(os, "{:<14} {:>7} {:>5} {:>20} {:>8.4f} {:>8.4f}\n", g.label, g.devices, g.quality.n,
               fmt::format("{:.3f} +- {:.3f}", g.quality.mean, g.quality.stddev), g.i_rate, g.p_rate);
  }
}

std::vector<double> qualities(std::span<const ResultRow> rows, std::string_view label, int devices) {
  std::vector<std::pair<int, double>> picked;
  for (const auto& r : rows)
    if (r.label == label && r.devices == devices) picked.emplace_back(r.rep, r.quality);
  std::sort(picked.begin(), picked.end());
  std::vector<double> out;
  for (const auto& [rep, q] : picked) out.push_back(q);
  return out;
}

std::vector<PhasingDelta> phasing_deltas(std::span<const ResultRow> rows) {
  const auto groups = summarize_rows(rows);
  std::vector<PhasingDelta> out;
  for (const auto& from : groups) {
    for (const auto& to : groups) {
      if (from.devices != to.devices || from.label == to.label) continue;
      PhasingDelta d;
      d.from = from.label;
      d.to = to.label;
      d.devices = from.devices;
      d.mean_from = from.quality.mean;
      d.mean_to = to.quality.mean;
      d.relative = d.mean_from == 0.0 ? std::nan("") : (d.mean_to - d.mean_from) / std::abs(d.mean_from);
      out.push_back(std::move(d));
    }
  }
  return out;
}

void write_phasing_deltas_csv(std::ostream& os, std::span<const PhasingDelta> deltas) {
  os << "from,to,devices,mean_quality_from,mean_quality_to,relative_delta\n";
  for (const auto& d : deltas)
    fmt::print(os, "{},{},{},{},{},{}\n", d.from, d.to, d.devices, d.mean_from, d.mean_to, d.relative);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::string code_version() { return XRSCHED_VERSION; }

void write_manifest(std::ostream& os, const Manifest& m) {
  os << "xrsched-manifest 1\n";
  fmt::print(os, "command {}\n", m.command);
  fmt::print(os, "code_version {}\n", code_version());
  fmt::print(os, "config_hash {:016x}\n", fnv1a64(m.config_text));
  fmt::print(os, "seed {}\n", m.seed);
  for (const auto& [k, v] : m.params) fmt::print(os, "param {} {}\n", k, v);
  for (const auto& [k, v] : m.outputs) fmt::print(os, "output {} {}\n", k, v);
  os << "config\n" << m.config_text << "end\n";
}

}  // namespace xrsched
