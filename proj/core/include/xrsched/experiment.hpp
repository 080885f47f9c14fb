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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xrsched/config.hpp"
#include "xrsched/qnetwork.hpp"
#include "xrsched/schedulers.hpp"
#include "xrsched/simcore.hpp"
#include "xrsched/stats.hpp"

namespace xrsched {

/// The configured scenario with its device count replaced.
ScenarioSpec scenario_for(const ExperimentConfig& cfg, int devices);

/// Seed shared by every scheduler (and phasing) for one repetition.
std::uint64_t repetition_seed(std::uint64_t base, int devices, int rep);

/// Runs one scheduler over an instance. MS-DQN needs a checkpoint; the
/// oracle replays its optimal schedule through the simulator.
EpisodeMetrics run_scheduler(SchedulerKind kind, std::shared_ptr<const EpisodeInstance> instance,
                             const Checkpoint* checkpoint);

struct ResultRow {
  std::string label;  ///< scheduler or phasing name
  int devices = 0;
  int rep = 0;
  double quality = 0.0;
  double i_rate = 0.0;
  double p_rate = 0.0;
};

/// Calls body(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown by a body is rethrown after all workers stop.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

/// Rows ordered by (scheduler as listed, devices as listed, rep).
std::vector<ResultRow> run_compare(const ExperimentConfig& cfg, std::span<const SchedulerKind> schedulers,
                                   std::span<const int> devices, int repetitions, std::uint64_t seed,
                                   const Checkpoint* checkpoint, int threads);

/// Rows ordered by (phasing as listed, devices, rep); labels are phasing names.
std::vector<ResultRow> run_phasing_study(const ExperimentConfig& cfg, SchedulerKind scheduler,
                                         std::span<const Phasing> phasings, std::span<const int> devices,
                                         int repetitions, std::uint64_t seed,
                                         const Checkpoint* checkpoint, int threads);

/// `<first_column>,devices,rep,quality,i_rate,p_rate`
void write_results_csv(std::ostream& os, std::string_view first_column, std::span<const ResultRow> rows);

struct GroupSummary {
  std::string label;
  int devices = 0;
  Summary quality;
  double i_rate = 0.0;
  double p_rate = 0.0;
};

/// Per (label, devices) in first-appearance order.
std::vector<GroupSummary> summarize_rows(std::span<const ResultRow> rows);
void print_summary_table(std::ostream& os, std::span<const GroupSummary> groups);

/// Qualities of one label and device count, in rep order.
std::vector<double> qualities(std::span<const ResultRow> rows, std::string_view label, int devices);

struct PhasingDelta {
  std::string from;
  std::string to;
  int devices = 0;
  double mean_from = 0.0;
  double mean_to = 0.0;
  /// (mean_to - mean_from) / |mean_from|; NaN when mean_from is zero.
  double relative = 0.0;
};

/// Every ordered pair of distinct phasings per device count.
std::vector<PhasingDelta> phasing_deltas(std::span<const ResultRow> rows);
/// `from,to,devices,mean_quality_from,mean_quality_to,relative_delta`
void write_phasing_deltas_csv(std::ostream& os, std::span<const PhasingDelta> deltas);

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string code_version();

/// Provenance record written next to every result set.
struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_text;
  /// Run parameters beyond the config (schedulers, reps, checkpoint hash, ...).
  std::vector<std::pair<std::string, std::string>> params;
  /// Output file name to FNV-1a hash of its bytes.
  std::vector<std::pair<std::string, std::string>> outputs;
};

void write_manifest(std::ostream& os, const Manifest& manifest);

}  // namespace xrsched
