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

// xrsched command line front end.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "xrsched/config.hpp"
#include "xrsched/experiment.hpp"
#include "xrsched/qnetwork.hpp"
#include "xrsched/rlenv.hpp"
#include "xrsched/scenario.hpp"
#include "xrsched/simcore.hpp"
#include "xrsched/trainer.hpp"

namespace fs = std::filesystem;
using namespace xrsched;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = ".";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "Config file (flat key = value); default is the full-scale preset");
  app->add_option("--set", c.overrides, "Override one config key, e.g. --set simulation.rb_per_slot=12");
  app->add_option("--seed", c.seed, "Base seed (overrides run.seed)");
  app->add_option("--threads", c.threads, "Worker threads for repetitions (overrides run.threads)");
  app->add_option("--out-dir", c.out_dir, "Directory for CSV outputs and the manifest");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg;
  std::string text;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw std::runtime_error("cannot open config file " + c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::istringstream is(text);
  cfg = parse_config(is, c.config_path.empty() ? "<defaults>" : c.config_path);
  apply_overrides(cfg, c.overrides);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

/// Collects outputs so their hashes land in the manifest.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
    hashes_.emplace_back(name, fmt::format("{:016x}", fnv1a64(content)));
  }

  void manifest(Manifest m) {
    m.outputs = hashes_;
    std::ostringstream os;
    write_manifest(os, m);
    std::ofstream out(dir_ / "manifest.txt", std::ios::binary);
    out << os.str();
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> hashes_;
};

std::optional<Checkpoint> maybe_checkpoint(const std::string& path) {
  if (path.empty()) return std::nullopt;
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path);
  return load_checkpoint(fs::path(path));
}

std::string join_ints(const std::vector<int>& xs) { return fmt::format("{}", fmt::join(xs, ",")); }

std::string csv_of(std::string_view first, const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_results_csv(os, first, rows);
  return os.str();
}

int cmd_simulate(const Common& c, const std::string& sched, std::optional<int> devices, const std::string& ckpt_path,
                 bool traces) {
  ExperimentConfig cfg = load(c);
  const SchedulerKind kind = sched.empty() ? cfg.scheduler : parse_scheduler(sched);
  const int n = devices.value_or(cfg.scenario.devices);
  const auto ckpt = maybe_checkpoint(ckpt_path);
  if (kind == SchedulerKind::MsDqn && !ckpt) throw std::runtime_error("msdqn needs --checkpoint");

  auto instance = std::make_shared<const EpisodeInstance>(make_episode(scenario_for(cfg, n), cfg.seed));
  OutputSet out(c.out_dir);

  if (traces) {
    std::ostringstream frames;
    write_frame_trace_csv(frames, instance->frames);
    out.write("frames.csv", frames.str());
    std::ostringstream channel;
    channel << "slot,device,bits_per_rb,gain\n";
    for (int t = 0; t < instance->num_slots; ++t)
      for (int d = 0; d < n; ++d) fmt::print(channel, "{},{},{},{}\n", t, d, instance->c(t, d), instance->h(t, d));
    out.write("channel.csv", channel.str());
  }

  EpisodeMetrics metrics;
  std::ostringstream trace;
  if (kind == SchedulerKind::MsDqn) {
    StepTraceWriter writer(trace);
    metrics = run_greedy_episode(ckpt->net, ckpt->scaler, instance, traces ? &writer : nullptr);
    if (traces) out.write("step_trace.csv", trace.str());
  } else {
    std::unique_ptr<PriorityPolicy> policy;
    if (kind == SchedulerKind::Pf) policy = std::make_unique<PfScheduler>();
    if (kind == SchedulerKind::Pfi) policy = std::make_unique<PfiScheduler>();
    if (kind == SchedulerKind::Oracle)
      policy = std::make_unique<ScriptedPolicy>(oracle_best_quality(*instance).schedule);
    Simulator sim(instance);
    policy->reset(*instance);
    std::vector<SlotOutcome> outcomes;
    while (!sim.done()) outcomes.push_back(sim.advance_slot(*policy));
    metrics = sim.metrics();
    if (traces) {
      write_slot_trace_csv(trace, outcomes);
      out.write("slot_trace.csv", trace.str());
    }
  }
  std::ostringstream mcsv;
  write_metrics_csv(mcsv, metrics);
  out.write("metrics.csv", mcsv.str());

  out.manifest({"simulate", cfg.seed, to_config_text(cfg),
                {{"scheduler", std::string(to_string(kind))}, {"devices", std::to_string(n)},
                 {"checkpoint", ckpt_path.empty() ? "-" : fmt::format("{:016x}", fnv1a64_file(ckpt_path))}},
                {}});

  fmt::print("scheduler {}  devices {}  slots {}  frames {}\n", to_string(kind), n, instance->num_slots,
             instance->frames.size());
  fmt::print("quality {:.4f}  I success {:.4f}  P success {:.4f}  RB utilisation {:.4f}\n",
             metrics.total_quality(), metrics.i_success_rate(), metrics.p_success_rate(),
             summarize(metrics.rb_utilization).mean);
  return 0;
}

int cmd_train(const Common& c, const std::vector<int>& devices, const std::string& ckpt_path) {
  ExperimentConfig cfg = load(c);
  if (!devices.empty()) cfg.train.device_curriculum = devices;
  cfg.validate();
  OutputSet out(c.out_dir);
  auto test = std::make_shared<const EpisodeInstance>(
      make_episode(scenario_for(cfg, cfg.scenario.devices), cfg.train_test_seed));
  fmt::print("training {} episodes, curriculum {}, test scenario {} devices\n", cfg.train.episodes,
             join_ints(cfg.train.device_curriculum), cfg.scenario.devices);
  auto result = train(cfg.train, cfg.scenario, test, cfg.seed, [](const CurvePoint& p) {
    fmt::print("episode {:>4}  eps {:.3f}  train {:>9.3f}  test {:>9.3f}  loss {:.3e}\n", p.episode, p.epsilon,
               p.train_return, p.test_return, p.loss_mean);
    std::cout.flush();
  });

  std::ostringstream curve;
  write_learning_curve_csv(curve, result.curve);
  out.write("learning_curve.csv", curve.str());

  const fs::path ckpt = ckpt_path.empty() ? out.dir() / "checkpoint.txt" : fs::path(ckpt_path);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt, result.net, result.scaler);
  out.manifest({"train", cfg.seed, to_config_text(cfg),
                {{"checkpoint", ckpt.string()}, {"checkpoint_hash", fmt::format("{:016x}", fnv1a64_file(ckpt))}},
                {}});
  fmt::print("checkpoint written to {}\n", ckpt.string());
  return 0;
}

int report(const Common& c, const ExperimentConfig& cfg, const std::string& command,
           const std::vector<ResultRow>& rows, const std::string& csv_name, std::string_view first_col,
           std::vector<std::pair<std::string, std::string>> params) {
  OutputSet out(c.out_dir);
  out.write(csv_name, csv_of(first_col, rows));
  const auto groups = summarize_rows(rows);
  print_summary_table(std::cout, groups);
  out.manifest({command, cfg.seed, to_config_text(cfg), std::move(params), {}});
  return 0;
}

std::vector<SchedulerKind> parse_schedulers(const std::vector<std::string>& names, bool have_ckpt) {
  std::vector<SchedulerKind> out;
  for (const auto& s : names) out.push_back(parse_scheduler(s));
  if (out.empty()) {
    out = {SchedulerKind::Pf, SchedulerKind::Pfi};
    if (have_ckpt) out.push_back(SchedulerKind::MsDqn);
  }
  return out;
}

std::string ckpt_hash(const std::string& path) {
  return path.empty() ? "-" : fmt::format("{:016x}", fnv1a64_file(path));
}

int cmd_evaluate(const Common& c, const std::vector<std::string>& scheds, std::vector<int> devices,
                 std::optional<int> reps, const std::string& ckpt_path) {
  ExperimentConfig cfg = load(c);
  const auto ckpt = maybe_checkpoint(ckpt_path);
  std::vector<SchedulerKind> kinds;
  for (const auto& s : scheds) kinds.push_back(parse_scheduler(s));
  if (kinds.empty()) kinds = {ckpt ? SchedulerKind::MsDqn : cfg.scheduler};
  if (devices.empty()) devices = cfg.eval.devices;
  const int r = reps.value_or(cfg.eval.repetitions);
  const auto rows = run_compare(cfg, kinds, devices, r, cfg.seed, ckpt ? &*ckpt : nullptr, cfg.threads);
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(to_string(k));
  return report(c, cfg, "evaluate", rows, "evaluate.csv", "scheduler",
                {{"schedulers", fmt::format("{}", fmt::join(names, ","))},
                 {"devices", join_ints(devices)},
                 {"reps", std::to_string(r)},
                 {"checkpoint", ckpt_hash(ckpt_path)}});
}

int cmd_compare(const Common& c, const std::vector<std::string>& scheds, std::vector<int> devices,
                std::optional<int> reps, const std::string& ckpt_path) {
  ExperimentConfig cfg = load(c);
  const auto ckpt = maybe_checkpoint(ckpt_path);
  const auto kinds = parse_schedulers(scheds, ckpt.has_value());
  if (devices.empty()) devices = cfg.eval.devices;
  const int r = reps.value_or(cfg.eval.repetitions);
  const auto rows = run_compare(cfg, kinds, devices, r, cfg.seed, ckpt ? &*ckpt : nullptr, cfg.threads);
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(to_string(k));
  report(c, cfg, "compare", rows, "compare.csv", "scheduler",
         {{"schedulers", fmt::format("{}", fmt::join(names, ","))},
          {"devices", join_ints(devices)},
          {"reps", std::to_string(r)},
          {"checkpoint", ckpt_hash(ckpt_path)}});
  if (r >= 2) {
    fmt::print("\npaired one-sided t-tests (a better than b)\n");
    for (int d : devices) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
          if (i == j) continue;
          const auto a = qualities(rows, names[i], d);
          const auto b = qualities(rows, names[j], d);
          const auto t = paired_t_test_greater(a, b);
          if (t.mean_diff <= 0.0) continue;
          fmt::print("  devices {:>2}  {:>6} vs {:<6}  mean diff {:>8.3f}  t {:>7.3f}  p {:.4g}\n", d, names[i],
                     names[j], t.mean_diff, t.t, t.p_value);
        }
      }
    }
  }
  return 0;
}

int cmd_phasing(const Common& c, const std::string& sched, std::vector<int> devices, std::optional<int> reps,
                const std::string& ckpt_path) {
  ExperimentConfig cfg = load(c);
  const auto ckpt = maybe_checkpoint(ckpt_path);
  const SchedulerKind kind = sched.empty() ? cfg.scheduler : parse_scheduler(sched);
  if (devices.empty()) devices = cfg.eval.devices;
  const int r = reps.value_or(cfg.eval.repetitions);
  const std::vector<Phasing> phasings = {Phasing::Random, Phasing::Simultaneous, Phasing::Equal};
  const auto rows =
      run_phasing_study(cfg, kind, phasings, devices, r, cfg.seed, ckpt ? &*ckpt : nullptr, cfg.threads);
  OutputSet out(c.out_dir);
  out.write("phasing.csv", csv_of("phasing", rows));
  const auto deltas = phasing_deltas(rows);
  std::ostringstream dcsv;
  write_phasing_deltas_csv(dcsv, deltas);
  out.write("phasing_deltas.csv", dcsv.str());
  out.manifest({"phasing", cfg.seed, to_config_text(cfg),
                {{"scheduler", std::string(to_string(kind))},
                 {"devices", join_ints(devices)},
                 {"reps", std::to_string(r)},
                 {"checkpoint", ckpt_hash(ckpt_path)}},
                {}});
  print_summary_table(std::cout, summarize_rows(rows));
  fmt::print("\nrelative quality change\n");
  for (const auto& d : deltas)
    fmt::print("  devices {:>2}  {:>12} -> {:<12} {:+.1f}%\n", d.devices, d.from, d.to, 100.0 * d.relative);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"XR frame-priority downlink scheduling simulator"};
  app.require_subcommand(1);

  Common common;
  std::string scheduler;
  std::vector<std::string> schedulers;
  std::optional<int> one_device;
  std::vector<int> devices;
  std::optional<int> reps;
  std::string checkpoint;
  bool traces = false;

  auto* sim = app.add_subcommand("simulate", "Run one episode and write metrics and traces");
  add_common(sim, common);
  sim->add_option("--scheduler", scheduler, "pf | pfi | msdqn | oracle");
  sim->add_option("--devices", one_device, "Device count");
  sim->add_option("--checkpoint", checkpoint, "Trained network for msdqn");
  sim->add_flag("--trace", traces, "Also write frame, channel and per-slot (or per-step) trace CSVs");

  auto* tr = app.add_subcommand("train", "Train the MS-DQN scheduler");
  add_common(tr, common);
  tr->add_option("--devices", devices, "Training device counts (curriculum)")->delimiter(',');
  tr->add_option("--checkpoint", checkpoint, "Where to write the trained network");

  auto* ev = app.add_subcommand("evaluate", "Greedy evaluation over repetitions");
  add_common(ev, common);
  ev->add_option("--scheduler", schedulers, "pf | pfi | msdqn | oracle")->delimiter(',');
  ev->add_option("--devices", devices, "Device counts")->delimiter(',');
  ev->add_option("--reps", reps, "Repetitions per device count");
  ev->add_option("--checkpoint", checkpoint, "Trained network");

  auto* cmp = app.add_subcommand("compare", "Seed-paired scheduler comparison");
  add_common(cmp, common);
  cmp->add_option("--scheduler", schedulers, "Schedulers to compare (comma separated)")->delimiter(',');
  cmp->add_option("--devices", devices, "Device counts")->delimiter(',');
  cmp->add_option("--reps", reps, "Repetitions per device count");
  cmp->add_option("--checkpoint", checkpoint, "Trained network for msdqn");

  auto* ph = app.add_subcommand("phasing", "Random vs Simultaneous vs Equal first-frame phasing");
  add_common(ph, common);
  ph->add_option("--scheduler", scheduler, "pf | pfi | msdqn | oracle");
  ph->add_option("--devices", devices, "Device counts")->delimiter(',');
  ph->add_option("--reps", reps, "Repetitions per device count");
  ph->add_option("--checkpoint", checkpoint, "Trained network for msdqn");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(common, scheduler, one_device, checkpoint, traces);
    if (tr->parsed()) return cmd_train(common, devices, checkpoint);
    if (ev->parsed()) return cmd_evaluate(common, schedulers, devices, reps, checkpoint);
    if (cmp->parsed()) return cmd_compare(common, schedulers, devices, reps, checkpoint);
    if (ph->parsed()) return cmd_phasing(common, scheduler, devices, reps, checkpoint);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
