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
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xrsched/scenario.hpp"
#include "xrsched/trainer.hpp"

namespace xrsched {

enum class SchedulerKind { Pf, Pfi, MsDqn, Oracle };

std::string_view to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(std::string_view text);

struct EvalConfig {
  int repetitions = 50;
  std::vector<int> devices = {2, 4, 6, 8};
};

/// Everything a run needs. The defaults are the full-scale preset.
struct ExperimentConfig {
  ScenarioSpec scenario;
  double fdb_ms = 10.0;
  SchedulerKind scheduler = SchedulerKind::Pf;
  TrainConfig train;
  /// Seed of the fixed scenario scored after every training episode.
  std::uint64_t train_test_seed = 12345;
  EvalConfig eval;
  std::uint64_t seed = 1;
  int threads = 1;

  /// Cross-field checks, including fdb_ms being a whole number of slots.
  void validate() const;
};

/// Config error carrying the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat `section.key = value` text; `#` starts a comment. Unknown or
/// repeated keys are rejected. Missing keys keep their defaults.
ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Applies one assignment; used by the parser and for command line overrides.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Applies `key=value` assignments on top of a parsed config (later ones
/// win), then re-derives the slot counts and validates.
void apply_overrides(ExperimentConfig& cfg, std::span<const std::string> assignments);

/// Every key with its current value, in a fixed order. Parsing the output
/// gives back an identical config.
std::string to_config_text(const ExperimentConfig& cfg);

/// Exact slot count of `ms` at `slot_ms`; throws ConfigError under `key`
/// when the ratio is not integral.
int whole_slots(double ms, double slot_ms, const std::string& key);

}  // namespace xrsched
