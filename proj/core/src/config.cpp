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

#include "xrsched/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace xrsched {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Pf: return "pf";
    case SchedulerKind::Pfi: return "pfi";
    case SchedulerKind::MsDqn: return "msdqn";
    case SchedulerKind::Oracle: return "oracle";
  }
  return "?";
}

SchedulerKind parse_scheduler(std::string_view text) {
  if (text == "pf") return SchedulerKind::Pf;
  if (text == "pfi") return SchedulerKind::Pfi;
  if (text == "msdqn") return SchedulerKind::MsDqn;
  if (text == "oracle") return SchedulerKind::Oracle;
  throw std::invalid_argument("unknown scheduler '" + std::string(text) +
                              "' (expected pf, pfi, msdqn or oracle)");
}

ConfigError::ConfigError(const std::string& key, const std::string& what)
    : std::invalid_argument(key + ": " + what), key_(key) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  return x;
}

std::vector<int> to_int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_int<int>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(std::string(key), "expected a comma separated list");
  return out;
}

std::string int_list(const std::vector<int>& xs) { return fmt::format("{}", fmt::join(xs, ",")); }

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define XR_DOUBLE(NAME, FIELD)                                                       \
  Key {                                                                              \
    NAME, [](const ExperimentConfig& c) { return fmt::format("{}", c.FIELD); },      \
        [](ExperimentConfig& c, std::string_view v) { c.FIELD = to_double(NAME, v); } \
  }
#define XR_INT(NAME, FIELD, TYPE)                                                       \
  Key {                                                                                 \
    NAME, [](const ExperimentConfig& c) { return fmt::format("{}", c.FIELD); },         \
        [](ExperimentConfig& c, std::string_view v) { c.FIELD = to_int<TYPE>(NAME, v); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      XR_DOUBLE("traffic.frame_rate_fps", scenario.traffic.frame_rate_fps),
      XR_DOUBLE("traffic.mean_frame_bits", scenario.traffic.mean_frame_bits),
      XR_INT("traffic.gop_length", scenario.traffic.gop_length, int),
      XR_DOUBLE("traffic.i_to_p_ratio", scenario.traffic.i_to_p_ratio),
      XR_DOUBLE("traffic.weight_i", scenario.traffic.weight_i),
      XR_DOUBLE("traffic.weight_p", scenario.traffic.weight_p),
      XR_DOUBLE("traffic.jitter_mean_ms", scenario.traffic.jitter_ms.mean),
      XR_DOUBLE("traffic.jitter_std_ms", scenario.traffic.jitter_ms.stddev),
      XR_DOUBLE("traffic.jitter_min_ms", scenario.traffic.jitter_ms.lower),
      XR_DOUBLE("traffic.jitter_max_ms", scenario.traffic.jitter_ms.upper),
      XR_DOUBLE("traffic.size_std_fraction", scenario.traffic.size_std_fraction),
      XR_DOUBLE("traffic.size_min_fraction", scenario.traffic.size_lower_fraction),
      XR_DOUBLE("traffic.size_max_fraction", scenario.traffic.size_upper_fraction),
      XR_DOUBLE("channel.tx_power_w", scenario.channel.tx_power_w),
      XR_DOUBLE("channel.rb_bandwidth_hz", scenario.channel.rb_bandwidth_hz),
      XR_DOUBLE("channel.noise_psd_w_per_hz", scenario.channel.noise_psd_w_per_hz),
      XR_DOUBLE("channel.carrier_hz", scenario.channel.carrier_hz),
      XR_DOUBLE("channel.cell_side_m", scenario.channel.cell_side_m),
      XR_DOUBLE("channel.bs_height_m", scenario.channel.bs_height_m),
      XR_DOUBLE("channel.ue_height_m", scenario.channel.ue_height_m),
      Key{"channel.fading",
          [](const ExperimentConfig& c) { return std::string(to_string(c.scenario.channel.fading)); },
          [](ExperimentConfig& c, std::string_view v) {
            try {
              c.scenario.channel.fading = parse_fading(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError("channel.fading", e.what());
            }
          }},
      XR_INT("simulation.devices", scenario.devices, int),
      XR_INT("simulation.episode_slots", scenario.episode_slots, int),
      Key{"simulation.slot_ms",
          [](const ExperimentConfig& c) { return fmt::format("{}", c.scenario.traffic.slot_ms); },
          [](ExperimentConfig& c, std::string_view v) {
            const double ms = to_double("simulation.slot_ms", v);
            c.scenario.traffic.slot_ms = ms;
            c.scenario.channel.slot_s = ms * 1e-3;
          }},
      XR_DOUBLE("simulation.fdb_ms", fdb_ms),
      XR_INT("simulation.rb_per_slot", scenario.rb_per_slot, int),
      Key{"simulation.phasing",
          [](const ExperimentConfig& c) { return std::string(to_string(c.scenario.phasing)); },
          [](ExperimentConfig& c, std::string_view v) {
            try {
              c.scenario.phasing = parse_phasing(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError("simulation.phasing", e.what());
            }
          }},
      Key{"scheduler.name",
          [](const ExperimentConfig& c) { return std::string(to_string(c.scheduler)); },
          [](ExperimentConfig& c, std::string_view v) {
            try {
              c.scheduler = parse_scheduler(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError("scheduler.name", e.what());
            }
          }},
      XR_DOUBLE("train.gamma", train.gamma),
      XR_DOUBLE("train.epsilon_start", train.epsilon_start),
      XR_DOUBLE("train.epsilon_min", train.epsilon_min),
      XR_DOUBLE("train.epsilon_decay", train.epsilon_decay),
      XR_INT("train.replay_capacity", train.replay_capacity, std::size_t),
      XR_INT("train.batch_size", train.batch_size, std::size_t),
      XR_INT("train.sync_period", train.sync_period, long),
      XR_INT("train.warmup", train.warmup, std::size_t),
      XR_DOUBLE("train.learning_rate", train.learning_rate),
      XR_INT("train.episodes", train.episodes, int),
      Key{"train.devices", [](const ExperimentConfig& c) { return int_list(c.train.device_curriculum); },
          [](ExperimentConfig& c, std::string_view v) {
            c.train.device_curriculum = to_int_list("train.devices", v);
          }},
      XR_INT("train.hidden", train.hidden, std::size_t),
      XR_INT("train.train_every", train.train_every, int),
      XR_DOUBLE("train.divergence_threshold", train.divergence_threshold),
      XR_INT("train.test_seed", train_test_seed, std::uint64_t),
      XR_INT("eval.repetitions", eval.repetitions, int),
      Key{"eval.devices", [](const ExperimentConfig& c) { return int_list(c.eval.devices); },
          [](ExperimentConfig& c, std::string_view v) { c.eval.devices = to_int_list("eval.devices", v); }},
      XR_INT("run.seed", seed, std::uint64_t),
      XR_INT("run.threads", threads, int),
  };
  return table;
}

#undef XR_DOUBLE
#undef XR_INT

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

// Sub-config validators report "section: field ..."; recover the key path
// when the field names a config key, else blame the whole section.
[[noreturn]] void rethrow_in_section(const std::string& section, const std::invalid_argument& e) {
  std::string_view msg = e.what();
  const std::string prefix = section + ": ";
  std::string key = section;
  if (msg.starts_with(prefix)) {
    msg.remove_prefix(prefix.size());
    const std::string field(msg.substr(0, msg.find(' ')));
    if (field == "slot_s" || field == "slot_ms") {
      key = "simulation.slot_ms";
    } else if (field == "device" || field == "curriculum") {
      key = section + ".devices";
    } else {
      for (const auto& k : keys())
        if (k.name == section + "." + field) key = k.name;
    }
  }
  throw ConfigError(key, std::string(msg));
}

}  // namespace

int whole_slots(double ms, double slot_ms, const std::string& key) {
  if (!(slot_ms > 0.0)) throw ConfigError("simulation.slot_ms", "must be > 0");
  if (!(ms > 0.0)) throw ConfigError(key, "must be > 0");
  const double ratio = ms / slot_ms;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError(key, fmt::format("{} ms is not a whole number of {} ms slots", ms, slot_ms));
  return static_cast<int>(rounded);
}

void ExperimentConfig::validate() const {
  const auto& s = scenario;
  try {
    s.traffic.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_in_section("traffic", e);
  }
  try {
    s.channel.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_in_section("channel", e);
  }
  require(s.devices >= 1, "simulation.devices", "must be >= 1");
  require(s.episode_slots >= 1, "simulation.episode_slots", "must be >= 1");
  require(s.rb_per_slot >= 0, "simulation.rb_per_slot", "must be >= 0");
  require(std::abs(s.channel.slot_s * 1e3 - s.traffic.slot_ms) <= 1e-12 * s.traffic.slot_ms,
          "simulation.slot_ms", "channel and traffic slot lengths disagree");
  const int fdb = whole_slots(fdb_ms, s.traffic.slot_ms, "simulation.fdb_ms");
  require(fdb == s.fdb_slots, "simulation.fdb_ms",
          fmt::format("scenario holds {} delay slots, expected {}", s.fdb_slots, fdb));
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_in_section("train", e);
  }
  require(eval.repetitions >= 1, "eval.repetitions", "must be >= 1");
  require(!eval.devices.empty(), "eval.devices", "must not be empty");
  for (int d : eval.devices) require(d >= 1, "eval.devices", "device counts must be >= 1");
  require(threads >= 1, "run.threads", "must be >= 1");
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown key");
}

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = fmt::format("{}:{}", source, lineno);
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(body), where + ": expected 'key = value'");
    const std::string key(trim(body.substr(0, eq)));
    const std::string_view value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, where + ": repeated key");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.key(), where + ": " + std::string(e.what()).substr(e.key().size() + 2));
    }
  }
  // Derived field: the delay budget in slots.
  cfg.scenario.fdb_slots = whole_slots(cfg.fdb_ms, cfg.scenario.traffic.slot_ms, "simulation.fdb_ms");
  cfg.validate();
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, std::span<const std::string> assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError(a, "expected key=value");
    set_config_value(cfg, trim(std::string_view(a).substr(0, eq)), std::string_view(a).substr(eq + 1));
  }
  cfg.scenario.fdb_slots = whole_slots(cfg.fdb_ms, cfg.scenario.traffic.slot_ms, "simulation.fdb_ms");
  cfg.validate();
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace xrsched
