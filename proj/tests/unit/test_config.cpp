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

#include <doctest.h>

#include <sstream>
#include <stdexcept>

#include "xrsched/config.hpp"

using namespace xrsched;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test.cfg");
}

std::string error_key(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty file gives the defaults") {
    const auto cfg = parse("");
    const ExperimentConfig def;
    CHECK(cfg.scenario.devices == def.scenario.devices);
    CHECK(cfg.scenario.fdb_slots == 20);
    CHECK(cfg.scenario.rb_per_slot == def.scenario.rb_per_slot);
    CHECK(cfg.train.gamma == def.train.gamma);
    CHECK(cfg.eval.repetitions == def.eval.repetitions);
    CHECK(cfg.scheduler == SchedulerKind::Pf);
    CHECK(to_config_text(cfg) == to_config_text(def));
  }

  TEST_CASE("comments and whitespace") {
    const auto cfg = parse("# header\n\n  simulation.devices = 3   # trailing\ntrain.devices=2, 4\n");
    CHECK(cfg.scenario.devices == 3);
    CHECK(cfg.train.device_curriculum == std::vector<int>{2, 4});
  }

  TEST_CASE("delay budget must be a whole number of slots") {
    CHECK(parse("simulation.fdb_ms = 10\nsimulation.slot_ms = 0.5\n").scenario.fdb_slots == 20);
    CHECK(parse("simulation.fdb_ms = 5\n").scenario.fdb_slots == 10);
    CHECK(error_key("simulation.fdb_ms = 10\nsimulation.slot_ms = 0.3\n") == "simulation.fdb_ms");
    CHECK(whole_slots(10.0, 0.5, "k") == 20);
    CHECK_THROWS_AS(whole_slots(10.0, 0.3, "k"), ConfigError);
  }

  TEST_CASE("slot length is shared by traffic and channel") {
    const auto cfg = parse("simulation.slot_ms = 1\nsimulation.fdb_ms = 10\n");
    CHECK(cfg.scenario.traffic.slot_ms == 1.0);
    CHECK(cfg.scenario.channel.slot_s == doctest::Approx(1e-3));
    CHECK(cfg.scenario.fdb_slots == 10);
  }

  TEST_CASE("errors name the key") {
    CHECK(error_key("simulation.devicez = 3\n") == "simulation.devicez");
    CHECK(error_key("simulation.devices = three\n") == "simulation.devices");
    CHECK(error_key("simulation.devices = 0\n") == "simulation.devices");
    CHECK(error_key("train.gamma = 1.5\n") == "train.gamma");
    CHECK(error_key("scheduler.name = rr\n") == "scheduler.name");
    CHECK(error_key("simulation.phasing = sideways\n") == "simulation.phasing");
    CHECK(error_key("channel.fading = maybe\n") == "channel.fading");
    CHECK(error_key("simulation.devices = 2\nsimulation.devices = 3\n") == "simulation.devices");
  }

  TEST_CASE("error messages carry the source line") {
    try {
      parse("simulation.devices = 2\n\nbogus.key = 1\n");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("test.cfg:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
  }

  TEST_CASE("config text round trips") {
    auto cfg = parse(
        "simulation.devices = 5\nsimulation.phasing = equal\nchannel.fading = none\n"
        "traffic.frame_rate_fps = 30\ntrain.devices = 2,6\ntrain.learning_rate = 0.0005\n"
        "eval.devices = 3\nrun.seed = 99\nscheduler.name = pfi\n");
    const auto text = to_config_text(cfg);
    std::istringstream is(text);
    const auto again = parse_config(is);
    CHECK(to_config_text(again) == text);
    CHECK(again.scenario.devices == 5);
    CHECK(again.scenario.phasing == Phasing::Equal);
    CHECK(again.scenario.channel.fading == Fading::None);
    CHECK(again.scenario.traffic.frame_rate_fps == 30.0);
    CHECK(again.train.learning_rate == 0.0005);
    CHECK(again.seed == 99);
    CHECK(again.scheduler == SchedulerKind::Pfi);
  }

  TEST_CASE("overrides") {
    ExperimentConfig cfg;
    set_config_value(cfg, "eval.repetitions", "7");
    CHECK(cfg.eval.repetitions == 7);
    CHECK_THROWS_AS(set_config_value(cfg, "eval.nothing", "1"), ConfigError);

    auto parsed = parse("simulation.devices = 4\nsimulation.fdb_ms = 10\n");
    const std::vector<std::string> o{"simulation.devices=6", "simulation.fdb_ms = 5", "simulation.devices=7"};
    apply_overrides(parsed, o);
    CHECK(parsed.scenario.devices == 7);
    CHECK(parsed.scenario.fdb_slots == 10);
    const std::vector<std::string> bad{"simulation.fdb_ms=10.1"};
    CHECK_THROWS_AS(apply_overrides(parsed, bad), ConfigError);
    const std::vector<std::string> no_eq{"simulation.devices"};
    CHECK_THROWS_AS(apply_overrides(parsed, no_eq), ConfigError);
  }

  TEST_CASE("scheduler names") {
    for (auto k : {SchedulerKind::Pf, SchedulerKind::Pfi, SchedulerKind::MsDqn, SchedulerKind::Oracle})
      CHECK(parse_scheduler(to_string(k)) == k);
    CHECK(to_string(SchedulerKind::MsDqn) == "msdqn");
    CHECK_THROWS(parse_scheduler("fifo"));
  }

  TEST_CASE("shipped presets parse") {
    for (const char* name : {"full.cfg", "desk.cfg"}) {
      CAPTURE(name);
      const auto cfg = parse_config_file(std::filesystem::path(XRSCHED_CONFIG_DIR) / name);
      CHECK(cfg.scenario.fdb_slots == 20);
    }
    const auto desk = parse_config_file(std::filesystem::path(XRSCHED_CONFIG_DIR) / "desk.cfg");
    CHECK(desk.scenario.rb_per_slot == 12);
    CHECK_THROWS(parse_config_file("/nonexistent/x.cfg"));
  }
}
