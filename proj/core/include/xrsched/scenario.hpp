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
#include <string_view>
#include <vector>

#include "xrsched/channel.hpp"
#include "xrsched/episode.hpp"
#include "xrsched/traffic.hpp"

namespace xrsched {

class Rng;

/// How the first frames of the devices are spread over one frame period.
enum class Phasing { Random, Simultaneous, Equal };

std::string_view to_string(Phasing phasing);
Phasing parse_phasing(std::string_view text);

struct ScenarioSpec {
  TrafficConfig traffic;
  ChannelConfig channel;
  int devices = 8;
  /// Frames arrive in [0, episode_slots); the episode runs fdb_slots - 1
  /// further slots so every frame reaches its deadline.
  int episode_slots = 2000;
  int fdb_slots = 20;
  int rb_per_slot = 133;
  Phasing phasing = Phasing::Random;
};

/// Initial arrival slot per device.
///   Random:       uniform in [0, 1000/f) ms
///   Simultaneous: all 0
///   Equal:        device n at n * (1000/f)/N ms
std::vector<int> initial_arrival_slots(Phasing phasing, int devices, double frame_rate_fps,
                                       double slot_ms, Rng& rng);

/// Draws positions, phasing, frames and per-slot channel for one episode.
/// The phasing draw uses its own stream, so the same seed under two
/// phasings yields identical positions, frame sizes and fading.
EpisodeInstance make_episode(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace xrsched
