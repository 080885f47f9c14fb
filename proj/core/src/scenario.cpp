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

#include "xrsched/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "xrsched/rng.hpp"

namespace xrsched {

namespace {

enum Stream : std::uint64_t { kPositions = 1, kPhasing = 2, kTraffic = 3, kFading = 4 };

}  // namespace

std::string_view to_string(Phasing phasing) {
  switch (phasing) {
    case Phasing::Random: return "random";
    case Phasing::Simultaneous: return "simultaneous";
    case Phasing::Equal: return "equal";
  }
  return "?";
}

Phasing parse_phasing(std::string_view text) {
  if (text == "random") return Phasing::Random;
  if (text == "simultaneous") return Phasing::Simultaneous;
  if (text == "equal") return Phasing::Equal;
  throw std::invalid_argument("unknown phasing '" + std::string(text) + "'");
}

std::vector<int> initial_arrival_slots(Phasing phasing, int devices, double frame_rate_fps,
                                       double slot_ms, Rng& rng) {
  const double period_ms = 1000.0 / frame_rate_fps;
  std::vector<int> out(static_cast<std::size_t>(devices), 0);
  for (int n = 0; n < devices; ++n) {
    double ms = 0.0;
    switch (phasing) {
      case Phasing::Random: ms = rng.uniform(0.0, period_ms); break;
      case Phasing::Simultaneous: ms = 0.0; break;
      case Phasing::Equal: ms = n * period_ms / devices; break;
    }
    out[static_cast<std::size_t>(n)] = static_cast<int>(std::floor(ms / slot_ms + 1e-9));
  }
  return out;
}

EpisodeInstance make_episode(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.devices < 1) throw std::invalid_argument("scenario: devices must be >= 1");
  if (spec.episode_slots < 1) throw std::invalid_argument("scenario: episode_slots must be >= 1");
  if (spec.fdb_slots < 1) throw std::invalid_argument("scenario: fdb_slots must be >= 1");
  if (spec.rb_per_slot < 0) throw std::invalid_argument("scenario: rb_per_slot must be >= 0");
  spec.traffic.validate();
  spec.channel.validate();
  if (std::abs(spec.channel.slot_s * 1e3 - spec.traffic.slot_ms) > 1e-9 * spec.traffic.slot_ms)
    throw std::invalid_argument("scenario: channel and traffic slot lengths differ");

  EpisodeInstance ep;
  ep.num_devices = spec.devices;
  ep.num_slots = spec.episode_slots + spec.fdb_slots - 1;
  ep.fdb_slots = spec.fdb_slots;
  ep.rb_per_slot.assign(static_cast<std::size_t>(ep.num_slots), spec.rb_per_slot);

  Rng position_rng(derive_seed(seed, {kPositions}));
  const auto positions = place_devices(spec.channel, spec.devices, position_rng);

  Rng phasing_rng(derive_seed(seed, {kPhasing}));
  const auto starts = initial_arrival_slots(spec.phasing, spec.devices,
                                            spec.traffic.frame_rate_fps, spec.traffic.slot_ms,
                                            phasing_rng);

  for (int n = 0; n < spec.devices; ++n) {
    TrafficConfig tc = spec.traffic;
    tc.initial_arrival_slot = starts[static_cast<std::size_t>(n)];
    auto frames = generate_frames(tc, spec.episode_slots,
                                  derive_seed(seed, {kTraffic, static_cast<std::uint64_t>(n)}), n);
    ep.frames.insert(ep.frames.end(), frames.begin(), frames.end());
  }
  ep.canonicalize();

  const std::uint64_t fading_seed = derive_seed(seed, {kFading});
  const auto cells = static_cast<std::size_t>(ep.num_slots) * spec.devices;
  ep.bits_per_rb.reserve(cells);
  ep.gain.reserve(cells);
  for (int t = 0; t < ep.num_slots; ++t) {
    auto st = sample_slot_gains(spec.channel, positions, t, fading_seed);
    ep.bits_per_rb.insert(ep.bits_per_rb.end(), st.bits_per_rb.begin(), st.bits_per_rb.end());
    ep.gain.insert(ep.gain.end(), st.gain.begin(), st.gain.end());
  }
  ep.validate();
  return ep;
}

}  // namespace xrsched
