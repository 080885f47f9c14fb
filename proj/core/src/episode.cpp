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

#include "xrsched/episode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace xrsched {

WeightSum WeightSum::of(double weight) {
  if (!std::isfinite(weight) || weight < 0.0 || weight > 1e6) {
    throw std::invalid_argument(fmt::format("weight {} outside [0, 1e6]", weight));
  }
  return WeightSum(std::llround(weight * kUnitsPerWeight));
}

void EpisodeInstance::canonicalize() { std::sort(frames.begin(), frames.end(), canonical_before); }

void EpisodeInstance::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("episode: " + what); };
  if (num_devices < 1) fail("num_devices must be >= 1");
  if (num_slots < 1) fail("num_slots must be >= 1");
  if (fdb_slots < 1) fail("fdb_slots must be >= 1");
  const auto cells = static_cast<std::size_t>(num_slots) * num_devices;
  if (rb_per_slot.size() != static_cast<std::size_t>(num_slots)) fail("rb_per_slot size");
  if (bits_per_rb.size() != cells || gain.size() != cells) fail("channel array size");
  for (int rb : rb_per_slot)
    if (rb < 0) fail("negative RB budget");
  for (std::size_t i = 0; i < cells; ++i) {
    if (!(bits_per_rb[i] >= 0.0) || !std::isfinite(bits_per_rb[i])) fail("bits_per_rb must be >= 0");
    if (!(gain[i] >= 0.0) || !std::isfinite(gain[i])) fail("gain must be >= 0");
  }
  std::set<FrameKey> seen;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.device < 0 || f.device >= num_devices) fail("frame device out of range");
    if (!(f.size_bits > 0.0)) fail("frame size must be > 0");
    if (f.arrival_slot < 0 || f.arrival_slot + fdb_slots > num_slots) {
      fail(fmt::format("frame ({},{}) service window [{}, {}) exceeds {} slots", f.device,
                       f.index, f.arrival_slot, f.arrival_slot + fdb_slots, num_slots));
    }
    if (!seen.insert({f.device, f.index}).second) fail("duplicate frame key");
    if (i > 0 && canonical_before(f, frames[i - 1])) fail("frames not in canonical order");
    (void)WeightSum::of(f.weight);
  }
}

WeightSum EpisodeInstance::total_weight() const {
  WeightSum s;
  for (const auto& f : frames) s += WeightSum::of(f.weight);
  return s;
}

}  // namespace xrsched
