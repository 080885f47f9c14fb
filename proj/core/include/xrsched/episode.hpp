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

#include <compare>
#include <cstdint>
#include <vector>

#include "xrsched/traffic.hpp"

namespace xrsched {

/// Sum of frame weights, held in integer nano-units so that totals are
/// exact and independent of summation order.
class WeightSum {
 public:
  static constexpr std::int64_t kUnitsPerWeight = 1'000'000'000;

  constexpr WeightSum() = default;
  static WeightSum of(double weight);
  static constexpr WeightSum from_units(std::int64_t units) { return WeightSum(units); }

  constexpr std::int64_t units() const { return units_; }
  double value() const { return static_cast<double>(units_) / kUnitsPerWeight; }

  constexpr WeightSum& operator+=(WeightSum o) {
    units_ += o.units_;
    return *this;
  }
  friend constexpr WeightSum operator+(WeightSum a, WeightSum b) { return a += b; }
  friend constexpr auto operator<=>(WeightSum, WeightSum) = default;

 private:
  constexpr explicit WeightSum(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

/// (device, k) identity of a frame.
struct FrameKey {
  int device = 0;
  int index = 0;
  friend constexpr auto operator<=>(const FrameKey&, const FrameKey&) = default;
};

/// A fully materialised episode: every frame, and the channel and RB budget
/// of every slot. Slots run over [0, num_slots).
struct EpisodeInstance {
  int num_devices = 0;
  int num_slots = 0;
  int fdb_slots = 20;
  /// Canonical order: (arrival_slot, device, index).
  std::vector<FrameRecord> frames;
  std::vector<int> rb_per_slot;
  /// Slot-major, num_slots * num_devices.
  std::vector<double> bits_per_rb;
  std::vector<double> gain;

  double c(int slot, int device) const {
    return bits_per_rb[static_cast<std::size_t>(slot) * num_devices + device];
  }
  double h(int slot, int device) const {
    return gain[static_cast<std::size_t>(slot) * num_devices + device];
  }

  /// Sorts frames into canonical order.
  void canonicalize();

  /// Checks array shapes, canonical order, and that every frame's service
  /// window ends inside the episode.
  void validate() const;

  /// Sum of the weights of all frames.
  WeightSum total_weight() const;
};

/// Canonical tie-break: earlier arrival, then smaller device, then smaller k.
inline bool canonical_before(const FrameRecord& a, const FrameRecord& b) {
  if (a.arrival_slot != b.arrival_slot) return a.arrival_slot < b.arrival_slot;
  if (a.device != b.device) return a.device < b.device;
  return a.index < b.index;
}

}  // namespace xrsched
