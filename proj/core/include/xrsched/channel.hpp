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
#include <span>
#include <string_view>
#include <vector>

namespace xrsched {

class Rng;

enum class Fading { None, BlockRayleigh };

std::string_view to_string(Fading fading);
Fading parse_fading(std::string_view text);

/// Downlink radio parameters. The base station sits at the centre of a
/// square cell of side `cell_side_m`.
struct ChannelConfig {
  double tx_power_w = 0.2;
  double rb_bandwidth_hz = 360e3;
  double noise_psd_w_per_hz = 1e-3 * 3.981071705534972e-18;  // -174 dBm/Hz
  double carrier_hz = 3.5e9;
  double cell_side_m = 500.0;
  double bs_height_m = 10.0;
  double ue_height_m = 1.5;
  Fading fading = Fading::BlockRayleigh;
  double slot_s = 0.5e-3;

  void validate() const;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Per-device channel in one slot.
struct ChannelState {
  std::vector<double> gain;         ///< linear power gain h
  std::vector<double> bits_per_rb;  ///< c
};

/// slot_s * bandwidth * log2(1 + p*h / (bandwidth * noise_psd)).
double bits_per_rb(double tx_power_w, double gain, double rb_bandwidth_hz,
                   double noise_psd_w_per_hz, double slot_s);

/// UMi street-canyon LOS pathloss in dB at the given 3D distance.
double umi_pathloss_db(double distance_3d_m, double carrier_hz);

/// Linear pathloss gain from the base station to `pos`.
double pathloss_gain(const ChannelConfig& cfg, Position pos);

/// Uniform placement inside the cell square.
std::vector<Position> place_devices(const ChannelConfig& cfg, int count, Rng& rng);

/// Gains and per-RB bits for every device in `slot`. Fading draws depend
/// only on (seed, slot, device), so any slot can be sampled independently.
ChannelState sample_slot_gains(const ChannelConfig& cfg, std::span<const Position> positions,
                               int slot, std::uint64_t seed);

}  // namespace xrsched
