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

#include "xrsched/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "xrsched/rng.hpp"

namespace xrsched {

std::string_view to_string(Fading fading) {
  return fading == Fading::None ? "none" : "rayleigh";
}

Fading parse_fading(std::string_view text) {
  if (text == "none") return Fading::None;
  if (text == "rayleigh" || text == "block-rayleigh") return Fading::BlockRayleigh;
  throw std::invalid_argument("unknown fading model '" + std::string(text) + "'");
}

void ChannelConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0))
      throw std::invalid_argument(std::string("channel: ") + name + " must be finite and > 0");
  };
  positive(tx_power_w, "tx_power_w");
  positive(rb_bandwidth_hz, "rb_bandwidth_hz");
  positive(noise_psd_w_per_hz, "noise_psd_w_per_hz");
  positive(carrier_hz, "carrier_hz");
  positive(cell_side_m, "cell_side_m");
  positive(slot_s, "slot_s");
  positive(ue_height_m, "ue_height_m");
  positive(bs_height_m, "bs_height_m");
}

double bits_per_rb(double tx_power_w, double gain, double rb_bandwidth_hz,
                   double noise_psd_w_per_hz, double slot_s) {
  const double snr = tx_power_w * gain / (rb_bandwidth_hz * noise_psd_w_per_hz);
  return slot_s * rb_bandwidth_hz * std::log2(1.0 + snr);
}

double umi_pathloss_db(double distance_3d_m, double carrier_hz) {
  return 32.4 + 21.0 * std::log10(distance_3d_m) + 20.0 * std::log10(carrier_hz / 1e9);
}

double pathloss_gain(const ChannelConfig& cfg, Position pos) {
  const double dx = pos.x - cfg.cell_side_m / 2.0;
  const double dy = pos.y - cfg.cell_side_m / 2.0;
  const double dz = cfg.bs_height_m - cfg.ue_height_m;
  const double d3 = std::sqrt(dx * dx + dy * dy + dz * dz);
  return std::pow(10.0, -umi_pathloss_db(d3, cfg.carrier_hz) / 10.0);
}

std::vector<Position> place_devices(const ChannelConfig& cfg, int count, Rng& rng) {
  std::vector<Position> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = rng.uniform(0.0, cfg.cell_side_m);
    const double y = rng.uniform(0.0, cfg.cell_side_m);
    out.push_back({x, y});
  }
  return out;
}

ChannelState sample_slot_gains(const ChannelConfig& cfg, std::span<const Position> positions,
                               int slot, std::uint64_t seed) {
  ChannelState st;
  st.gain.reserve(positions.size());
  st.bits_per_rb.reserve(positions.size());
  for (std::size_t n = 0; n < positions.size(); ++n) {
    double h = pathloss_gain(cfg, positions[n]);
    if (cfg.fading == Fading::BlockRayleigh) {
      Rng draw(derive_seed(seed, {static_cast<std::uint64_t>(slot), n}));
      h *= draw.exponential();
    }
    st.gain.push_back(h);
    st.bits_per_rb.push_back(
        bits_per_rb(cfg.tx_power_w, h, cfg.rb_bandwidth_hz, cfg.noise_psd_w_per_hz, cfg.slot_s));
  }
  return st;
}

}  // namespace xrsched
