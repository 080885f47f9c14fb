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

#include "xrsched/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "xrsched/rng.hpp"

namespace xrsched {

namespace {

// Absorbs representation error in (k-1)/f / dt when the exact quotient is an
// integer (e.g. 50 ms / 0.5 ms).
constexpr double kFloorSlack = 1e-9;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("traffic: " + what);
}

double slot_offset(const TrafficConfig& cfg, int k, double jitter_ms) {
  const double ms = static_cast<double>(k - 1) * 1000.0 + jitter_ms * cfg.frame_rate_fps;
  return ms / (cfg.frame_rate_fps * cfg.slot_ms);
}

}  // namespace

std::string_view to_string(FrameKind kind) { return kind == FrameKind::I ? "I" : "P"; }

void TrafficConfig::validate() const {
  require(std::isfinite(frame_rate_fps) && frame_rate_fps > 0.0, "frame_rate_fps must be > 0");
  require(initial_arrival_slot >= 0, "initial_arrival_slot must be >= 0");
  require(std::isfinite(mean_frame_bits) && mean_frame_bits > 0.0, "mean_frame_bits must be > 0");
  require(gop_length >= 1, "gop_length must be >= 1");
  require(std::isfinite(i_to_p_ratio) && i_to_p_ratio >= 1.0, "i_to_p_ratio must be >= 1");
  require(std::isfinite(weight_i) && weight_i > 0.0, "weight_i must be > 0");
  require(std::isfinite(weight_p) && weight_p > 0.0, "weight_p must be > 0");
  require(std::isfinite(jitter_ms.lower) && std::isfinite(jitter_ms.upper) &&
              jitter_ms.lower <= jitter_ms.upper,
          "jitter truncation bounds must be finite and ordered");
  require(jitter_ms.stddev >= 0.0, "jitter stddev must be >= 0");
  require(jitter_ms.mean >= jitter_ms.lower && jitter_ms.mean <= jitter_ms.upper,
          "jitter mean must lie inside its truncation bounds");
  require(size_std_fraction >= 0.0, "size_std_fraction must be >= 0");
  require(std::isfinite(size_lower_fraction) && std::isfinite(size_upper_fraction) &&
              size_lower_fraction > 0.0 && size_lower_fraction <= 1.0 &&
              size_upper_fraction >= 1.0,
          "size truncation must bracket the nominal size with a positive lower bound");
  require(std::isfinite(slot_ms) && slot_ms > 0.0, "slot_ms must be > 0");
}

int arrival_slot(const TrafficConfig& cfg, int k, double jitter_ms) {
  if (k < 1) throw std::invalid_argument("arrival_slot: k must be >= 1");
  if (!(jitter_ms >= cfg.jitter_ms.lower && jitter_ms <= cfg.jitter_ms.upper)) {
    throw std::invalid_argument(
        fmt::format("arrival_slot: jitter {} ms outside [{}, {}]", jitter_ms,
                    cfg.jitter_ms.lower, cfg.jitter_ms.upper));
  }
  return cfg.initial_arrival_slot +
         static_cast<int>(std::floor(slot_offset(cfg, k, jitter_ms) + kFloorSlack));
}

NominalSizes nominal_sizes(const TrafficConfig& cfg) {
  const double k = cfg.gop_length;
  const double p = cfg.mean_frame_bits * k / (cfg.i_to_p_ratio + k - 1.0);
  return {cfg.i_to_p_ratio * p, p};
}

FrameKind frame_kind(const TrafficConfig& cfg, int k) {
  return (k - 1) % cfg.gop_length == 0 ? FrameKind::I : FrameKind::P;
}

std::vector<FrameRecord> generate_frames(const TrafficConfig& cfg, int horizon_slots,
                                         std::uint64_t seed, int device) {
  cfg.validate();
  if (horizon_slots <= 0) throw std::invalid_argument("generate_frames: horizon_slots must be > 0");

  const NominalSizes nominal = nominal_sizes(cfg);
  Rng rng(seed);
  std::vector<FrameRecord> frames;
  int previous = 0;
  for (int k = 1;; ++k) {
    const double earliest = cfg.initial_arrival_slot +
                            std::floor(slot_offset(cfg, k, cfg.jitter_ms.lower) + kFloorSlack);
    if (earliest >= horizon_slots) break;

    const double jitter = rng.truncated_normal(cfg.jitter_ms.mean, cfg.jitter_ms.stddev,
                                               cfg.jitter_ms.lower, cfg.jitter_ms.upper);
    const FrameKind kind = frame_kind(cfg, k);
    const double base = kind == FrameKind::I ? nominal.i_bits : nominal.p_bits;
    const double size =
        rng.truncated_normal(base, cfg.size_std_fraction * base, cfg.size_lower_fraction * base,
                             cfg.size_upper_fraction * base);

    int slot = std::max({arrival_slot(cfg, k, jitter), previous, 0});
    previous = slot;
    if (slot >= horizon_slots) continue;
    frames.push_back({device, k, slot, size, kind,
                      kind == FrameKind::I ? cfg.weight_i : cfg.weight_p});
  }
  return frames;
}

void write_frame_trace_csv(std::ostream& os, std::span<const FrameRecord> frames) {
  os << "device,k,arrival_slot,bits,kind,weight\n";
  for (const auto& f : frames) {
    fmt::print(os, "{},{},{},{},{},{}\n", f.device, f.index, f.arrival_slot, f.size_bits,
               to_string(f.kind), f.weight);
  }
}

}  // namespace xrsched
