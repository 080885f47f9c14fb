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
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace xrsched {

enum class FrameKind { I, P };

std::string_view to_string(FrameKind kind);

/// Gaussian restricted to [lower, upper].
struct TruncatedGaussian {
  double mean = 0.0;
  double stddev = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Per-device XR video source.
///
/// Frame k (1-based) arrives at slot
///   initial_arrival_slot + floor(((k-1)/frame_rate + jitter) / slot_length)
/// and is an I-frame iff (k-1) mod gop_length == 0.
struct TrafficConfig {
  double frame_rate_fps = 60.0;
  int initial_arrival_slot = 0;
  double mean_frame_bits = 250'000.0;
  int gop_length = 4;
  double i_to_p_ratio = 1.5;
  double weight_i = 1.0;
  double weight_p = 0.1;
  /// Arrival jitter in milliseconds.
  TruncatedGaussian jitter_ms{0.0, 2.0, -4.0, 4.0};
  /// Frame size spread, as fractions of the nominal per-kind size.
  double size_std_fraction = 0.105;
  double size_lower_fraction = 0.5;
  double size_upper_fraction = 1.5;
  double slot_ms = 0.5;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct FrameRecord {
  int device = 0;
  int index = 1;  ///< k, 1-based
  int arrival_slot = 0;
  double size_bits = 0.0;
  FrameKind kind = FrameKind::I;
  double weight = 1.0;
};

struct NominalSizes {
  double i_bits = 0.0;
  double p_bits = 0.0;
};

/// Arrival slot of frame k with the given jitter (ms). Throws if the jitter
/// lies outside the configured truncation bounds.
int arrival_slot(const TrafficConfig& cfg, int k, double jitter_ms);

/// I/P sizes with i = ratio * p and GOP-average equal to mean_frame_bits.
NominalSizes nominal_sizes(const TrafficConfig& cfg);

FrameKind frame_kind(const TrafficConfig& cfg, int k);

/// All frames of one device arriving before `horizon_slots`, in k order.
/// Arrival slots are clamped to be non-negative and non-decreasing in k.
std::vector<FrameRecord> generate_frames(const TrafficConfig& cfg, int horizon_slots,
                                         std::uint64_t seed, int device = 0);

/// CSV `device,k,arrival_slot,bits,kind,weight`.
void write_frame_trace_csv(std::ostream& os, std::span<const FrameRecord> frames);

}  // namespace xrsched
