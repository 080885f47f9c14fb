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

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xrsched/rng.hpp"
#include "xrsched/traffic.hpp"

using namespace xrsched;

namespace {

TrafficConfig quiet() {
  TrafficConfig cfg;
  cfg.jitter_ms = {0.0, 0.0, -4.0, 4.0};
  cfg.size_std_fraction = 0.0;
  return cfg;
}

}  // namespace

TEST_SUITE("traffic") {
  TEST_CASE("arrival slot of the first frame is the initial slot") {
    TrafficConfig cfg;
    cfg.initial_arrival_slot = 7;
    CHECK(arrival_slot(cfg, 1, 0.0) == 7);
  }

  TEST_CASE("arrival slot of frame 3 at 60 fps") {
    TrafficConfig cfg;
    // (3 - 1) / 60 s = 33.33 ms = 66.67 slots.
    CHECK(arrival_slot(cfg, 3, 0.0) == 66);
  }

  TEST_CASE("positive jitter delays the arrival") {
    TrafficConfig cfg;
    CHECK(arrival_slot(cfg, 1, 4.0) == 8);
    CHECK(arrival_slot(cfg, 1, -4.0) == -8);
  }

  TEST_CASE("jitter outside the truncation bounds is rejected") {
    TrafficConfig cfg;
    CHECK_THROWS_AS(arrival_slot(cfg, 1, 4.01), std::invalid_argument);
    CHECK_THROWS_AS(arrival_slot(cfg, 1, -5.0), std::invalid_argument);
    CHECK_THROWS_AS(arrival_slot(cfg, 0, 0.0), std::invalid_argument);
  }

  TEST_CASE("nominal sizes solve the GOP average") {
    TrafficConfig cfg;
    const auto s = nominal_sizes(cfg);
    CHECK(s.p_bits == doctest::Approx(222222.222).epsilon(1e-9));
    CHECK(s.i_bits == doctest::Approx(333333.333).epsilon(1e-9));
    CHECK((s.i_bits + 3 * s.p_bits) / 4 == doctest::Approx(250000.0));

    cfg.i_to_p_ratio = 1.0;
    for (int k : {1, 2, 4, 9}) {
      cfg.gop_length = k;
      const auto e = nominal_sizes(cfg);
      CHECK(e.i_bits == doctest::Approx(250000.0));
      CHECK(e.p_bits == doctest::Approx(250000.0));
    }

    cfg.i_to_p_ratio = 1.5;
    cfg.gop_length = 1;
    CHECK(nominal_sizes(cfg).i_bits == doctest::Approx(250000.0));
  }

  TEST_CASE("one I-frame per GOP at k = 1 mod K") {
    TrafficConfig cfg;
    for (int k = 1; k <= 40; ++k) {
      CHECK((frame_kind(cfg, k) == FrameKind::I) == ((k - 1) % cfg.gop_length == 0));
    }
    cfg.gop_length = 1;
    for (int k = 1; k <= 10; ++k) CHECK(frame_kind(cfg, k) == FrameKind::I);
  }

  TEST_CASE("degenerate distributions reproduce arrival_slot and nominal_sizes") {
    const TrafficConfig cfg = quiet();
    const auto frames = generate_frames(cfg, 2000, 5);
    const auto nominal = nominal_sizes(cfg);
    REQUIRE(!frames.empty());
    for (const auto& f : frames) {
      CHECK(f.arrival_slot == arrival_slot(cfg, f.index, 0.0));
      const bool is_i = f.kind == FrameKind::I;
      CHECK(f.size_bits == (is_i ? nominal.i_bits : nominal.p_bits));
      CHECK(f.weight == (is_i ? cfg.weight_i : cfg.weight_p));
    }
  }

  TEST_CASE("same seed gives the same frame list") {
    TrafficConfig cfg;
    const auto a = generate_frames(cfg, 2000, 99, 3);
    const auto b = generate_frames(cfg, 2000, 99, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].arrival_slot == b[i].arrival_slot);
      CHECK(a[i].size_bits == b[i].size_bits);
      CHECK(a[i].device == 3);
    }
    const auto c = generate_frames(cfg, 2000, 100, 3);
    bool differs = false;
    for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) differs |= a[i].size_bits != c[i].size_bits;
    CHECK(differs);
  }

  TEST_CASE("one second of video at 60 fps holds 60 frames") {
    // Count k with t0 + floor((k-1) * 1000/60 / 0.5) < 2000 by enumeration.
    int expected = 0;
    for (int k = 1; k < 1000; ++k) {
      if (std::floor((k - 1) * (1000.0 / 60.0) / 0.5) < 2000) ++expected;
    }
    CHECK(expected == 60);
    TrafficConfig cfg;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto n = static_cast<int>(generate_frames(cfg, 2000, seed).size());
      CHECK(std::abs(n - expected) <= 1);
    }
    CHECK(static_cast<int>(generate_frames(quiet(), 2000, 0).size()) == expected);
  }

  TEST_CASE("zero-jitter arrival gaps are 33 or 34 slots") {
    const auto frames = generate_frames(quiet(), 20000, 1);
    std::set<int> gaps;
    for (std::size_t i = 1; i < frames.size(); ++i) gaps.insert(frames[i].arrival_slot - frames[i - 1].arrival_slot);
    CHECK(gaps == std::set<int>{33, 34});
  }

  TEST_CASE("sampled sizes and arrivals stay in bounds") {
    TrafficConfig cfg;
    cfg.initial_arrival_slot = 3;
    const auto nominal = nominal_sizes(cfg);
    const auto frames = generate_frames(cfg, 200000, 17);
    int prev = -1;
    for (const auto& f : frames) {
      const double base = f.kind == FrameKind::I ? nominal.i_bits : nominal.p_bits;
      CHECK(f.size_bits >= cfg.size_lower_fraction * base);
      CHECK(f.size_bits <= cfg.size_upper_fraction * base);
      const int lo = arrival_slot(cfg, f.index, cfg.jitter_ms.lower);
      const int hi = arrival_slot(cfg, f.index, cfg.jitter_ms.upper);
      CHECK(f.arrival_slot >= std::max(0, std::min(lo, prev)));
      CHECK(f.arrival_slot <= std::max(hi, prev));
      CHECK(f.arrival_slot >= prev);
      CHECK(f.arrival_slot < 200000);
      prev = f.arrival_slot;
    }
  }

  TEST_CASE("empirical mean frame size is within 1% of the configured mean") {
    TrafficConfig cfg;
    // 1e5 frames take 100000 * 200/6 slots.
    const auto frames = generate_frames(cfg, 3'400'000, 2024);
    REQUIRE(frames.size() >= 100000);
    double sum = 0.0;
    for (const auto& f : frames) sum += f.size_bits;
    const double mean = sum / static_cast<double>(frames.size());
    CHECK(std::abs(mean - cfg.mean_frame_bits) / cfg.mean_frame_bits < 0.01);
  }

  TEST_CASE("truncated normal samples respect their bounds") {
    Rng rng(3);
    for (int i = 0; i < 100000; ++i) {
      const double x = rng.truncated_normal(0.0, 2.0, -4.0, 4.0);
      REQUIRE(x >= -4.0);
      REQUIRE(x <= 4.0);
    }
    CHECK(rng.truncated_normal(10.0, 0.0, -4.0, 4.0) == 4.0);
  }

  TEST_CASE("invalid configs are rejected") {
    TrafficConfig cfg;
    cfg.frame_rate_fps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrafficConfig{};
    cfg.gop_length = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrafficConfig{};
    cfg.i_to_p_ratio = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrafficConfig{};
    cfg.weight_p = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("frame trace CSV") {
    const auto frames = generate_frames(quiet(), 200, 1, 2);
    std::ostringstream os;
    write_frame_trace_csv(os, frames);
    const std::string text = os.str();
    CHECK(text.rfind("device,k,arrival_slot,bits,kind,weight\n", 0) == 0);
    CHECK(text.find("\n2,1,0,") != std::string::npos);
  }
}
