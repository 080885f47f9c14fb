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

#include <cstddef>
#include <span>

namespace xrsched {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); zero for n < 2.
  double stddev = 0.0;
};

Summary summarize(std::span<const double> xs);

struct PairedTest {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double t = 0.0;
  /// One-sided p-value for mean(a - b) > 0.
  double p_value = 1.0;
};

/// One-sided paired t-test of a against b. Zero-variance differences give
/// p = 0 when the mean difference is positive and 1 otherwise.
PairedTest paired_t_test_greater(std::span<const double> a, std::span<const double> b);

}  // namespace xrsched
