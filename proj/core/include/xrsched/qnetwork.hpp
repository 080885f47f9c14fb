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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xrsched/rlenv.hpp"

namespace xrsched {

/// Parameter array with its gradient.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> s);
  std::size_t size() const { return value.size(); }
};

/// Maps raw state rows to network inputs: remaining bits / mean frame size,
/// delay budget / fdb, bits per RB / running max, RBs left / RBs per slot.
/// Weights pass through unscaled. The default instance is the identity.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(double mean_frame_bits, int fdb_slots, int rb_per_slot);

  /// Raises the bits-per-RB scale to the largest value seen, unless frozen.
  void observe(const StateMatrix& state);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  StateRow normalize(const StateRow& row) const;
  std::vector<StateRow> normalize(std::span<const StateRow> rows) const;

  double remaining_scale() const { return remaining_scale_; }
  double rfdb_scale() const { return rfdb_scale_; }
  double c_scale() const { return c_scale_; }
  double rb_scale() const { return rb_scale_; }
  static FeatureScaler from_scales(double remaining, double rfdb, double c, double rb, bool frozen);

 private:
  double remaining_scale_ = 1.0;
  double rfdb_scale_ = 1.0;
  double c_scale_ = 1.0;
  double rb_scale_ = 1.0;
  bool frozen_ = false;
  bool c_seen_ = false;
};

/// Dueling Q-network over a variable number of rows.
///
///   features  h = relu(W3 relu(W2 relu(W1 x + b1) + b2) + b3)   per row
///   advantage A_j = wa . h_j + ba                                per row
///   value     V = wv2 . relu(Wv1 mean_j(h_j) + bv1) + bv2
///   Q_j = V + A_j - mean(A)
///
/// Every op is row-wise or a symmetric pool, so any row count works and
/// permuting rows permutes Q.
class QNetwork {
 public:
  static constexpr std::size_t kFeatures = 5;

  explicit QNetwork(std::size_t hidden = 32);

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void initialize(std::uint64_t seed);

  std::size_t hidden() const { return hidden_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const;
  /// Flat access across all tensors, in tensor order.
  double& parameter(std::size_t flat_index);
  double gradient(std::size_t flat_index) const;

  struct Output {
    double value = 0.0;
    std::vector<double> advantage;
    std::vector<double> q;
  };

  /// Intermediate activations kept for backward().
  struct Cache {
    std::size_t rows = 0;
    std::vector<double> x, h1, h2, h3, pooled, v1;
    std::vector<double> advantage;
  };

  /// Rows must already be normalised. Throws on zero rows or non-finite input.
  Output forward(std::span<const StateRow> rows) const;
  Output forward(std::span<const StateRow> rows, Cache& cache) const;

  /// Accumulates dLoss/dparam into the tensors' grad given dLoss/dQ.
  void backward(const Cache& cache, std::span<const double> dq);

  void zero_grad();
  void copy_parameters_from(const QNetwork& other);
  bool same_parameters(const QNetwork& other) const;

 private:
  std::size_t hidden_;
  std::vector<Tensor> tensors_;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::vector<Tensor>& params);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// r + gamma * max_a' Q_target(s', a'). The max term is zero when the next
/// state is empty (default action) or terminal.
double td_target(double reward, const StateMatrix& next_state, bool next_is_default,
                 const QNetwork& target_net, const FeatureScaler& scaler, double gamma);

struct LossSample {
  std::span<const StateRow> rows;  ///< normalised
  std::size_t action = 0;
  double target = 0.0;
};

/// Mean of (y - Q(s, a))^2 over the batch.
double td_loss(const QNetwork& net, std::span<const LossSample> batch);

/// td_loss plus accumulation of its gradient into net's tensors.
double td_loss_and_gradient(QNetwork& net, std::span<const LossSample> batch);

struct Checkpoint {
  QNetwork net;
  FeatureScaler scaler;
};

void save_checkpoint(std::ostream& os, const QNetwork& net, const FeatureScaler& scaler);
void save_checkpoint(const std::filesystem::path& path, const QNetwork& net,
                     const FeatureScaler& scaler);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xrsched
