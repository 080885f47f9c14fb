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

#include "xrsched/qnetwork.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "xrsched/rng.hpp"

namespace xrsched {

namespace {

// Tensor slots.
enum : std::size_t {
  kW1, kB1, kW2, kB2, kW3, kB3, kWa, kBa, kWv1, kBv1, kWv2, kBv2, kTensorCount
};

constexpr const char* kMagic = "xrsched-qnetwork";
constexpr int kFormatVersion = 1;

// out[o] = b[o] + sum_i W[o*nin + i] * in[i], optionally rectified.
void dense(const double* w, const double* b, const double* in, std::size_t nin, std::size_t nout,
           double* out, bool relu) {
  for (std::size_t o = 0; o < nout; ++o) {
    const double* row = w + o * nin;
    double acc = b[o];
    for (std::size_t i = 0; i < nin; ++i) acc += row[i] * in[i];
    out[o] = relu && acc < 0.0 ? 0.0 : acc;
  }
}

// Given dout (already masked by the activation derivative), accumulate
// dW += dout (x) in, db += dout, and optionally din = W^T dout.
void dense_backward(const double* w, double* dw, double* db, const double* in, const double* dout,
                    std::size_t nin, std::size_t nout, double* din) {
  if (din != nullptr) std::fill(din, din + nin, 0.0);
  for (std::size_t o = 0; o < nout; ++o) {
    const double g = dout[o];
    if (g == 0.0) continue;
    db[o] += g;
    double* dwrow = dw + o * nin;
    const double* wrow = w + o * nin;
    for (std::size_t i = 0; i < nin; ++i) dwrow[i] += g * in[i];
    if (din != nullptr) {
      for (std::size_t i = 0; i < nin; ++i) din[i] += g * wrow[i];
    }
  }
}

void relu_mask(const double* activation, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(activation[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

Tensor::Tensor(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
}

FeatureScaler::FeatureScaler(double mean_frame_bits, int fdb_slots, int rb_per_slot)
    : remaining_scale_(mean_frame_bits),
      rfdb_scale_(fdb_slots),
      c_scale_(1.0),
      rb_scale_(std::max(rb_per_slot, 1)) {
  if (!(mean_frame_bits > 0.0) || fdb_slots < 1) {
    throw std::invalid_argument("FeatureScaler: scales must be positive");
  }
}

FeatureScaler FeatureScaler::from_scales(double remaining, double rfdb, double c, double rb,
                                         bool frozen) {
  for (double s : {remaining, rfdb, c, rb}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("FeatureScaler: bad scale");
  }
  FeatureScaler f;
  f.remaining_scale_ = remaining;
  f.rfdb_scale_ = rfdb;
  f.c_scale_ = c;
  f.rb_scale_ = rb;
  f.frozen_ = frozen;
  f.c_seen_ = true;
  return f;
}

void FeatureScaler::observe(const StateMatrix& state) {
  if (frozen_) return;
  for (const auto& row : state.rows) {
    const double c = row[kBitsPerRb];
    if (c > 0.0 && (!c_seen_ || c > c_scale_)) {
      c_scale_ = c;
      c_seen_ = true;
    }
  }
}

StateRow FeatureScaler::normalize(const StateRow& row) const {
  return {row[kWeight], row[kRemaining] / remaining_scale_, row[kRfdb] / rfdb_scale_,
          row[kBitsPerRb] / c_scale_, row[kRbLeft] / rb_scale_};
}

std::vector<StateRow> FeatureScaler::normalize(std::span<const StateRow> rows) const {
  std::vector<StateRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(normalize(r));
  return out;
}

QNetwork::QNetwork(std::size_t hidden) : hidden_(hidden) {
  if (hidden == 0) throw std::invalid_argument("QNetwork: hidden width must be > 0");
  const std::size_t h = hidden;
  tensors_.resize(kTensorCount);
  tensors_[kW1] = Tensor("embed.weight", {h, kFeatures});
  tensors_[kB1] = Tensor("embed.bias", {h});
  tensors_[kW2] = Tensor("conv1.weight", {h, h});
  tensors_[kB2] = Tensor("conv1.bias", {h});
  tensors_[kW3] = Tensor("conv2.weight", {h, h});
  tensors_[kB3] = Tensor("conv2.bias", {h});
  tensors_[kWa] = Tensor("advantage.weight", {1, h});
  tensors_[kBa] = Tensor("advantage.bias", {1});
  tensors_[kWv1] = Tensor("value1.weight", {h, h});
  tensors_[kBv1] = Tensor("value1.bias", {h});
  tensors_[kWv2] = Tensor("value2.weight", {1, h});
  tensors_[kBv2] = Tensor("value2.bias", {1});
}

void QNetwork::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& t : tensors_) {
    if (t.shape.size() == 1) {
      std::fill(t.value.begin(), t.value.end(), 0.0);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.shape[1]));
    for (auto& v : t.value) v = rng.uniform(-bound, bound);
  }
  zero_grad();
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

double& QNetwork::parameter(std::size_t flat_index) {
  for (auto& t : tensors_) {
    if (flat_index < t.size()) return t.value[flat_index];
    flat_index -= t.size();
  }
  throw std::out_of_range("QNetwork::parameter: index out of range");
}

double QNetwork::gradient(std::size_t flat_index) const {
  for (const auto& t : tensors_) {
    if (flat_index < t.size()) return t.grad[flat_index];
    flat_index -= t.size();
  }
  throw std::out_of_range("QNetwork::gradient: index out of range");
}

QNetwork::Output QNetwork::forward(std::span<const StateRow> rows) const {
  Cache cache;
  return forward(rows, cache);
}

QNetwork::Output QNetwork::forward(std::span<const StateRow> rows, Cache& cache) const {
  if (rows.empty()) throw std::invalid_argument("QNetwork::forward: state has no rows");
  const std::size_t r = rows.size();
  const std::size_t h = hidden_;
  cache.rows = r;
  cache.x.resize(r * kFeatures);
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t f = 0; f < kFeatures; ++f) {
      const double v = rows[j][f];
      if (!std::isfinite(v)) throw std::invalid_argument("QNetwork::forward: non-finite input");
      cache.x[j * kFeatures + f] = v;
    }
  }
  cache.h1.resize(r * h);
  cache.h2.resize(r * h);
  cache.h3.resize(r * h);
  cache.advantage.resize(r);
  cache.pooled.assign(h, 0.0);
  cache.v1.resize(h);

  const auto& T = tensors_;
  for (std::size_t j = 0; j < r; ++j) {
    dense(T[kW1].value.data(), T[kB1].value.data(), &cache.x[j * kFeatures], kFeatures, h,
          &cache.h1[j * h], true);
    dense(T[kW2].value.data(), T[kB2].value.data(), &cache.h1[j * h], h, h, &cache.h2[j * h], true);
    dense(T[kW3].value.data(), T[kB3].value.data(), &cache.h2[j * h], h, h, &cache.h3[j * h], true);
    dense(T[kWa].value.data(), T[kBa].value.data(), &cache.h3[j * h], h, 1, &cache.advantage[j],
          false);
    for (std::size_t i = 0; i < h; ++i) cache.pooled[i] += cache.h3[j * h + i];
  }
  for (auto& p : cache.pooled) p /= static_cast<double>(r);
  dense(T[kWv1].value.data(), T[kBv1].value.data(), cache.pooled.data(), h, h, cache.v1.data(), true);
  double value = 0.0;
  dense(T[kWv2].value.data(), T[kBv2].value.data(), cache.v1.data(), h, 1, &value, false);

  double mean_a = 0.0;
  for (double a : cache.advantage) mean_a += a;
  mean_a /= static_cast<double>(r);

  Output out;
  out.value = value;
  out.advantage = cache.advantage;
  out.q.resize(r);
  for (std::size_t j = 0; j < r; ++j) out.q[j] = value + (cache.advantage[j] - mean_a);
  return out;
}

void QNetwork::backward(const Cache& cache, std::span<const double> dq) {
  const std::size_t r = cache.rows;
  const std::size_t h = hidden_;
  if (dq.size() != r) throw std::invalid_argument("QNetwork::backward: gradient size mismatch");
  auto& T = tensors_;

  double dv = 0.0;
  for (double g : dq) dv += g;
  const double mean_dq = dv / static_cast<double>(r);

  // Value head.
  std::vector<double> dv1(h), dpooled(h);
  T[kBv2].grad[0] += dv;
  for (std::size_t i = 0; i < h; ++i) {
    T[kWv2].grad[i] += dv * cache.v1[i];
    dv1[i] = dv * T[kWv2].value[i];
  }
  relu_mask(cache.v1.data(), dv1.data(), h);
  dense_backward(T[kWv1].value.data(), T[kWv1].grad.data(), T[kBv1].grad.data(),
                 cache.pooled.data(), dv1.data(), h, h, dpooled.data());
  for (auto& g : dpooled) g /= static_cast<double>(r);

  // Per-row trunk and advantage head.
  std::vector<double> dh3(h), dh2(h), dh1(h);
  for (std::size_t j = 0; j < r; ++j) {
    const double da = dq[j] - mean_dq;
    const double* h3 = &cache.h3[j * h];
    const double* h2 = &cache.h2[j * h];
    const double* h1 = &cache.h1[j * h];
    T[kBa].grad[0] += da;
    for (std::size_t i = 0; i < h; ++i) {
      T[kWa].grad[i] += da * h3[i];
      dh3[i] = da * T[kWa].value[i] + dpooled[i];
    }
    relu_mask(h3, dh3.data(), h);
    dense_backward(T[kW3].value.data(), T[kW3].grad.data(), T[kB3].grad.data(), h2, dh3.data(), h,
                   h, dh2.data());
    relu_mask(h2, dh2.data(), h);
    dense_backward(T[kW2].value.data(), T[kW2].grad.data(), T[kB2].grad.data(), h1, dh2.data(), h,
                   h, dh1.data());
    relu_mask(h1, dh1.data(), h);
    dense_backward(T[kW1].value.data(), T[kW1].grad.data(), T[kB1].grad.data(),
                   &cache.x[j * kFeatures], dh1.data(), kFeatures, h, nullptr);
  }
}

void QNetwork::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void QNetwork::copy_parameters_from(const QNetwork& other) {
  if (other.hidden_ != hidden_) throw std::invalid_argument("QNetwork: width mismatch");
  for (std::size_t i = 0; i < tensors_.size(); ++i) tensors_[i].value = other.tensors_[i].value;
}

bool QNetwork::same_parameters(const QNetwork& other) const {
  if (other.hidden_ != hidden_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].value != other.tensors_[i].value) return false;
  }
  return true;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("Adam: learning rate must be > 0");
}

void Adam::step(std::vector<Tensor>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double td_target(double reward, const StateMatrix& next_state, bool next_is_default,
                 const QNetwork& target_net, const FeatureScaler& scaler, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("td_target: gamma must be in (0,1)");
  if (next_is_default || next_state.empty()) return reward;
  const auto rows = scaler.normalize(next_state.rows);
  const auto out = target_net.forward(rows);
  return reward + gamma * *std::max_element(out.q.begin(), out.q.end());
}

double td_loss(const QNetwork& net, std::span<const LossSample> batch) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : batch) {
    const auto out = net.forward(s.rows);
    const double e = s.target - out.q.at(s.action);
    sum += e * e;
  }
  return sum / static_cast<double>(batch.size());
}

double td_loss_and_gradient(QNetwork& net, std::span<const LossSample> batch) {
  if (batch.empty()) return 0.0;
  const double scale = 2.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  QNetwork::Cache cache;
  std::vector<double> dq;
  for (const auto& s : batch) {
    const auto out = net.forward(s.rows, cache);
    const double e = out.q.at(s.action) - s.target;
    sum += e * e;
    dq.assign(out.q.size(), 0.0);
    dq[s.action] = scale * e;
    net.backward(cache, dq);
  }
  return sum / static_cast<double>(batch.size());
}

void save_checkpoint(std::ostream& os, const QNetwork& net, const FeatureScaler& scaler) {
  fmt::print(os, "{} {}\n", kMagic, kFormatVersion);
  fmt::print(os, "hidden {}\n", net.hidden());
  fmt::print(os, "scaler {:a} {:a} {:a} {:a} {}\n", scaler.remaining_scale(), scaler.rfdb_scale(),
             scaler.c_scale(), scaler.rb_scale(), scaler.frozen() ? 1 : 0);
  fmt::print(os, "tensors {}\n", net.tensors().size());
  for (const auto& t : net.tensors()) {
    fmt::print(os, "tensor {} {}", t.name, t.shape.size());
    for (auto d : t.shape) fmt::print(os, " {}", d);
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) fmt::print(os, "{}{:a}", i == 0 ? "" : " ", t.value[i]);
    os << '\n';
  }
  os << "end\n";
}

void save_checkpoint(const std::filesystem::path& path, const QNetwork& net,
                     const FeatureScaler& scaler) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  save_checkpoint(os, net, scaler);
}

namespace {

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  }
  return v;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) {
    throw std::runtime_error("checkpoint: expected '" + word + "', found '" + tok + "'");
  }
}

}  // namespace

Checkpoint load_checkpoint(std::istream& is) {
  expect(is, kMagic);
  int version = 0;
  if (!(is >> version) || version != kFormatVersion) {
    throw std::runtime_error(fmt::format("checkpoint: unsupported version {}", version));
  }
  expect(is, "hidden");
  std::size_t hidden = 0;
  if (!(is >> hidden) || hidden == 0) throw std::runtime_error("checkpoint: bad hidden width");
  expect(is, "scaler");
  std::string s[4];
  int frozen = 0;
  is >> s[0] >> s[1] >> s[2] >> s[3] >> frozen;
  if (!is) throw std::runtime_error("checkpoint: truncated scaler line");
  Checkpoint ck{QNetwork(hidden),
                FeatureScaler::from_scales(parse_double(s[0]), parse_double(s[1]),
                                           parse_double(s[2]), parse_double(s[3]), frozen != 0)};
  expect(is, "tensors");
  std::size_t count = 0;
  is >> count;
  if (count != ck.net.tensors().size()) throw std::runtime_error("checkpoint: tensor count mismatch");
  for (auto& t : ck.net.tensors()) {
    expect(is, "tensor");
    std::string name;
    std::size_t rank = 0;
    is >> name >> rank;
    if (name != t.name || rank != t.shape.size()) {
      throw std::runtime_error("checkpoint: unexpected tensor '" + name + "'");
    }
    for (auto d : t.shape) {
      std::size_t got = 0;
      if (!(is >> got) || got != d) throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    for (auto& v : t.value) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated tensor " + name);
      v = parse_double(tok);
    }
  }
  expect(is, "end");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(is);
}

}  // namespace xrsched
