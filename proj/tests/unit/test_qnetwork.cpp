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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gradcheck.hpp"
#include "xrsched/qnetwork.hpp"

using namespace xrsched;
using xrsched::testing::check_gradient;
using xrsched::testing::random_rows;

namespace {

QNetwork seeded(std::uint64_t seed, std::size_t hidden = 32) {
  QNetwork net(hidden);
  net.initialize(seed);
  return net;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::size_t tensor_offset(const QNetwork& net, const std::string& name) {
  std::size_t off = 0;
  for (const auto& t : net.tensors()) {
    if (t.name == name) return off;
    off += t.size();
  }
  throw std::out_of_range(name);
}

}  // namespace

TEST_SUITE("qnetwork") {
  TEST_CASE("dueling decomposition holds") {
    const auto net = seeded(1);
    Rng rng(2);
    for (std::size_t n : {1u, 2u, 7u, 32u}) {
      const auto out = net.forward(random_rows(rng, n));
      REQUIRE(out.q.size() == n);
      const double ma = mean(out.advantage);
      for (std::size_t j = 0; j < n; ++j) CHECK(out.q[j] == doctest::Approx(out.value + out.advantage[j] - ma));
      CHECK(mean(out.q) == doctest::Approx(out.value));
    }
  }

  TEST_CASE("a single row has Q equal to V") {
    const auto net = seeded(3);
    Rng rng(4);
    const auto out = net.forward(random_rows(rng, 1));
    CHECK(out.q[0] == doctest::Approx(out.value).epsilon(1e-12));
  }

  TEST_CASE("identical rows get identical Q") {
    const auto net = seeded(5);
    Rng rng(6);
    const auto row = random_rows(rng, 1)[0];
    const std::vector<StateRow> rows(6, row);
    const auto out = net.forward(rows);
    for (double q : out.q) CHECK(q == out.q[0]);
  }

  TEST_CASE("duplicating every row leaves each Q unchanged") {
    const auto net = seeded(7);
    Rng rng(8);
    const auto rows = random_rows(rng, 4);
    auto doubled = rows;
    doubled.insert(doubled.end(), rows.begin(), rows.end());
    const auto a = net.forward(rows);
    const auto b = net.forward(doubled);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      CHECK(b.q[j] == doctest::Approx(a.q[j]).epsilon(1e-12));
      CHECK(b.q[j + rows.size()] == doctest::Approx(a.q[j]).epsilon(1e-12));
    }
  }

  TEST_CASE("permuting rows permutes Q") {
    const auto net = seeded(9);
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + rng.index(12);
      const auto rows = random_rows(rng, n);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
      std::vector<StateRow> shuffled;
      for (auto p : perm) shuffled.push_back(rows[p]);
      const auto a = net.forward(rows);
      const auto b = net.forward(shuffled);
      for (std::size_t j = 0; j < n; ++j) CHECK(b.q[j] == doctest::Approx(a.q[perm[j]]).epsilon(1e-10));
    }
  }

  TEST_CASE("backward matches finite differences") {
    Rng rng(11);
    for (std::size_t n : {1u, 3u, 9u}) {
      const auto net = seeded(12 + n, 8);
      const auto rows = random_rows(rng, n);
      std::vector<double> dq(n);
      for (auto& d : dq) d = rng.uniform(-1.0, 1.0);
      const auto r = check_gradient(net, rows, dq);
      CHECK(r.checked == net.parameter_count());
      CHECK(r.max_rel_error < 1e-4);
    }
  }

  TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    auto net = seeded(20);
    Rng rng(21);
    const auto rows = random_rows(rng, 5);
    QNetwork::Cache cache;
    net.forward(rows, cache);
    net.zero_grad();
    net.backward(cache, std::vector<double>(5, 0.0));
    for (std::size_t i = 0; i < net.parameter_count(); ++i) CHECK(net.gradient(i) == 0.0);
  }

  TEST_CASE("advantage bias receives no gradient") {
    auto net = seeded(22);
    Rng rng(23);
    const auto rows = random_rows(rng, 6);
    QNetwork::Cache cache;
    net.forward(rows, cache);
    net.zero_grad();
    net.backward(cache, std::vector<double>{0.3, -1.0, 2.0, 0.0, 0.5, -0.7});
    CHECK(net.gradient(tensor_offset(net, "advantage.bias")) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("backward accumulates until zero_grad") {
    auto net = seeded(24);
    Rng rng(25);
    const auto rows = random_rows(rng, 3);
    const std::vector<double> dq{1.0, -0.5, 0.25};
    QNetwork::Cache cache;
    net.forward(rows, cache);
    net.zero_grad();
    net.backward(cache, dq);
    std::vector<double> once(net.parameter_count());
    for (std::size_t i = 0; i < once.size(); ++i) once[i] = net.gradient(i);
    net.backward(cache, dq);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(net.gradient(i) == doctest::Approx(2.0 * once[i]));
  }

  TEST_CASE("rejects empty and non-finite input") {
    const auto net = seeded(26);
    CHECK_THROWS(net.forward(std::vector<StateRow>{}));
    std::vector<StateRow> rows(2, StateRow{0.1, 0.2, 0.3, 0.4, 0.5});
    rows[1][2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(net.forward(rows));
    rows[1][2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS(net.forward(rows));
  }

  TEST_CASE("initialisation is seeded and bounded") {
    auto a = seeded(30);
    auto b = seeded(30);
    auto c = seeded(31);
    CHECK(a.same_parameters(b));
    CHECK_FALSE(a.same_parameters(c));
    for (const auto& t : a.tensors()) {
      const bool bias = t.shape.size() == 1;
      const double bound = bias ? 0.0 : 1.0 / std::sqrt(static_cast<double>(t.shape.back()));
      for (double v : t.value) CHECK(std::abs(v) <= bound);
    }
  }

  TEST_CASE("td target") {
    const auto net = seeded(40);
    const FeatureScaler scaler;
    StateMatrix empty;
    CHECK(td_target(-0.5, empty, true, net, scaler, 0.95) == -0.5);
    CHECK(td_target(-0.5, empty, false, net, scaler, 0.95) == -0.5);

    StateMatrix next;
    next.rows = {{1.0, 0.5, 0.2, 0.3, 0.1}, {0.1, 0.9, 0.4, 0.2, 0.1}};
    const auto out = net.forward(next.rows);
    const double best = std::max(out.q[0], out.q[1]);
    CHECK(td_target(-1.0, next, false, net, scaler, 0.9) == doctest::Approx(-1.0 + 0.9 * best));
    CHECK(td_target(-1.0, next, true, net, scaler, 0.9) == -1.0);
    CHECK_THROWS(td_target(0.0, next, false, net, scaler, 1.0));
    CHECK_THROWS(td_target(0.0, next, false, net, scaler, 0.0));
  }

  TEST_CASE("td loss is the mean squared error") {
    auto net = seeded(41);
    const std::vector<StateRow> s1{{1.0, 0.5, 0.2, 0.3, 0.1}, {0.1, 0.9, 0.4, 0.2, 0.1}};
    const std::vector<StateRow> s2{{0.1, 0.1, 1.0, 0.7, 0.5}};
    const double q1 = net.forward(s1).q[1];
    const double q2 = net.forward(s2).q[0];
    const std::vector<LossSample> batch{{s1, 1, q1 + 2.0}, {s2, 0, q2 - 1.0}};
    CHECK(td_loss(net, batch) == doctest::Approx((4.0 + 1.0) / 2.0));
    net.zero_grad();
    CHECK(td_loss_and_gradient(net, batch) == doctest::Approx(2.5));
    const std::vector<LossSample> exact{{s1, 0, net.forward(s1).q[0]}};
    CHECK(td_loss(net, exact) == 0.0);
  }

  TEST_CASE("loss gradient matches finite differences") {
    auto net = seeded(42, 8);
    Rng rng(43);
    const auto s1 = random_rows(rng, 3);
    const auto s2 = random_rows(rng, 1);
    const std::vector<LossSample> batch{{s1, 2, 0.7}, {s2, 0, -1.2}};
    net.zero_grad();
    td_loss_and_gradient(net, batch);
    double worst = 0.0;
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double saved = net.parameter(i);
      net.parameter(i) = saved + 1e-6;
      const double up = td_loss(net, batch);
      net.parameter(i) = saved - 1e-6;
      const double down = td_loss(net, batch);
      net.parameter(i) = saved;
      const double numeric = (up - down) / 2e-6;
      const double scale = std::max({std::abs(numeric), std::abs(net.gradient(i)), 1e-6});
      worst = std::max(worst, std::abs(numeric - net.gradient(i)) / scale);
    }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("adam moves parameters against the gradient") {
    auto net = seeded(44, 4);
    const std::vector<StateRow> s{{1.0, 0.5, 0.2, 0.3, 0.1}};
    const std::vector<LossSample> batch{{s, 0, 5.0}};
    Adam adam(1e-2);
    const double before = td_loss(net, batch);
    for (int i = 0; i < 50; ++i) {
      net.zero_grad();
      td_loss_and_gradient(net, batch);
      adam.step(net.tensors());
    }
    CHECK(adam.steps() == 50);
    CHECK(td_loss(net, batch) < before);
  }

  TEST_CASE("feature scaler") {
    FeatureScaler s(1000.0, 20, 50);
    StateMatrix st;
    st.rows = {{1.0, 500.0, 10.0, 300.0, 25.0}, {0.1, 2000.0, 20.0, 600.0, 25.0}};
    s.observe(st);
    CHECK(s.c_scale() == 600.0);
    const auto r = s.normalize(st.rows[0]);
    CHECK(r == StateRow{1.0, 0.5, 0.5, 0.5, 0.5});
    st.rows[0][kBitsPerRb] = 100.0;
    st.rows[1][kBitsPerRb] = 100.0;
    s.observe(st);
    CHECK(s.c_scale() == 600.0);
    st.rows[0][kBitsPerRb] = 1200.0;
    s.freeze();
    s.observe(st);
    CHECK(s.c_scale() == 600.0);
    CHECK(FeatureScaler().normalize(st.rows[1]) == st.rows[1]);
    CHECK_THROWS(FeatureScaler(0.0, 20, 50));
  }

  TEST_CASE("checkpoint round trip") {
    const auto net = seeded(50, 16);
    const auto scaler = FeatureScaler::from_scales(83333.0, 20.0, 1234.5, 50.0, true);
    std::stringstream ss;
    save_checkpoint(ss, net, scaler);
    const auto ck = load_checkpoint(ss);
    CHECK(ck.net.hidden() == 16);
    CHECK(ck.net.same_parameters(net));
    CHECK(ck.scaler.remaining_scale() == 83333.0);
    CHECK(ck.scaler.c_scale() == 1234.5);
    CHECK(ck.scaler.frozen());
    Rng rng(51);
    const auto rows = random_rows(rng, 5);
    CHECK(ck.net.forward(rows).q == net.forward(rows).q);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    std::stringstream empty;
    CHECK_THROWS(load_checkpoint(empty));
    std::stringstream wrong("not-a-checkpoint 1\n");
    CHECK_THROWS(load_checkpoint(wrong));
    std::stringstream full;
    save_checkpoint(full, seeded(52, 4), FeatureScaler());
    std::string text = full.str();
    std::stringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS(load_checkpoint(truncated));
  }
}
