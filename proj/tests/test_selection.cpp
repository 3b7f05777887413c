// Copyright 2026 The distwave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "distwave/rng.hpp"
#include "distwave/selection.hpp"

using namespace distwave;

namespace {

// Tests every (l, k) pair literally.
int brute_force(const std::vector<double>& adjusted, double tau, std::int64_t n,
                const LevelGrid& grid) {
  for (int l = grid.l_min; l <= grid.l_max; ++l) {
    bool all = true;
    for (int k = l; k <= grid.l_max; ++k) {
      double sum = 0.0;
      for (int i = l; i <= k; ++i) sum += adjusted[static_cast<std::size_t>(i - grid.l_min)];
      all = all && sum <= tau * std::pow(2.0, k) / static_cast<double>(n);
    }
    if (all) return l;
  }
  return grid.l_max;
}

std::vector<double> random_adjusted(const rng::Stream& stream, std::uint64_t& c,
                                    const LevelGrid& grid, std::int64_t n) {
  std::vector<double> v(static_cast<std::size_t>(grid.size()));
  for (double& x : v) {
    x = (stream.uniform(c++) - 0.5) * 6.0 * std::ldexp(1.0, grid.l_max) / static_cast<double>(n);
  }
  return v;
}

// Log-density sum over every observation, no sufficient statistics.
double log_likelihood(const std::vector<MachineObservations>& machines, int level, double noise) {
  double total = 0.0;
  for (const auto& obs : machines) {
    for (int i = 0; i <= obs.data.max_level(); ++i) {
      const double var = i <= level ? 1.0 + noise : noise;
      for (double y : obs.data.level(i)) {
        total += -0.5 * std::log(2.0 * std::numbers::pi * var) - y * y / (2.0 * var);
      }
    }
  }
  return total;
}

}  // namespace

TEST_CASE("level grid bounds") {
  const LevelGrid g = LevelGrid::make(10000, 0.2, 1.5, 15);
  CHECK(g.l_min == 4);
  CHECK(g.l_max == 9);
  CHECK(g.size() == 6);
  CHECK(g.members() == std::vector<int>{4, 5, 6, 7, 8, 9});
  CHECK(g.contains(9));
  CHECK(!g.contains(10));
  // log2(2^20)/(1+2*1.5) = 5 exactly.
  CHECK(LevelGrid::make(1 << 20, 0.2, 1.5, 15).l_min == 5);
  CHECK(LevelGrid::make(10000, 0.2, 1.5, 7).l_max == 7);
  CHECK_THROWS_AS(LevelGrid::make(10000, 0.2, 1.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(LevelGrid::make(10000, 0.5, 0.2, 15), std::invalid_argument);
}

TEST_CASE("selection config checks") {
  CHECK_NOTHROW(SelectionConfig{0.2, 1.5, 3.0, 10000, 10}.validate());
  CHECK_THROWS_AS(SelectionConfig({0.2, 1.5, 3.0, 10000, 11}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(SelectionConfig({0.2, 1.5, 2.0, 10000, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(SelectionConfig({0.0, 1.5, 3.0, 10000, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(SelectionConfig({1.5, 1.5, 3.0, 10000, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(SelectionConfig({0.2, 1.5, 3.0, 5, 10}).validate(), std::invalid_argument);
}

TEST_CASE("lepski extremes") {
  const SelectionConfig cfg{0.2, 1.5, 3.0, 10000, 10};
  const LevelGrid g = LevelGrid::make(cfg, 15);
  const auto low = lepski_select(std::vector<double>(6, -1.0), cfg, g);
  CHECK(low.l_hat == g.l_min);
  CHECK(low.rule_fired);
  const auto high = lepski_select(std::vector<double>(6, 1e300), cfg, g);
  CHECK(high.l_hat == g.l_max);
  CHECK(!high.rule_fired);
  CHECK_THROWS_AS(lepski_select(std::vector<double>(5, 0.0), cfg, g), std::invalid_argument);
  SelectionConfig bad = cfg;
  bad.tau = 1.5;
  CHECK_THROWS_AS(lepski_select(std::vector<double>(6, 0.0), bad, g), std::invalid_argument);
}

TEST_CASE("lepski diagnostics") {
  const SelectionConfig cfg{0.2, 1.5, 3.0, 10000, 10};
  const LevelGrid g = LevelGrid::make(cfg, 15);
  const std::vector<double> t{0.5, 0.25, 0.125, 0.0, -0.125, 0.0};
  const auto r = lepski_select(t, cfg, g);
  REQUIRE(r.partial_sums.size() == 6);
  CHECK(r.partial_sums[0].size() == 6);
  CHECK(r.partial_sums[0][2] == 0.875);
  CHECK(r.partial_sums[3].size() == 3);
  CHECK(r.thresholds[0] == 3.0 * 16.0 / 10000.0);
  CHECK(r.grid == g);
}

TEST_CASE("equality at the threshold qualifies") {
  const SelectionConfig cfg{0.2, 1.5, 4.0, 1 << 16, 1};
  const LevelGrid g = LevelGrid::make(cfg, 15);
  // l_min = 4. A level-4 value exactly at 4 * 2^4 / 2^16, nothing after it.
  std::vector<double> t(static_cast<std::size_t>(g.size()), 0.0);
  t[0] = 4.0 * 16.0 / 65536.0;
  CHECK(lepski_select(t, cfg, g).l_hat == 4);
  t[0] = std::nextafter(t[0], 1.0);
  CHECK(lepski_select(t, cfg, g).l_hat == 5);
}

TEST_CASE("lepski equals the double-loop scan") {
  const rng::Stream stream(rng::stream_key(3, rng::Domain::kTest, 20, 0));
  std::uint64_t c = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::int64_t n = 1000 + static_cast<std::int64_t>(stream.uniform(c++) * 2e6);
    const double tau = 2.0 + 1e-9 + stream.uniform(c++) * 4.0;
    const SelectionConfig cfg{0.2, 1.5, tau, n, 1};
    const LevelGrid g = LevelGrid::make(cfg, 15);
    const auto adjusted = random_adjusted(stream, c, g, n);
    const auto r = lepski_select(adjusted, cfg, g);
    REQUIRE(r.l_hat == brute_force(adjusted, tau, n, g));
    CHECK(g.contains(r.l_hat));
  }
}

TEST_CASE("lepski monotone and scale invariant") {
  const rng::Stream stream(rng::stream_key(4, rng::Domain::kTest, 21, 0));
  std::uint64_t c = 0;
  for (int t = 0; t < 2000; ++t) {
    const std::int64_t n = 5000 + static_cast<std::int64_t>(stream.uniform(c++) * 1e6);
    const SelectionConfig cfg{0.2, 1.5, 3.0, n, 1};
    const LevelGrid g = LevelGrid::make(cfg, 15);
    const auto adjusted = random_adjusted(stream, c, g, n);
    const int base = lepski_select(adjusted, cfg, g).l_hat;

    auto lower = adjusted;
    for (double& v : lower) v -= stream.uniform(c++) * 1e-3;
    CHECK(lepski_select(lower, cfg, g).l_hat <= base);

    // Power-of-two factors keep every comparison exact.
    auto scaled = adjusted;
    for (double& v : scaled) v *= 4.0;
    SelectionConfig scaled_cfg = cfg;
    scaled_cfg.tau *= 4.0;
    CHECK(lepski_select(scaled, scaled_cfg, g).l_hat == base);
  }
}

TEST_CASE("oracle level") {
  const LevelGrid g = LevelGrid::make(1 << 20, 0.2, 1.5, 15);
  CHECK(oracle_level(CoefficientPyramid(15), 0.5, 1 << 20, g) == g.l_min);
  // c_s = 2 at s = 0.5, so norm 0.5 gives c_s * norm = 1: least l with
  // 2^{-l} <= 2^l / 2^20 is 10.
  CHECK(besov_constant(0.5) == 2.0);
  CHECK(oracle_level(0.5, 0.5, 1 << 20, g) == 10);
  int scan = g.l_max;
  for (int l = g.l_min; l <= g.l_max; ++l) {
    if (std::pow(2.0, -l) <= std::pow(2.0, l) / (1 << 20)) {
      scan = l;
      break;
    }
  }
  CHECK(scan == 10);
  CHECK(oracle_level(1e30, 0.5, 1 << 20, g) == g.l_max);
  CHECK_THROWS_AS(besov_constant(0.0), std::invalid_argument);
}

TEST_CASE("oracle level sandwich") {
  // With B = c_s ||f||^2: 2^{l*} >= (B n)^{1/(1+2s)} by definition and, l* being
  // the least such level, 2^{l*} < 2 (B n)^{1/(1+2s)} away from the grid ends.
  for (double s : {0.3, 0.5, 0.8, 1.2}) {
    for (double norm : {0.05, 0.3, 1.0, 1.6}) {
      for (std::int64_t n : {10000, 50000, 262144, 1000000, 4000000}) {
        const LevelGrid g = LevelGrid::make(n, 0.05, 4.0, 40);
        const int l = oracle_level(norm, s, n, g);
        if (l == g.l_min || l == g.l_max) continue;
        const double b = besov_constant(s) * norm;
        const double c1 = std::pow(b, 1.0 / (1.0 + 2.0 * s));
        const double rate = std::pow(static_cast<double>(n), 1.0 / (1.0 + 2.0 * s));
        CHECK(c1 * rate <= std::ldexp(1.0, l) * (1 + 1e-12));
        CHECK(std::ldexp(1.0, l) < 2.0 * c1 * rate);
      }
    }
  }
}

TEST_CASE("upper sandwich constant needs the factor 2") {
  // s = 0.5, n = 2^18, c_s ||f||^2 = 4/3: l* = 10, yet
  // (2^{2s} c_s ||f||^2)^{1/(1+2s)} n^{1/(1+2s)} is only about 836.
  const std::int64_t n = 1 << 18;
  const LevelGrid g = LevelGrid::make(n, 0.2, 1.5, 15);
  const int l = oracle_level(2.0 / 3.0, 0.5, n, g);
  CHECK(l == 10);
  const double smaller = std::sqrt(2.0 * 4.0 / 3.0) * 512.0;
  CHECK(std::ldexp(1.0, l) > smaller);
  CHECK(std::ldexp(1.0, l) < 2.0 * std::sqrt(4.0 / 3.0) * 512.0);
}

TEST_CASE("oDC level rounding") {
  CHECK(odc_level(0.5, 1 << 15, 15) == 8);
  CHECK(odc_level(1.0, 1 << 12, 15) == 4);
  CHECK(odc_level(1e6, 10000, 15) == 0);
  CHECK(odc_level(0.01, 1 << 20, 15) == 15);
  CHECK_THROWS_AS(odc_level(0.0, 100, 15), std::invalid_argument);
}

TEST_CASE("MMLE extremes") {
  std::vector<MachineObservations> zero;
  for (int k = 1; k <= 3; ++k) zero.push_back({k, CoefficientPyramid(5), 0.1});
  CHECK(mmle_select(zero, 300, 3) == 0);

  std::vector<MachineObservations> big;
  for (int k = 1; k <= 3; ++k) {
    big.push_back({k, CoefficientPyramid(5, std::vector<double>(63, 50.0)), 0.1});
  }
  CHECK(mmle_select(big, 300, 3) == 5);
  CHECK_THROWS_AS(mmle_select(big, 300, 2), std::invalid_argument);
}

TEST_CASE("MMLE equals exhaustive likelihood evaluation") {
  for (std::uint64_t t = 0; t < 300; ++t) {
    const rng::Stream stream(rng::stream_key(5, rng::Domain::kTest, 22, t));
    const int I = static_cast<int>(stream.bits(0) % 5);
    const int m = 1 + static_cast<int>(stream.bits(1) % 3);
    const std::int64_t n = m + static_cast<std::int64_t>(stream.bits(2) % 200);
    const double scale = std::exp(4.0 * stream.uniform(3) - 2.0);
    std::vector<MachineObservations> machines;
    std::uint64_t c = 10;
    for (int k = 1; k <= m; ++k) {
      CoefficientPyramid y(I);
      for (double& v : y.flat()) v = scale * stream.normal(c++);
      for (int i = 0; i <= I; ++i) {
        for (double& v : y.level(i)) v *= std::exp2(-0.8 * i);
      }
      machines.push_back({k, y, 0.0});
    }
    const double noise = static_cast<double>(m) / static_cast<double>(n);
    int best = 0;
    for (int l = 1; l <= I; ++l) {
      if (log_likelihood(machines, l, noise) > log_likelihood(machines, best, noise)) best = l;
    }
    CHECK(mmle_select(machines, n, m) == best);
  }
}
