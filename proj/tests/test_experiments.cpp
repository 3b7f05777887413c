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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "distwave/experiments.hpp"
#include "distwave/rng.hpp"

using namespace distwave;

namespace {

ScenarioConfig small(ScenarioId id) {
  ScenarioConfig cfg = default_scenario(id);
  cfg.replications = 3;
  cfg.max_level = 11;
  cfg.master_seed = 17;
  if (id == ScenarioId::kSampleSizeSweep || id == ScenarioId::kRateCheck) {
    cfg.n_values = {10000, 40000, 100000};
  }
  if (id == ScenarioId::kSparseSignal) {
    cfg.grid_points = 2048;
    cfg.wavelet_moments = 3;
    cfg.wavelet_base_level = 3;
    cfg.wavelet_resolution = 12;
  }
  return cfg;
}

std::string csv(const std::vector<ReplicationRecord>& records) {
  std::ostringstream out;
  write_records_csv(out, records);
  return out.str();
}

// Quantile by the 1-based position h = (N - 1) p + 1.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p + 1.0;
  const auto lo = static_cast<std::size_t>(h);
  if (lo >= v.size()) return v.back();
  return v[lo - 1] + (h - static_cast<double>(lo)) * (v[lo] - v[lo - 1]);
}

}  // namespace

TEST_CASE("scenario names") {
  for (auto id : {ScenarioId::kSampleSizeSweep, ScenarioId::kMisspecification,
                  ScenarioId::kRegimeCompare, ScenarioId::kSparseSignal, ScenarioId::kRateCheck}) {
    CHECK(parse_scenario(scenario_name(id)) == id);
  }
  CHECK(!parse_scenario("fig2a").has_value());
}

TEST_CASE("default presets") {
  const auto sweep = default_scenario(ScenarioId::kSampleSizeSweep);
  CHECK(sweep.n_values == std::vector<std::int64_t>{10000, 25000, 50000, 75000, 100000, 125000});
  CHECK(sweep.m == 10);
  CHECK(sweep.max_level == 15);
  CHECK(sweep.replications == 50);
  const auto mis = default_scenario(ScenarioId::kMisspecification);
  CHECK(mis.n_values == std::vector<std::int64_t>{50000});
  CHECK(mis.assumed_s == std::vector<double>{0.1, 0.3, 0.5, 0.7, 1.0});
  const auto sparse = default_scenario(ScenarioId::kSparseSignal);
  CHECK(sparse.grid_mise);
  CHECK(sparse.grid_points == 65536);
  for (auto id : {ScenarioId::kSampleSizeSweep, ScenarioId::kMisspecification,
                  ScenarioId::kRegimeCompare, ScenarioId::kSparseSignal, ScenarioId::kRateCheck}) {
    CHECK_NOTHROW(default_scenario(id).validate());
  }
}

TEST_CASE("config validation names the field") {
  const auto expect = [](ScenarioConfig cfg, const std::string& field) {
    try {
      cfg.validate();
      FAIL("accepted an invalid config for " << field);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).rfind(field, 0) == 0);
    }
  };
  const auto base = default_scenario(ScenarioId::kSampleSizeSweep);
  auto c = base;
  c.replications = 0;
  expect(c, "replications");
  c = base;
  c.n_values.clear();
  expect(c, "n");
  c = base;
  c.tau = 2.0;
  expect(c, "tau");
  c = base;
  c.m = 11;
  expect(c, "n = 10000");
  c = base;
  c.max_level = 3;
  expect(c, "n = 10000");
  c = base;
  c.s_max = 0.1;
  expect(c, "s_max");
  c = base;
  c.precision = 20.0;
  expect(c, "n = 10000");
  c = default_scenario(ScenarioId::kMisspecification);
  c.assumed_s.clear();
  expect(c, "assumed_s");
  c = default_scenario(ScenarioId::kSparseSignal);
  c.wavelet_resolution = 12;
  c.max_level = 15;
  expect(c, "wavelet_resolution");
}

TEST_CASE("sweep records") {
  const auto cfg = small(ScenarioId::kSampleSizeSweep);
  const auto records = run_scenario(cfg);
  REQUIRE(records.size() == 9);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    CHECK(r.rep == static_cast<int>(k / 3));
    CHECK(r.n == cfg.n_values[k % 3]);
    CHECK(r.method == Method::kAdc);
    CHECK(r.mise >= 0.0);
    CHECK(r.l_star.has_value());
    CHECK(r.s_true == 0.5);
    CHECK(!r.s_assumed.has_value());
    CHECK(!r.grid_mise.has_value());
    REQUIRE(r.grid_l_min.has_value());
    CHECK(r.l_hat >= *r.grid_l_min);
    CHECK(r.l_hat <= *r.grid_l_max);
    CHECK(*r.bits_r2 > 0);
    CHECK(*r.bits_bcast == 4);
  }
}

TEST_CASE("output is independent of the execution path") {
  for (auto id : {ScenarioId::kMisspecification, ScenarioId::kSparseSignal}) {
    const auto cfg = small(id);
    CHECK(csv(run_scenario(cfg, Exec::kSerial)) == csv(run_scenario(cfg, Exec::kParallel)));
  }
  auto other = small(ScenarioId::kMisspecification);
  other.master_seed = 18;
  CHECK(csv(run_scenario(other)) != csv(run_scenario(small(ScenarioId::kMisspecification))));
}

TEST_CASE("misspecification records") {
  const auto cfg = small(ScenarioId::kMisspecification);
  const auto records = run_scenario(cfg);
  REQUIRE(records.size() == 3 * 6);
  CHECK(records[0].method == Method::kAdc);
  for (std::size_t v = 0; v < 5; ++v) {
    const auto& r = records[1 + v];
    CHECK(r.method == Method::kOdc);
    CHECK(r.s_assumed == cfg.assumed_s[v]);
    CHECK(r.l_hat == odc_level(cfg.assumed_s[v], 50000, cfg.max_level));
    CHECK(*r.bits_r1 == 0);
    CHECK(*r.bits_bcast == 0);
  }
}

TEST_CASE("regime records") {
  auto cfg = small(ScenarioId::kRegimeCompare);
  const auto records = run_scenario(cfg);
  REQUIRE(records.size() == 6);
  CHECK(records[1].method == Method::kOdc);
  CHECK(records[1].s_assumed == 0.45);
}

TEST_CASE("sparse records and retained estimates") {
  const auto cfg = small(ScenarioId::kSparseSignal);
  ReplicationEstimates keep;
  const auto records = run_scenario(cfg, Exec::kParallel, &keep);
  REQUIRE(records.size() == 6);
  CHECK(records[0].method == Method::kAdc);
  CHECK(records[1].method == Method::kMmle);
  CHECK(!records[1].bits_r1.has_value());
  CHECK(!records[1].bits_r2.has_value());
  CHECK(!records[0].l_star.has_value());
  for (const auto& r : records) {
    REQUIRE(r.grid_mise.has_value());
    CHECK(std::abs(*r.grid_mise - r.mise) <= 0.05 * r.mise);
  }
  CHECK(keep.truth == generate_sparse_signal(cfg.max_level));
  REQUIRE(keep.estimates.size() == 2);
  CHECK(squared_distance(keep.estimates[0].second, keep.truth) == records[0].mise);
}

TEST_CASE("record CSV") {
  ReplicationRecord r;
  r.scenario = ScenarioId::kSparseSignal;
  r.method = Method::kMmle;
  r.n = 10000;
  r.m = 10;
  r.tau = 3.0;
  r.l_hat = 2;
  r.mise = 0.1;
  r.seed = 5;
  ReplicationRecord a = r;
  a.method = Method::kOdc;
  a.s_assumed = 0.3;
  a.bits_r1 = 0;
  a.bits_r2 = 310;
  a.bits_bcast = 0;
  a.l_star = 7;
  const std::string text = csv({r, a});
  CHECK(text == std::string(kRecordHeader) + "\n" +
                    "sparse_signal,0,MMLE,10000,10,,,3,2,,0.1,,,,,5\n"
                    "sparse_signal,0,oDC,10000,10,,0.3,3,2,7,0.1,,0,310,0,5\n");
}

TEST_CASE("summaries") {
  const std::vector<double> v{5, 1, 4, 2, 3};
  const auto s = summarize(v);
  CHECK(s.median == 3);
  CHECK(s.q1 == 2);
  CHECK(s.q3 == 4);
  CHECK(s.mean == 3);
  CHECK(s.min == 1);
  CHECK(s.max == 5);
  CHECK(s.count == 5);
  CHECK(s.se == doctest::Approx(std::sqrt(2.5 / 5)));
  const auto one = summarize(std::vector<double>{7.5});
  CHECK(one.median == 7.5);
  CHECK(one.q1 == 7.5);
  CHECK(one.q3 == 7.5);
  CHECK(one.mean == 7.5);
  CHECK(one.se == 0.0);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(quantile_sorted(v, 1.5), std::invalid_argument);
  const std::vector<double> four{1, 2, 3, 4};
  CHECK(quantile_sorted(four, 0.5) == 2.5);
  CHECK(quantile_sorted(four, 0.25) == 1.75);
}

TEST_CASE("summaries match a sort-based oracle") {
  const rng::Stream stream(rng::stream_key(8, rng::Domain::kTest, 30, 0));
  std::uint64_t c = 0;
  for (int g = 0; g < 1000; ++g) {
    const std::size_t size = 1 + stream.bits(c++) % 60;
    std::vector<double> v(size);
    for (double& x : v) x = stream.normal(c++);
    const auto s = summarize(v);
    CHECK(s.median == doctest::Approx(oracle_quantile(v, 0.5)).epsilon(1e-14));
    CHECK(s.q1 == doctest::Approx(oracle_quantile(v, 0.25)).epsilon(1e-14));
    CHECK(s.q3 == doctest::Approx(oracle_quantile(v, 0.75)).epsilon(1e-14));
    CHECK(s.min == *std::min_element(v.begin(), v.end()));
    CHECK(s.max == *std::max_element(v.begin(), v.end()));
  }
}

TEST_CASE("grouped summaries") {
  std::vector<ReplicationRecord> records(6);
  for (std::size_t k = 0; k < 6; ++k) {
    records[k].n = k % 2 == 0 ? 100 : 200;
    records[k].mise = static_cast<double>(k);
  }
  records[5].method = Method::kOdc;
  records[5].s_assumed = 0.5;
  const auto groups = summarize_records(records);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].n == 100);
  CHECK(groups[0].mise.median == 2.0);
  CHECK(groups[1].n == 200);
  CHECK(groups[1].mise.count == 2);
  CHECK(groups[2].method == Method::kOdc);
  CHECK(groups[2].s_assumed == 0.5);
}

TEST_CASE("rate regression") {
  std::vector<ReplicationRecord> power, flat;
  for (std::int64_t n : {1000, 5000, 20000, 100000}) {
    for (int rep = 0; rep < 3; ++rep) {
      ReplicationRecord r;
      r.n = n;
      r.mise = 0.7 * std::pow(static_cast<double>(n), -0.5);
      power.push_back(r);
      r.mise = 0.25;
      flat.push_back(r);
    }
  }
  CHECK(std::abs(rate_regression(power) + 0.5) <= 1e-12);
  CHECK(std::abs(rate_regression(flat)) <= 1e-12);
  CHECK_THROWS_AS(rate_regression(std::span(power).first(6)), std::invalid_argument);
  CHECK_THROWS_AS(rate_regression(power, Method::kOdc), std::invalid_argument);
  CHECK_THROWS_AS(least_squares_slope(std::vector<double>{1, 1}, std::vector<double>{1, 2}),
                  std::invalid_argument);
  CHECK(least_squares_slope(std::vector<double>{0, 1, 2}, std::vector<double>{1, 3, 5}) ==
        doctest::Approx(2.0));
}
