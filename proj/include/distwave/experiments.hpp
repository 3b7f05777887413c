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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distwave/estimators.hpp"
#include "distwave/parallel.hpp"

namespace distwave {

enum class ScenarioId {
  kSampleSizeSweep,
  kMisspecification,
  kRegimeCompare,
  kSparseSignal,
  kRateCheck,
};

std::string_view scenario_name(ScenarioId id);
std::optional<ScenarioId> parse_scenario(std::string_view name);

// Methods per scenario:
//   sample_size_sweep  aDC (posterior mean) at every n
//   misspecification   aDC, and oDC at every assumed smoothness
//   regime_compare     aDC and oDC at the true smoothness
//   sparse_signal      aDC and MMLE on the sparse signal
//   rate_check         aDC frequentist point estimate at every n
struct ScenarioConfig {
  ScenarioId id = ScenarioId::kSampleSizeSweep;
  int replications = 50;
  std::vector<std::int64_t> n_values;
  int m = 10;
  int max_level = 15;
  double s_true = 0.5;
  double s_min = 0.2;
  double s_max = 1.5;
  double tau = 3.0;
  std::vector<double> assumed_s;  // misspecification only
  double precision = Quantizer::kDefaultPrecision;
  double clamp = Quantizer::kDefaultClamp;
  bool infinite_precision = false;
  bool grid_mise = false;
  std::size_t grid_points = 10000;
  int wavelet_moments = 8;
  int wavelet_base_level = 5;
  int wavelet_resolution = 16;
  std::uint64_t master_seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

// Defaults for each scenario (n grid, smoothness bounds, baselines); the seed
// is left at 0.
ScenarioConfig default_scenario(ScenarioId id);

struct ReplicationRecord {
  ScenarioId scenario = ScenarioId::kSampleSizeSweep;
  int rep = 0;
  Method method = Method::kAdc;
  std::int64_t n = 0;
  int m = 0;
  std::optional<double> s_true;
  std::optional<double> s_assumed;
  double tau = 0.0;
  int l_hat = 0;
  std::optional<int> l_star;
  double mise = 0.0;
  std::optional<double> grid_mise;
  // Per-machine bits (the largest over machines); absent for MMLE.
  std::optional<std::uint64_t> bits_r1;
  std::optional<std::uint64_t> bits_r2;
  std::optional<std::uint64_t> bits_bcast;
  std::uint64_t seed = 0;
  std::optional<int> grid_l_min;
  std::optional<int> grid_l_max;
  double wall_seconds = 0.0;
};

// Pyramids of one replication, kept for function-space output.
struct ReplicationEstimates {
  CoefficientPyramid truth;
  std::vector<std::pair<Method, CoefficientPyramid>> estimates;
};

// Runs every (n, replication) task and returns records ordered by
// (rep, method, n, assumed s). Output is identical for Exec::kSerial and
// Exec::kParallel. When `keep` is given, the pyramids of replication 0 at the
// first n are stored there.
std::vector<ReplicationRecord> run_scenario(const ScenarioConfig& cfg,
                                            Exec exec = Exec::kParallel,
                                            ReplicationEstimates* keep = nullptr);

inline constexpr std::string_view kRecordHeader =
    "scenario,rep,method,n,m,s_true,s_assumed,tau,l_hat,l_star,mise,grid_mise,bits_r1,bits_r2,"
    "bits_bcast,seed";

// Header plus one line per record, LF endings, missing fields empty, reals in
// shortest round-trip form.
void write_records_csv(std::ostream& out, std::span<const ReplicationRecord> records);

struct Summary {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Quantile of sorted data by linear interpolation between order statistics
// (position (N-1) p, inclusive). Throws std::invalid_argument on empty input
// or p outside [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Median, quartiles, mean and standard error (sd / sqrt(N), sd with N - 1).
// Throws std::invalid_argument on an empty group.
Summary summarize(std::span<const double> values);

struct GroupSummary {
  ScenarioId scenario;
  Method method;
  std::int64_t n;
  std::optional<double> s_assumed;
  Summary mise;
};

// Groups by (scenario, method, n, assumed s) in first-appearance order.
std::vector<GroupSummary> summarize_records(std::span<const ReplicationRecord> records);

// Least-squares slope of y on x. Throws std::invalid_argument when fewer than
// two points or all x are equal.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

// Slope of log(median MISE) against log(n) over the records of `method`.
// Throws std::invalid_argument with fewer than 3 distinct n.
double rate_regression(std::span<const ReplicationRecord> records, Method method = Method::kAdc);

}  // namespace distwave
