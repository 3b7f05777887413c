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

#include "distwave/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "distwave/wavelet.hpp"

namespace distwave {

namespace {

constexpr std::array<std::pair<ScenarioId, std::string_view>, 5> kScenarioNames = {{
    {ScenarioId::kSampleSizeSweep, "sample_size_sweep"},
    {ScenarioId::kMisspecification, "misspecification"},
    {ScenarioId::kRegimeCompare, "regime_compare"},
    {ScenarioId::kSparseSignal, "sparse_signal"},
    {ScenarioId::kRateCheck, "rate_check"},
}};

bool smooth_signal(ScenarioId id) { return id != ScenarioId::kSparseSignal; }

}  // namespace

std::string_view scenario_name(ScenarioId id) {
  for (const auto& [key, name] : kScenarioNames) {
    if (key == id) return name;
  }
  return "?";
}

std::optional<ScenarioId> parse_scenario(std::string_view name) {
  for (const auto& [key, label] : kScenarioNames) {
    if (label == name) return key;
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (replications < 1) fail("replications", "must be at least 1");
  if (m < 1) fail("m", "must be at least 1");
  if (n_values.empty()) fail("n", "at least one sample size is required");
  if (max_level < 0 || max_level > CoefficientPyramid::kMaxSupportedLevel) {
    fail("max_level", "must be in [0, " + std::to_string(CoefficientPyramid::kMaxSupportedLevel) + "]");
  }
  if (id == ScenarioId::kSparseSignal && max_level < 3) fail("max_level", "sparse signal needs >= 3");
  if (smooth_signal(id) && !(s_true > 0.0)) fail("s_true", "must be positive");
  if (!(s_min > 0.0)) fail("s_min", "must be positive");
  if (!(s_max > s_min)) fail("s_max", "must exceed s_min");
  if (!(tau > 2.0)) fail("tau", "must be > 2");
  if (id == ScenarioId::kMisspecification && assumed_s.empty()) {
    fail("assumed_s", "misspecification needs at least one assumed smoothness");
  }
  for (double s : assumed_s) {
    if (!(s > 0.0)) fail("assumed_s", "values must be positive");
  }
  if (!(precision > 0.0)) fail("precision", "must be positive");
  if (!(clamp > 0.0)) fail("clamp", "must be positive");
  if (grid_points < 2) fail("grid_points", "must be at least 2");
  for (std::int64_t n : n_values) {
    if (n < m) fail("n", "must be at least m (got " + std::to_string(n) + ")");
    SelectionConfig sel{s_min, s_max, tau, n, m};
    try {
      sel.validate();
      (void)LevelGrid::make(sel, max_level);
      (void)Quantizer(n, precision, clamp);
    } catch (const std::invalid_argument& e) {
      fail("n = " + std::to_string(n), e.what());
    }
  }
  if (grid_mise && max_level > wavelet_resolution - 1) {
    fail("wavelet_resolution", "must exceed max_level for grid MISE");
  }
}

ScenarioConfig default_scenario(ScenarioId id) {
  ScenarioConfig cfg;
  cfg.id = id;
  switch (id) {
    case ScenarioId::kSampleSizeSweep:
    case ScenarioId::kRateCheck:
      cfg.n_values = {10000, 25000, 50000, 75000, 100000, 125000};
      break;
    case ScenarioId::kMisspecification:
      cfg.n_values = {50000};
      cfg.assumed_s = {0.1, 0.3, 0.5, 0.7, 1.0};
      break;
    case ScenarioId::kRegimeCompare:
      cfg.n_values = {10000};
      cfg.s_true = 0.45;
      cfg.s_min = 0.2;
      cfg.s_max = 0.5;
      break;
    case ScenarioId::kSparseSignal:
      cfg.n_values = {10000};
      cfg.grid_mise = true;
      cfg.grid_points = 65536;
      break;
  }
  return cfg;
}

namespace {

struct Task {
  std::size_t n_index;
  int rep;
};

struct Outcome {
  ReplicationRecord record;
  std::size_t n_index;
  std::size_t variant;
};

std::uint64_t max_over_machines(const BitLedger& ledger, Round round) {
  std::uint64_t best = 0;
  for (int k = 1; k <= ledger.machines(); ++k) best = std::max(best, ledger.bits(k, round));
  return best;
}

class ScenarioRunner {
 public:
  explicit ScenarioRunner(const ScenarioConfig& cfg) : cfg_(cfg) {
    truth_ = smooth_signal(cfg.id) ? generate_smooth_signal(cfg.s_true, cfg.max_level)
                                   : generate_sparse_signal(cfg.max_level);
    if (cfg.grid_mise) {
      basis_.emplace(WaveletBasis::build(cfg.wavelet_moments, cfg.wavelet_base_level,
                                         cfg.wavelet_resolution));
      truth_grid_ = basis_->synthesize(truth_, cfg.grid_points, Exec::kSerial);
    }
  }

  const CoefficientPyramid& truth() const { return truth_; }

  std::vector<Outcome> run(const Task& task, ReplicationEstimates* keep) const {
    const auto start = std::chrono::steady_clock::now();
    const std::int64_t n = cfg_.n_values[task.n_index];
    const ModelConfig model{n, cfg_.m, cfg_.max_level, cfg_.master_seed};
    const std::uint64_t tag = (static_cast<std::uint64_t>(task.n_index) << 32) |
                              static_cast<std::uint64_t>(task.rep);
    const auto machines = generate_observations(truth_, model, tag, Exec::kSerial);
    const Quantizer q(n, cfg_.precision, cfg_.clamp);
    const Precision precision = cfg_.infinite_precision ? Precision::kExact : Precision::kQuantized;
    const SelectionConfig sel{cfg_.s_min, cfg_.s_max, cfg_.tau, n, cfg_.m};
    const LevelGrid grid = LevelGrid::make(sel, cfg_.max_level);

    ReplicationRecord base;
    base.scenario = cfg_.id;
    base.rep = task.rep;
    base.n = n;
    base.m = cfg_.m;
    base.tau = cfg_.tau;
    base.seed = cfg_.master_seed;
    base.grid_l_min = grid.l_min;
    base.grid_l_max = grid.l_max;
    if (smooth_signal(cfg_.id)) {
      base.s_true = cfg_.s_true;
      base.l_star = oracle_level(truth_, cfg_.s_true, n, grid);
    }

    std::vector<Outcome> out;
    const auto finish = [&](ReplicationRecord r, const CoefficientPyramid& estimate,
                            std::size_t variant) {
      r.mise = squared_distance(estimate, truth_);
      if (basis_) {
        r.grid_mise = grid_mise(basis_->synthesize(estimate, cfg_.grid_points, Exec::kSerial),
                                truth_grid_);
      }
      if (keep != nullptr) keep->estimates.emplace_back(r.method, estimate);
      out.push_back({std::move(r), task.n_index, variant});
    };

    const Mode mode = cfg_.id == ScenarioId::kRateCheck ? Mode::kFrequentist : Mode::kBayes;
    const AdaptiveRun adaptive = run_adaptive(machines, sel, q, precision, mode, Exec::kSerial);
    {
      ReplicationRecord r = base;
      r.method = Method::kAdc;
      r.l_hat = adaptive.selection.l_hat;
      r.bits_r1 = max_over_machines(adaptive.ledger, Round::kRound1);
      r.bits_r2 = max_over_machines(adaptive.ledger, Round::kRound2);
      r.bits_bcast = max_over_machines(adaptive.ledger, Round::kBroadcast);
      finish(std::move(r), adaptive.estimate.coefficients, 0);
    }

    std::vector<double> odc_levels;
    if (cfg_.id == ScenarioId::kMisspecification) odc_levels = cfg_.assumed_s;
    if (cfg_.id == ScenarioId::kRegimeCompare) odc_levels = {cfg_.s_true};
    for (std::size_t v = 0; v < odc_levels.size(); ++v) {
      BitLedger ledger(cfg_.m);
      const AggregatedPosterior post =
          odc_posterior(machines, odc_levels[v], n, cfg_.m, q, precision, &ledger);
      ReplicationRecord r = base;
      r.method = Method::kOdc;
      r.s_assumed = odc_levels[v];
      r.l_hat = post.l_hat;
      r.bits_r1 = 0;
      r.bits_r2 = max_over_machines(ledger, Round::kRound2);
      r.bits_bcast = 0;
      finish(std::move(r), post.mean, v);
    }

    if (cfg_.id == ScenarioId::kSparseSignal) {
      const int level = mmle_select(machines, n, cfg_.m);
      std::vector<Round2Payload> full;
      for (const MachineObservations& obs : machines) {
        full.push_back(round2_transmit(obs, level, q, Mode::kFrequentist, n, Precision::kExact));
      }
      const AggregatedPosterior post = aggregate_posterior(full, level, n, cfg_.m, cfg_.max_level);
      ReplicationRecord r = base;
      r.method = Method::kMmle;
      r.l_hat = level;
      finish(std::move(r), post.mean, 0);
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (Outcome& o : out) o.record.wall_seconds = seconds;
    return out;
  }

 private:
  const ScenarioConfig& cfg_;
  CoefficientPyramid truth_;
  std::optional<WaveletBasis> basis_;
  GridFunction truth_grid_;
};

}  // namespace

std::vector<ReplicationRecord> run_scenario(const ScenarioConfig& cfg, Exec exec,
                                            ReplicationEstimates* keep) {
  cfg.validate();
  const ScenarioRunner runner(cfg);
  std::vector<Task> tasks;
  for (int rep = 0; rep < cfg.replications; ++rep) {
    for (std::size_t a = 0; a < cfg.n_values.size(); ++a) tasks.push_back({a, rep});
  }
  std::vector<std::vector<Outcome>> results(tasks.size());
  const auto count = static_cast<std::ptrdiff_t>(tasks.size());
  if (keep != nullptr) {
    keep->truth = runner.truth();
    keep->estimates.clear();
  }
  const auto run_one = [&](std::ptrdiff_t t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    ReplicationEstimates* slot = (task.rep == 0 && task.n_index == 0) ? keep : nullptr;
    results[static_cast<std::size_t>(t)] = runner.run(task, slot);
  };
  if (exec == Exec::kParallel) {
    // Exceptions must not escape the parallel region; keep the first one.
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
      try {
        run_one(t);
      } catch (...) {
#pragma omp critical(distwave_scenario_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::ptrdiff_t t = 0; t < count; ++t) run_one(t);
  }

  std::vector<Outcome> all;
  for (auto& batch : results) {
    for (Outcome& o : batch) all.push_back(std::move(o));
  }
  std::stable_sort(all.begin(), all.end(), [](const Outcome& a, const Outcome& b) {
    return std::tuple(a.record.rep, static_cast<int>(a.record.method), a.n_index, a.variant) <
           std::tuple(b.record.rep, static_cast<int>(b.record.method), b.n_index, b.variant);
  });
  std::vector<ReplicationRecord> records;
  records.reserve(all.size());
  for (Outcome& o : all) records.push_back(std::move(o.record));
  return records;
}

namespace {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string optional_field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return format_real(*v);
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const ReplicationRecord> records) {
  out << kRecordHeader << '\n';
  for (const ReplicationRecord& r : records) {
    std::string line;
    line += scenario_name(r.scenario);
    line += ',' + std::to_string(r.rep);
    line += ',';
    line += method_name(r.method);
    line += ',' + std::to_string(r.n);
    line += ',' + std::to_string(r.m);
    line += ',' + optional_field(r.s_true);
    line += ',' + optional_field(r.s_assumed);
    line += ',' + format_real(r.tau);
    line += ',' + std::to_string(r.l_hat);
    line += ',' + optional_field(r.l_star);
    line += ',' + format_real(r.mise);
    line += ',' + optional_field(r.grid_mise);
    line += ',' + optional_field(r.bits_r1);
    line += ',' + optional_field(r.bits_r2);
    line += ',' + optional_field(r.bits_bcast);
    line += ',' + std::to_string(r.seed);
    out << line << '\n';
  }
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty group");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.count = sorted.size();
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.min = sorted.front();
  s.max = sorted.back();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(s.count - 1) / static_cast<double>(s.count));
  }
  return s;
}

std::vector<GroupSummary> summarize_records(std::span<const ReplicationRecord> records) {
  using Key = std::tuple<int, int, std::int64_t, bool, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const ReplicationRecord& r : records) {
    const Key key{static_cast<int>(r.scenario), static_cast<int>(r.method), r.n,
                  r.s_assumed.has_value(), r.s_assumed.value_or(0.0)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.mise);
  }
  std::vector<GroupSummary> out;
  for (const Key& key : order) {
    const auto& [scenario, method, n, has_s, s] = key;
    out.push_back({static_cast<ScenarioId>(scenario), static_cast<Method>(method), n,
                   has_s ? std::optional<double>(s) : std::nullopt, summarize(groups.at(key))});
  }
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares_slope: need at least two paired points");
  }
  const auto k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least_squares_slope: all x are equal");
  return sxy / sxx;
}

double rate_regression(std::span<const ReplicationRecord> records, Method method) {
  std::map<std::int64_t, std::vector<double>> by_n;
  for (const ReplicationRecord& r : records) {
    if (r.method == method) by_n[r.n].push_back(r.mise);
  }
  if (by_n.size() < 3) {
    throw std::invalid_argument("rate_regression: need at least 3 distinct n, got " +
                                std::to_string(by_n.size()));
  }
  std::vector<double> x, y;
  for (const auto& [n, mise] : by_n) {
    const double med = summarize(mise).median;
    if (!(med > 0.0)) throw std::invalid_argument("rate_regression: non-positive median MISE");
    x.push_back(std::log(static_cast<double>(n)));
    y.push_back(std::log(med));
  }
  return least_squares_slope(x, y);
}

}  // namespace distwave
