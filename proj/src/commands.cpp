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

#include "distwave/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "distwave/config.hpp"
#include "distwave/rng.hpp"
#include "distwave/wavelet.hpp"

namespace distwave {

namespace {

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Exec apply_threads(const RunOptions& options) {
  if (options.threads >= 1) set_threads(options.threads);
  return options.threads == 1 ? Exec::kSerial : Exec::kParallel;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_metadata(const std::filesystem::path& path, const ScenarioConfig& cfg, int threads) {
  auto f = open_output(path);
  f << "# Configuration of this run; it can be passed back to `distwave simulate --config`.\n";
  f << "# threads = " << threads << '\n';
  if (cfg.id == ScenarioId::kSparseSignal) f << "# baseline = reconstructed-mmle\n";
  if (cfg.id == ScenarioId::kRegimeCompare) {
    f << "# external reference (not run) = mcDC\n";
  }
  f << emit_config(CliConfig{cfg, true});
}

// Runs cfg and writes <out>/<name>.csv and <name>.ini. Returns an exit code.
int run_and_write(ScenarioConfig cfg, const std::string& name, const RunOptions& options,
                  std::ostream& out, std::ostream& err, ReplicationEstimates* keep) {
  if (options.replications) cfg.replications = *options.replications;
  if (options.infinite_precision) cfg.infinite_precision = true;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    err << "error: invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  }
  const Exec exec = apply_threads(options);
  try {
    const auto start = std::chrono::steady_clock::now();
    const auto records = run_scenario(cfg, exec, keep);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(options.out_dir);
    const auto csv_path = options.out_dir / (name + ".csv");
    {
      auto f = open_output(csv_path);
      write_records_csv(f, records);
      if (!f.flush()) throw std::runtime_error("write failed: " + csv_path.string());
    }
    write_metadata(options.out_dir / (name + ".ini"), cfg,
                   exec == Exec::kSerial ? 1 : max_threads());

    std::map<Method, std::vector<double>> by_method;
    for (const auto& r : records) by_method[r.method].push_back(r.mise);
    out << name << ": " << records.size() << " records, seed " << cfg.master_seed;
    for (const auto& [method, mise] : by_method) {
      out << ", " << method_name(method) << " median MISE " << summarize(mise).median;
    }
    out << ", " << seconds << " s -> " << csv_path.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

std::uint64_t resolve_seed(const RunOptions& options, std::optional<std::uint64_t> from_config,
                           std::ostream& err) {
  if (options.seed) return *options.seed;
  if (from_config) return *from_config;
  const std::uint64_t seed = fresh_seed();
  err << "no seed given; using generated seed " << seed << '\n';
  return seed;
}

}  // namespace

std::optional<ScenarioConfig> figure_scenario(std::string_view figure) {
  if (figure == "fig2a") return default_scenario(ScenarioId::kSampleSizeSweep);
  if (figure == "fig2b") return default_scenario(ScenarioId::kMisspecification);
  if (figure == "fig3a") return default_scenario(ScenarioId::kRegimeCompare);
  if (figure == "fig3b") {
    ScenarioConfig cfg = default_scenario(ScenarioId::kRegimeCompare);
    cfg.s_true = 1.2;
    cfg.s_min = 0.51;
    cfg.s_max = 1.5;
    return cfg;
  }
  if (figure == "fig4") return default_scenario(ScenarioId::kSparseSignal);
  return std::nullopt;
}

int cmd_simulate(const RunOptions& options, std::ostream& out, std::ostream& err) {
  if (!options.config) {
    err << "error: simulate needs --config PATH\n";
    return kExitConfig;
  }
  CliConfig cfg;
  try {
    cfg = load_config(*options.config);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  cfg.scenario.master_seed = resolve_seed(
      options, cfg.seed_given ? std::optional(cfg.scenario.master_seed) : std::nullopt, err);
  return run_and_write(cfg.scenario, std::string(scenario_name(cfg.scenario.id)), options, out,
                       err, nullptr);
}

int cmd_reproduce(std::string_view figure, const RunOptions& options, std::ostream& out,
                  std::ostream& err) {
  auto preset = figure_scenario(figure);
  if (!preset) {
    err << "error: unknown figure '" << figure << "' (expected fig2a, fig2b, fig3a, fig3b, fig4)\n";
    return kExitConfig;
  }
  ScenarioConfig cfg = *preset;
  cfg.replications = options.full ? kFullReplications : kDeskReplications;
  cfg.master_seed = resolve_seed(options, std::nullopt, err);
  const std::string name(figure);
  const bool functions = figure == "fig4";
  ReplicationEstimates keep;
  const int code = run_and_write(cfg, name, options, out, err, functions ? &keep : nullptr);
  if (code != kExitOk || !functions) return code;
  try {
    const WaveletBasis basis =
        WaveletBasis::build(cfg.wavelet_moments, cfg.wavelet_base_level, cfg.wavelet_resolution);
    const auto write_function = [&](const std::string& label, const CoefficientPyramid& theta) {
      const auto path = options.out_dir / (name + "_" + label + ".csv");
      auto f = open_output(path);
      write_grid_csv(f, basis.synthesize(theta, cfg.grid_points));
    };
    write_function("truth", keep.truth);
    for (const auto& [method, theta] : keep.estimates) {
      write_function(std::string(method_name(method)), theta);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

namespace {

// Literal scan over every (l, k) pair.
int lepski_brute_force(const std::vector<double>& adjusted, double tau, std::int64_t n,
                       const LevelGrid& grid) {
  for (int l = grid.l_min; l <= grid.l_max; ++l) {
    bool ok = true;
    for (int k = l; k <= grid.l_max; ++k) {
      double sum = 0.0;
      for (int i = l; i <= k; ++i) sum += adjusted[static_cast<std::size_t>(i - grid.l_min)];
      if (!(sum <= tau * std::ldexp(1.0, k) / static_cast<double>(n))) ok = false;
    }
    if (ok) return l;
  }
  return grid.l_max;
}

struct Check {
  std::string name;
  std::function<std::string()> run;  // empty string on success, else the failure detail
};

}  // namespace

int cmd_selftest(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = options.seed.value_or(20260101);
  const Exec exec = apply_threads(options);
  const double tau = options.fault_tau ? 1.5 : 3.0;

  std::vector<Check> checks;
  checks.push_back({"lepski_brute_force", [&]() -> std::string {
    const rng::Stream stream(rng::stream_key(seed, rng::Domain::kTest, 1, 0));
    std::uint64_t c = 0;
    for (int t = 0; t < 2000; ++t) {
      const std::int64_t n = 1000 + static_cast<std::int64_t>(stream.uniform(c++) * 1e6);
      const SelectionConfig cfg{0.2, 1.5, tau, n, 1};
      cfg.validate();
      const LevelGrid grid = LevelGrid::make(cfg, 15);
      std::vector<double> adjusted(static_cast<std::size_t>(grid.size()));
      for (double& v : adjusted) {
        v = (stream.uniform(c++) - 0.6) * 8.0 * std::ldexp(1.0, grid.l_max) / static_cast<double>(n);
      }
      const int fast = lepski_select(adjusted, cfg, grid).l_hat;
      const int slow = lepski_brute_force(adjusted, tau, n, grid);
      if (fast != slow) {
        return "case " + std::to_string(t) + ": " + std::to_string(fast) + " vs " +
               std::to_string(slow);
      }
    }
    return {};
  }});
  checks.push_back({"quantizer_round_trip", [&]() -> std::string {
    const rng::Stream stream(rng::stream_key(seed, rng::Domain::kTest, 2, 0));
    std::uint64_t c = 0;
    for (std::int64_t n : {10000, 100000}) {
      const Quantizer q(n);
      for (int t = 0; t < 100000; ++t) {
        const double x = (2.0 * stream.uniform(c++) - 1.0) * q.clamp_range();
        const double e = std::abs(q.round_trip(x) - x);
        if (!(e <= q.step())) return "error " + std::to_string(e) + " at x = " + std::to_string(x);
      }
    }
    return {};
  }});
  checks.push_back({"haar_gram", [&]() -> std::string {
    const WaveletBasis haar = WaveletBasis::build(1, 0, 12);
    const double dev = haar.gram_deviation(6, exec);
    if (!(dev <= 1e-12)) return "deviation " + std::to_string(dev);
    return {};
  }});
  checks.push_back({"haar_parseval", [&]() -> std::string {
    const WaveletBasis haar = WaveletBasis::build(1, 0, 12);
    const rng::Stream stream(rng::stream_key(seed, rng::Domain::kTest, 3, 0));
    CoefficientPyramid a(6), b(6);
    auto fa = a.flat();
    auto fb = b.flat();
    stream.fill_normal(0, fa);
    stream.fill_normal(fa.size(), fb);
    const double coeff = squared_distance(a, b);
    const double grid = grid_mise(haar.synthesize(a, 4096, exec), haar.synthesize(b, 4096, exec));
    const double rel = std::abs(grid - coeff) / coeff;
    if (!(rel <= 1e-9)) return "relative error " + std::to_string(rel);
    return {};
  }});
  checks.push_back({"observation_determinism", [&]() -> std::string {
    const CoefficientPyramid theta = generate_smooth_signal(0.5, 10);
    const ModelConfig model{10000, 10, 10, seed};
    const auto serial = generate_observations(theta, model, 7, Exec::kSerial);
    const auto parallel = generate_observations(theta, model, 7, Exec::kParallel);
    for (std::size_t k = 0; k < serial.size(); ++k) {
      if (!(serial[k].data == parallel[k].data)) return "machine " + std::to_string(k + 1);
    }
    return {};
  }});

  int failures = 0;
  for (const Check& check : checks) {
    std::string detail;
    try {
      detail = check.run();
    } catch (const std::invalid_argument& e) {
      detail = std::string("precondition violated: ") + e.what();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (detail.empty()) {
      out << "PASS " << check.name << '\n';
    } else {
      ++failures;
      out << "FAIL " << check.name << ": " << detail << '\n';
    }
  }
  if (failures > 0) {
    err << failures << " of " << checks.size() << " self-test properties failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace distwave
