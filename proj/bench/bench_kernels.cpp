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

// Serial reference vs OpenMP kernels. Each benchmark takes the execution
// policy as its first argument: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "distwave/estimators.hpp"
#include "distwave/experiments.hpp"
#include "distwave/wavelet.hpp"

using namespace distwave;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel;
}

const WaveletBasis& basis() {
  static const WaveletBasis b = WaveletBasis::build(3, 3, 14);
  return b;
}

void BM_GenerateObservations(benchmark::State& state) {
  const auto theta = generate_smooth_signal(0.5, 15);
  const ModelConfig cfg{100000, 10, 15, 1};
  std::uint64_t rep = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_observations(theta, cfg, rep++, exec_of(state)));
  }
}

void BM_RunAdaptive(benchmark::State& state) {
  const auto theta = generate_smooth_signal(0.5, 15);
  const ModelConfig cfg{100000, 10, 15, 1};
  const SelectionConfig sel{0.2, 1.5, 3.0, cfg.n, cfg.m};
  const Quantizer q(cfg.n);
  const auto machines = generate_observations(theta, cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_adaptive(machines, sel, q, Precision::kQuantized, Mode::kBayes, exec_of(state)));
  }
}

void BM_Synthesize(benchmark::State& state) {
  const auto theta = generate_smooth_signal(0.5, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(basis().synthesize(theta, 16384, exec_of(state)));
  }
}

void BM_GramDeviation(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(basis().gram_deviation(7, exec_of(state)));
  }
}

void BM_RunScenario(benchmark::State& state) {
  ScenarioConfig cfg = default_scenario(ScenarioId::kSampleSizeSweep);
  cfg.replications = 4;
  cfg.n_values = {10000, 100000};
  cfg.master_seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_scenario(cfg, exec_of(state)));
  }
}

}  // namespace

BENCHMARK(BM_GenerateObservations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunAdaptive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Synthesize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramDeviation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunScenario)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
