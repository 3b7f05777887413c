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

#include "distwave/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "distwave/rng.hpp"

namespace distwave {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kAdc: return "aDC";
    case Method::kOdc: return "oDC";
    case Method::kMmle: return "MMLE";
  }
  return "?";
}

namespace {

// Payloads sorted by machine after checking 1..m are present once each and
// carry levels 0..l_hat.
std::vector<const Round2Payload*> ordered(std::span<const Round2Payload> payloads, int l_hat,
                                          int m, int max_level) {
  if (m < 1) throw std::invalid_argument("estimator: m must be at least 1");
  if (l_hat < 0 || l_hat > max_level) {
    throw std::invalid_argument("estimator: truncation level " + std::to_string(l_hat) +
                                " outside [0, " + std::to_string(max_level) + "]");
  }
  std::vector<const Round2Payload*> by_machine(static_cast<std::size_t>(m), nullptr);
  for (const Round2Payload& p : payloads) {
    if (p.machine < 1 || p.machine > m) {
      throw std::invalid_argument("estimator: payload from unknown machine " +
                                  std::to_string(p.machine));
    }
    auto& slot = by_machine[static_cast<std::size_t>(p.machine - 1)];
    if (slot != nullptr) {
      throw std::invalid_argument("estimator: duplicate payload from machine " +
                                  std::to_string(p.machine));
    }
    if (p.values.size() < CoefficientPyramid::size_for(l_hat)) {
      throw std::invalid_argument("estimator: payload of machine " + std::to_string(p.machine) +
                                  " does not reach level " + std::to_string(l_hat));
    }
    slot = &p;
  }
  for (int k = 1; k <= m; ++k) {
    if (by_machine[static_cast<std::size_t>(k - 1)] == nullptr) {
      throw std::invalid_argument("estimator: missing payload from machine " + std::to_string(k));
    }
  }
  return by_machine;
}

std::vector<double> average(const std::vector<const Round2Payload*>& payloads, int l_hat) {
  const std::size_t count = CoefficientPyramid::size_for(l_hat);
  std::vector<double> sum(count, 0.0);
  for (const Round2Payload* p : payloads) {
    for (std::size_t j = 0; j < count; ++j) sum[j] += p->values[j];
  }
  const double m = static_cast<double>(payloads.size());
  for (double& v : sum) v /= m;
  return sum;
}

CoefficientPyramid embed(std::vector<double> low, int max_level) {
  low.resize(CoefficientPyramid::size_for(max_level), 0.0);
  return CoefficientPyramid(max_level, std::move(low));
}

}  // namespace

PointEstimate adc_point_estimate(std::span<const Round2Payload> payloads, int l_hat, int m,
                                 int max_level) {
  const auto by_machine = ordered(payloads, l_hat, m, max_level);
  for (const Round2Payload* p : by_machine) {
    if (p->mode != Mode::kFrequentist) {
      throw std::invalid_argument("adc_point_estimate: needs frequentist payloads");
    }
  }
  return {embed(average(by_machine, l_hat), max_level), l_hat, Method::kAdc};
}

AggregatedPosterior aggregate_posterior(std::span<const Round2Payload> payloads, int l_hat,
                                        std::int64_t n, int m, int max_level) {
  if (n < 1) throw std::invalid_argument("aggregate_posterior: n must be positive");
  const auto by_machine = ordered(payloads, l_hat, m, max_level);
  const Mode mode = by_machine.front()->mode;
  for (const Round2Payload* p : by_machine) {
    if (p->mode != mode) throw std::invalid_argument("aggregate_posterior: mixed payload modes");
  }
  std::vector<double> mean = average(by_machine, l_hat);
  if (mode == Mode::kFrequentist) {
    const double shrink = static_cast<double>(n) / static_cast<double>(n + 1);
    for (double& v : mean) v *= shrink;
  }
  return {l_hat, embed(std::move(mean), max_level), 1.0 / static_cast<double>(n + 1)};
}

CoefficientPyramid posterior_draw(const AggregatedPosterior& post, std::uint64_t seed,
                                  std::uint64_t draw) {
  const rng::Stream stream(rng::stream_key(seed, rng::Domain::kPosterior, draw, 0));
  const std::size_t retained = CoefficientPyramid::size_for(post.l_hat);
  std::vector<double> z(retained);
  stream.fill_normal(0, z);
  const double sd = std::sqrt(post.variance);
  const auto mean = post.mean.flat();
  std::vector<double> out(post.mean.size(), 0.0);
  for (std::size_t p = 0; p < retained; ++p) out[p] = mean[p] + sd * z[p];
  return CoefficientPyramid(post.mean.max_level(), std::move(out));
}

std::vector<CoefficientPyramid> posterior_sample(const AggregatedPosterior& post,
                                                 std::size_t count, std::uint64_t seed,
                                                 std::uint64_t first_draw) {
  if (count < 1) throw std::invalid_argument("posterior_sample: count must be at least 1");
  std::vector<CoefficientPyramid> out;
  out.reserve(count);
  for (std::size_t d = 0; d < count; ++d) out.push_back(posterior_draw(post, seed, first_draw + d));
  return out;
}

AggregatedPosterior odc_posterior(std::span<const MachineObservations> machines,
                                  double s_assumed, std::int64_t n, int m, const Quantizer& q,
                                  Precision precision, BitLedger* ledger) {
  if (machines.empty()) throw std::invalid_argument("odc_posterior: no machines");
  const int max_level = machines.front().data.max_level();
  const int level = odc_level(s_assumed, n, max_level);
  std::vector<Round2Payload> payloads;
  payloads.reserve(machines.size());
  for (const MachineObservations& obs : machines) {
    payloads.push_back(round2_transmit(obs, level, q, Mode::kBayes, n, precision, ledger));
  }
  return aggregate_posterior(payloads, level, n, m, max_level);
}

AdaptiveRun run_adaptive(std::span<const MachineObservations> machines,
                         const SelectionConfig& cfg, const Quantizer& q, Precision precision,
                         Mode mode, Exec exec) {
  cfg.validate();
  if (machines.size() != static_cast<std::size_t>(cfg.m)) {
    throw std::invalid_argument("run_adaptive: expected " + std::to_string(cfg.m) +
                                " machines, got " + std::to_string(machines.size()));
  }
  const int max_level = machines.front().data.max_level();
  const LevelGrid grid = LevelGrid::make(cfg, max_level);
  const auto m = static_cast<std::ptrdiff_t>(machines.size());

  // Local statistics in parallel; transmission and ledger updates in machine
  // order.
  std::vector<LocalSummary> local(machines.size());
  const auto round1 = [&](std::ptrdiff_t k) {
    local[static_cast<std::size_t>(k)] = round1_local_summary(machines[static_cast<std::size_t>(k)], grid);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < m; ++k) round1(k);
  } else {
    for (std::ptrdiff_t k = 0; k < m; ++k) round1(k);
  }
  BitLedger ledger(cfg.m);
  std::vector<LocalSummary> received;
  received.reserve(local.size());
  for (const LocalSummary& s : local) received.push_back(round1_transmit(s, q, precision, ledger));

  AdaptiveRun run{round1_aggregate(std::move(received), cfg.n, cfg.m), {}, {}, ledger, {}, {}, {}};
  run.selection = lepski_select(run.energy.adjusted, cfg, grid);
  run.broadcast = broadcast_level(run.selection.l_hat, max_level, &run.ledger);

  const int l_hat = run.selection.l_hat;
  run.payloads.resize(machines.size());
  const auto round2 = [&](std::ptrdiff_t k) {
    run.payloads[static_cast<std::size_t>(k)] =
        round2_transmit(machines[static_cast<std::size_t>(k)], l_hat, q, mode, cfg.n, precision);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < m; ++k) round2(k);
  } else {
    for (std::ptrdiff_t k = 0; k < m; ++k) round2(k);
  }
  for (const Round2Payload& p : run.payloads) run.ledger.add(p.machine, Round::kRound2, p.bits);

  run.posterior = aggregate_posterior(run.payloads, l_hat, cfg.n, cfg.m, max_level);
  if (mode == Mode::kFrequentist) {
    run.estimate = adc_point_estimate(run.payloads, l_hat, cfg.m, max_level);
  } else {
    run.estimate = {run.posterior.mean, l_hat, Method::kAdc};
  }
  return run;
}

}  // namespace distwave
