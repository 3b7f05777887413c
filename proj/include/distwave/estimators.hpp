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
#include <span>
#include <string_view>
#include <vector>

#include "distwave/parallel.hpp"
#include "distwave/protocol.hpp"
#include "distwave/selection.hpp"
#include "distwave/sequence_model.hpp"

namespace distwave {

enum class Method { kAdc, kOdc, kMmle };

// "aDC", "oDC", "MMLE".
std::string_view method_name(Method method);

struct PointEstimate {
  CoefficientPyramid coefficients;
  int truncation = 0;
  Method method = Method::kAdc;
};

// Gaussian N(mean_ij, variance) for levels <= l_hat, point mass at 0 above.
struct AggregatedPosterior {
  int l_hat = 0;
  CoefficientPyramid mean;
  double variance = 0.0;  // 1 / (n + 1)
};

// theta_ij = m^{-1} sum_k y^(k)_ij for i <= l_hat, 0 above, summed in machine
// order. Payloads must be frequentist, cover levels 0..l_hat and come from
// machines 1..m exactly once; throws std::invalid_argument otherwise.
PointEstimate adc_point_estimate(std::span<const Round2Payload> payloads, int l_hat, int m,
                                 int max_level);

// Aggregated posterior with variance 1/(n+1). Bayes payloads (already
// n/(n+1) y) are averaged directly; frequentist payloads are averaged and
// then scaled by n/(n+1), which makes the mean exactly n/(n+1) times the
// point estimate of the same payloads.
AggregatedPosterior aggregate_posterior(std::span<const Round2Payload> payloads, int l_hat,
                                        std::int64_t n, int m, int max_level);

// Draw `draw` of the posterior: retained coefficient p is mean_p + sd * Z_p
// with Z_p normal variate p of the stream keyed by (seed, kPosterior, draw).
CoefficientPyramid posterior_draw(const AggregatedPosterior& post, std::uint64_t seed,
                                  std::uint64_t draw);
// Draws first_draw .. first_draw + count - 1. Throws for count < 1.
std::vector<CoefficientPyramid> posterior_sample(const AggregatedPosterior& post,
                                                 std::size_t count, std::uint64_t seed,
                                                 std::uint64_t first_draw = 0);

// Non-adaptive posterior truncated at odc_level(s_assumed, n, I), built from
// Bayes-mode round-2 messages. Adds the round-2 bits to the ledger if given.
AggregatedPosterior odc_posterior(std::span<const MachineObservations> machines,
                                  double s_assumed, std::int64_t n, int m, const Quantizer& q,
                                  Precision precision, BitLedger* ledger = nullptr);

// The full two-round adaptive protocol.
struct AdaptiveRun {
  EnergySummary energy;
  SelectionResult selection;
  Broadcast broadcast;
  BitLedger ledger;
  std::vector<Round2Payload> payloads;
  AggregatedPosterior posterior;
  // Frequentist mode: the averaged observations. Bayes mode: the posterior mean.
  PointEstimate estimate;
};

// Round 1 (local energies, quantized upload, aggregation), Lepskii selection,
// level broadcast, round 2 in the given mode, and aggregation. Per-machine
// work runs in parallel under Exec::kParallel with identical results.
AdaptiveRun run_adaptive(std::span<const MachineObservations> machines,
                         const SelectionConfig& cfg, const Quantizer& q, Precision precision,
                         Mode mode, Exec exec = Exec::kParallel);

}  // namespace distwave
