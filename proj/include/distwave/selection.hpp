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
#include <vector>

#include "distwave/sequence_model.hpp"

namespace distwave {

struct SelectionConfig {
  double s_min = 0.2;
  double s_max = 1.5;
  double tau = 3.0;
  std::int64_t n = 0;
  int m = 1;

  // Throws std::invalid_argument naming the offending field: needs
  // 0 < s_min < s_max, tau > 2, n >= m >= 1 and m <= n^{1/(1+2 s_max)}.
  void validate() const;
};

// Integer levels l_min..l_max, with l_min = ceil(log2(n)/(1+2 s_max)) and
// l_max = floor(log2(n)/(1+2 s_min)), clipped to [0, max_level].
struct LevelGrid {
  int l_min = 0;
  int l_max = 0;

  // Throws std::invalid_argument when the clipped range is empty.
  static LevelGrid make(std::int64_t n, double s_min, double s_max, int max_level);
  static LevelGrid make(const SelectionConfig& cfg, int max_level) {
    return make(cfg.n, cfg.s_min, cfg.s_max, max_level);
  }

  int size() const { return l_max - l_min + 1; }
  bool contains(int level) const { return level >= l_min && level <= l_max; }
  std::vector<int> members() const;
  bool operator==(const LevelGrid&) const = default;
};

struct SelectionResult {
  int l_hat = 0;
  // False when no level satisfied the rule and l_hat fell back to l_max.
  bool rule_fired = false;
  LevelGrid grid;
  // partial_sums[a][b - a] = sum of adjusted T over grid positions a..b.
  std::vector<std::vector<double>> partial_sums;
  // tau 2^l / n per grid position.
  std::vector<double> thresholds;
};

// l_hat = min{ l in grid : sum_{i=l}^{k} T_i <= tau 2^k / n for every grid
// k >= l }, or l_max when no level qualifies. adjusted[p] is the adjusted
// statistic for level grid.l_min + p. Ties (equality) qualify.
SelectionResult lepski_select(std::span<const double> adjusted, const SelectionConfig& cfg,
                              const LevelGrid& grid);

// 1 / (1 - 2^{-2s}).
double besov_constant(double s);

// Least grid level with c_s * norm_sq * 2^{-2ls} <= 2^l / n, else l_max.
int oracle_level(double besov_norm_sq, double s, std::int64_t n, const LevelGrid& grid);
int oracle_level(const CoefficientPyramid& theta0, double s, std::int64_t n,
                 const LevelGrid& grid);

// log2(n)/(1+2s) rounded half up, clipped to [0, max_level].
int odc_level(double s_assumed, std::int64_t n, int max_level);

// Marginal-likelihood truncation baseline: argmax over l in 0..I of the
// pooled Gaussian log-likelihood of all y^(k)_ij with variance 1 + m/n for
// i <= l and m/n above. Ties go to the smaller level. All machines must share
// the same max level.
int mmle_select(std::span<const MachineObservations> machines, std::int64_t n, int m);

// Same rule from per-level sums of squares over all machines
// (energy[i] = sum_k sum_j (y^(k)_ij)^2).
int mmle_select_from_energy(std::span<const double> energy, std::int64_t n, int m);

}  // namespace distwave
