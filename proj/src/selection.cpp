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

#include "distwave/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace distwave {

namespace {

// Slack for log2(n)/(1+2s) landing a rounding error away from an integer.
constexpr double kLevelSlack = 1e-9;

double level_ratio(std::int64_t n, double s) {
  return std::log2(static_cast<double>(n)) / (1.0 + 2.0 * s);
}

}  // namespace

void SelectionConfig::validate() const {
  if (!(s_min > 0.0)) throw std::invalid_argument("s_min must be positive");
  if (!(s_max > s_min)) throw std::invalid_argument("s_max must exceed s_min");
  if (!(tau > 2.0)) {
    throw std::invalid_argument("tau must be > 2, got " + std::to_string(tau));
  }
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (n < m) throw std::invalid_argument("n must be at least m");
  if (std::log2(static_cast<double>(m)) > level_ratio(n, s_max) + kLevelSlack) {
    throw std::invalid_argument("m = " + std::to_string(m) + " exceeds n^{1/(1+2 s_max)} = " +
                                std::to_string(std::exp2(level_ratio(n, s_max))));
  }
}

LevelGrid LevelGrid::make(std::int64_t n, double s_min, double s_max, int max_level) {
  if (n < 1) throw std::invalid_argument("level grid: n must be positive");
  if (!(s_min > 0.0) || !(s_max > s_min)) {
    throw std::invalid_argument("level grid: need 0 < s_min < s_max");
  }
  LevelGrid g;
  g.l_min = std::max(0, static_cast<int>(std::ceil(level_ratio(n, s_max) - kLevelSlack)));
  g.l_max = std::min(max_level, static_cast<int>(std::floor(level_ratio(n, s_min) + kLevelSlack)));
  if (g.l_min > g.l_max) {
    throw std::invalid_argument("level grid is empty: l_min = " + std::to_string(g.l_min) +
                                " > l_max = " + std::to_string(g.l_max) + " (I = " +
                                std::to_string(max_level) + ")");
  }
  return g;
}

std::vector<int> LevelGrid::members() const {
  std::vector<int> out;
  for (int l = l_min; l <= l_max; ++l) out.push_back(l);
  return out;
}

SelectionResult lepski_select(std::span<const double> adjusted, const SelectionConfig& cfg,
                              const LevelGrid& grid) {
  if (grid.size() < 1) throw std::invalid_argument("lepski_select: empty grid");
  if (!(cfg.tau > 2.0)) {
    throw std::invalid_argument("lepski_select: tau must be > 2, got " + std::to_string(cfg.tau));
  }
  if (adjusted.size() != static_cast<std::size_t>(grid.size())) {
    throw std::invalid_argument("lepski_select: expected " + std::to_string(grid.size()) +
                                " adjusted statistics, got " + std::to_string(adjusted.size()));
  }
  const auto g = static_cast<std::size_t>(grid.size());
  SelectionResult r;
  r.grid = grid;
  r.l_hat = grid.l_max;
  r.thresholds.resize(g);
  for (std::size_t p = 0; p < g; ++p) {
    r.thresholds[p] = cfg.tau * std::ldexp(1.0, grid.l_min + static_cast<int>(p)) /
                      static_cast<double>(cfg.n);
  }
  r.partial_sums.resize(g);
  for (std::size_t a = 0; a < g; ++a) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t b = a; b < g; ++b) {
      sum += adjusted[b];
      r.partial_sums[a].push_back(sum);
      if (!(sum <= r.thresholds[b])) ok = false;
    }
    if (ok && !r.rule_fired) {
      r.rule_fired = true;
      r.l_hat = grid.l_min + static_cast<int>(a);
    }
  }
  return r;
}

double besov_constant(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("besov_constant: s must be positive");
  return 1.0 / (1.0 - std::exp2(-2.0 * s));
}

int oracle_level(double besov_norm_sq, double s, std::int64_t n, const LevelGrid& grid) {
  const double bias = besov_constant(s) * besov_norm_sq;
  for (int l = grid.l_min; l <= grid.l_max; ++l) {
    if (bias * std::exp2(-2.0 * l * s) <= std::ldexp(1.0, l) / static_cast<double>(n)) return l;
  }
  return grid.l_max;
}

int oracle_level(const CoefficientPyramid& theta0, double s, std::int64_t n,
                 const LevelGrid& grid) {
  return oracle_level(besov_norm_sq(theta0, s), s, n, grid);
}

int odc_level(double s_assumed, std::int64_t n, int max_level) {
  if (!(s_assumed > 0.0)) throw std::invalid_argument("odc_level: s must be positive");
  if (n < 1) throw std::invalid_argument("odc_level: n must be positive");
  const double x = level_ratio(n, s_assumed);
  const int rounded = static_cast<int>(std::floor(x + 0.5 + kLevelSlack));
  return std::clamp(rounded, 0, max_level);
}

int mmle_select_from_energy(std::span<const double> energy, std::int64_t n, int m) {
  if (energy.empty()) throw std::invalid_argument("mmle_select: no levels");
  if (n < 1 || m < 1) throw std::invalid_argument("mmle_select: need n, m >= 1");
  const double noise = static_cast<double>(m) / static_cast<double>(n);
  const double slab = 1.0 + noise;
  const auto loglik = [&](std::size_t level, double var) {
    const double count = static_cast<double>(m) * std::ldexp(1.0, static_cast<int>(level));
    return -0.5 * (count * std::log(2.0 * std::numbers::pi * var) + energy[level] / var);
  };
  double best = 0.0;
  int best_level = -1;
  for (std::size_t l = 0; l < energy.size(); ++l) {
    double total = 0.0;
    for (std::size_t i = 0; i < energy.size(); ++i) total += loglik(i, i <= l ? slab : noise);
    if (best_level < 0 || total > best) {
      best = total;
      best_level = static_cast<int>(l);
    }
  }
  return best_level;
}

int mmle_select(std::span<const MachineObservations> machines, std::int64_t n, int m) {
  if (machines.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("mmle_select: expected " + std::to_string(m) + " machines, got " +
                                std::to_string(machines.size()));
  }
  const int levels = machines.front().data.max_level() + 1;
  std::vector<double> energy(static_cast<std::size_t>(levels), 0.0);
  for (const MachineObservations& obs : machines) {
    if (obs.data.max_level() + 1 != levels) {
      throw std::invalid_argument("mmle_select: machines differ in max level");
    }
    for (int i = 0; i < levels; ++i) {
      for (double y : obs.data.level(i)) energy[static_cast<std::size_t>(i)] += y * y;
    }
  }
  return mmle_select_from_energy(energy, n, m);
}

}  // namespace distwave
