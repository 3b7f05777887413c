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
#include <iosfwd>
#include <span>
#include <vector>

#include "distwave/parallel.hpp"

namespace distwave {

// Dyadic array of wavelet coefficients: level i holds 2^i entries, levels
// 0..max_level. Stored flat, level i starting at offset 2^i - 1.
class CoefficientPyramid {
 public:
  static constexpr int kMaxSupportedLevel = 28;

  // Single zero coefficient at level 0.
  CoefficientPyramid() : CoefficientPyramid(0) {}
  // All-zero pyramid.
  explicit CoefficientPyramid(int max_level);
  // Takes ownership of a flat coefficient vector; throws std::invalid_argument
  // unless flat.size() == size_for(max_level) and every entry is finite.
  CoefficientPyramid(int max_level, std::vector<double> flat);

  static constexpr std::size_t offset(int level) {
    return (std::size_t{1} << level) - 1;
  }
  static constexpr std::size_t size_for(int max_level) {
    return (std::size_t{1} << (max_level + 1)) - 1;
  }

  int max_level() const { return max_level_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> level(int i) const;
  std::span<double> level(int i);
  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  double operator()(int i, std::size_t j) const { return data_[offset(i) + j]; }
  double& operator()(int i, std::size_t j) { return data_[offset(i) + j]; }

  // Copy with every level above `level` set to zero.
  CoefficientPyramid truncated(int level) const;

  bool operator==(const CoefficientPyramid&) const = default;

 private:
  int max_level_;
  std::vector<double> data_;
};

// Squared l2 distance between two pyramids of the same max level. This is the
// coefficient-space (Parseval) integrated squared error.
double squared_distance(const CoefficientPyramid& a, const CoefficientPyramid& b);

// Besov-type ball B^s_{2,inf}(L): sup_i 2^{2is} sum_j theta_ij^2 <= L.
struct BesovBall {
  double smoothness;
  double radius;

  BesovBall(double s, double radius);
  bool contains(const CoefficientPyramid& theta) const;
};

// max over 0 <= i <= I of 2^{2is} sum_j theta_ij^2.
double besov_norm_sq(const CoefficientPyramid& theta, double s);

struct ModelConfig {
  std::int64_t n = 0;   // signal-to-noise / total sample size
  int m = 1;            // number of machines
  int max_level = 15;   // I
  std::uint64_t master_seed = 0;

  // Throws std::invalid_argument on m < 1, n < m or max_level out of range.
  void validate() const;
  double noise_sd() const;
};

// Per-machine noise standard deviation sqrt(m / n).
double machine_noise_sd(std::int64_t n, int m);

struct MachineObservations {
  int machine;  // 1..m
  CoefficientPyramid data;
  double noise_sd;
};

// theta_ij = 2^{-is} sin(j+1)/(j+1), i = 0..max_level.
CoefficientPyramid generate_smooth_signal(double s, int max_level);

// Zero except theta_11 = 0.15, theta_22 = 0.135, theta_32 = -0.01,
// theta_34 = -0.05, theta_37 = 0.04. Requires max_level >= 3.
CoefficientPyramid generate_sparse_signal(int max_level = 15);

// y^(k)_ij = theta_ij + sqrt(m/n) Z^(k)_ij for k = 1..m. Z^(k)_ij is normal
// variate number (2^i - 1 + j) of the stream keyed by
// (master_seed, kObservation, replication, k), so the output is a pure
// function of (theta0, cfg, replication) regardless of `exec`.
std::vector<MachineObservations> generate_observations(
    const CoefficientPyramid& theta0, const ModelConfig& cfg,
    std::uint64_t replication, Exec exec = Exec::kParallel);

// A single machine's observations; generate_observations is this in a loop.
MachineObservations generate_machine_observations(
    const CoefficientPyramid& theta0, const ModelConfig& cfg,
    std::uint64_t replication, int machine);

// CSV with header `level,index,value`, rows sorted by (level, index). Values
// are printed with 17 significant digits so a read-back is exact.
void write_pyramid_csv(std::ostream& out, const CoefficientPyramid& theta);
// Reads the format above. Throws std::runtime_error on malformed input,
// missing or duplicate entries.
CoefficientPyramid read_pyramid_csv(std::istream& in);

}  // namespace distwave
