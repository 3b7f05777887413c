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

#include "distwave/sequence_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "distwave/rng.hpp"

namespace distwave {

namespace {

void check_level(int max_level) {
  if (max_level < 0 || max_level > CoefficientPyramid::kMaxSupportedLevel) {
    throw std::invalid_argument("pyramid max level must be in [0, " +
                                std::to_string(CoefficientPyramid::kMaxSupportedLevel) +
                                "], got " + std::to_string(max_level));
  }
}

}  // namespace

CoefficientPyramid::CoefficientPyramid(int max_level) : max_level_(max_level) {
  check_level(max_level);
  data_.assign(size_for(max_level), 0.0);
}

CoefficientPyramid::CoefficientPyramid(int max_level, std::vector<double> flat)
    : max_level_(max_level), data_(std::move(flat)) {
  check_level(max_level);
  if (data_.size() != size_for(max_level)) {
    throw std::invalid_argument("pyramid of max level " + std::to_string(max_level) +
                                " needs " + std::to_string(size_for(max_level)) +
                                " coefficients, got " + std::to_string(data_.size()));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("pyramid coefficients must be finite");
  }
}

std::span<const double> CoefficientPyramid::level(int i) const {
  if (i < 0 || i > max_level_) throw std::out_of_range("pyramid level out of range");
  return std::span<const double>(data_).subspan(offset(i), std::size_t{1} << i);
}

std::span<double> CoefficientPyramid::level(int i) {
  if (i < 0 || i > max_level_) throw std::out_of_range("pyramid level out of range");
  return std::span<double>(data_).subspan(offset(i), std::size_t{1} << i);
}

CoefficientPyramid CoefficientPyramid::truncated(int level) const {
  CoefficientPyramid out = *this;
  if (level < max_level_) {
    const std::size_t keep = level < 0 ? 0 : size_for(level);
    std::fill(out.data_.begin() + static_cast<std::ptrdiff_t>(keep), out.data_.end(), 0.0);
  }
  return out;
}

double squared_distance(const CoefficientPyramid& a, const CoefficientPyramid& b) {
  if (a.max_level() != b.max_level()) {
    throw std::invalid_argument("squared_distance: pyramids differ in max level");
  }
  double sum = 0.0;
  const auto fa = a.flat();
  const auto fb = b.flat();
  for (std::size_t p = 0; p < fa.size(); ++p) {
    const double d = fa[p] - fb[p];
    sum += d * d;
  }
  return sum;
}

BesovBall::BesovBall(double s, double r) : smoothness(s), radius(r) {
  if (!(s > 0.0)) throw std::invalid_argument("Besov smoothness must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("Besov radius must be positive");
}

bool BesovBall::contains(const CoefficientPyramid& theta) const {
  return besov_norm_sq(theta, smoothness) <= radius;
}

double besov_norm_sq(const CoefficientPyramid& theta, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("besov_norm_sq: s must be positive");
  double best = 0.0;
  for (int i = 0; i <= theta.max_level(); ++i) {
    double energy = 0.0;
    for (double v : theta.level(i)) energy += v * v;
    best = std::max(best, std::exp2(2.0 * i * s) * energy);
  }
  return best;
}

void ModelConfig::validate() const {
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (n < m) throw std::invalid_argument("n must be at least m");
  check_level(max_level);
}

double ModelConfig::noise_sd() const { return machine_noise_sd(n, m); }

double machine_noise_sd(std::int64_t n, int m) {
  return std::sqrt(static_cast<double>(m) / static_cast<double>(n));
}

CoefficientPyramid generate_smooth_signal(double s, int max_level) {
  if (!(s > 0.0)) throw std::invalid_argument("smoothness s must be positive");
  if (max_level < 0) throw std::invalid_argument("max level must be non-negative");
  CoefficientPyramid theta(max_level);
  for (int i = 0; i <= max_level; ++i) {
    const double scale = std::exp2(-i * s);
    auto lvl = theta.level(i);
    for (std::size_t j = 0; j < lvl.size(); ++j) {
      const double x = static_cast<double>(j + 1);
      lvl[j] = scale * std::sin(x) / x;
    }
  }
  return theta;
}

CoefficientPyramid generate_sparse_signal(int max_level) {
  if (max_level < 3) throw std::invalid_argument("sparse signal needs max level >= 3");
  CoefficientPyramid theta(max_level);
  theta(1, 1) = 0.15;
  theta(2, 2) = 0.135;
  theta(3, 2) = -0.01;
  theta(3, 4) = -0.05;
  theta(3, 7) = 0.04;
  return theta;
}

MachineObservations generate_machine_observations(const CoefficientPyramid& theta0,
                                                  const ModelConfig& cfg,
                                                  std::uint64_t replication, int machine) {
  if (machine < 1 || machine > cfg.m) throw std::invalid_argument("machine index out of range");
  const double sd = cfg.noise_sd();
  const rng::Stream stream(rng::stream_key(cfg.master_seed, rng::Domain::kObservation,
                                           replication, static_cast<std::uint64_t>(machine)));
  std::vector<double> y(theta0.size());
  stream.fill_normal(0, y);
  const auto truth = theta0.flat();
  for (std::size_t p = 0; p < y.size(); ++p) y[p] = truth[p] + sd * y[p];
  return {machine, CoefficientPyramid(theta0.max_level(), std::move(y)), sd};
}

std::vector<MachineObservations> generate_observations(const CoefficientPyramid& theta0,
                                                       const ModelConfig& cfg,
                                                       std::uint64_t replication, Exec exec) {
  cfg.validate();
  if (theta0.max_level() != cfg.max_level) {
    throw std::invalid_argument("signal max level " + std::to_string(theta0.max_level()) +
                                " does not match configured I = " +
                                std::to_string(cfg.max_level));
  }
  std::vector<MachineObservations> out(static_cast<std::size_t>(cfg.m));
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int k = 1; k <= cfg.m; ++k) {
      out[static_cast<std::size_t>(k - 1)] =
          generate_machine_observations(theta0, cfg, replication, k);
    }
  } else {
    for (int k = 1; k <= cfg.m; ++k) {
      out[static_cast<std::size_t>(k - 1)] =
          generate_machine_observations(theta0, cfg, replication, k);
    }
  }
  return out;
}

void write_pyramid_csv(std::ostream& out, const CoefficientPyramid& theta) {
  out << "level,index,value\n";
  std::ostringstream row;
  row << std::setprecision(17);
  for (int i = 0; i <= theta.max_level(); ++i) {
    const auto lvl = theta.level(i);
    for (std::size_t j = 0; j < lvl.size(); ++j) {
      row.str("");
      row << i << ',' << j << ',' << lvl[j] << '\n';
      out << row.str();
    }
  }
}

CoefficientPyramid read_pyramid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "level,index,value") {
    throw std::runtime_error("pyramid CSV: expected header 'level,index,value'");
  }
  struct Row {
    int level;
    long long index;
    double value;
  };
  std::vector<Row> rows;
  int line_no = 1;
  int max_level = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string a, b, c;
    if (!std::getline(fields, a, ',') || !std::getline(fields, b, ',') ||
        !std::getline(fields, c)) {
      throw std::runtime_error("pyramid CSV line " + std::to_string(line_no) +
                               ": expected 3 fields");
    }
    Row r{};
    const auto bad = [&] {
      return std::runtime_error("pyramid CSV line " + std::to_string(line_no) +
                                ": cannot parse '" + line + "'");
    };
    if (std::from_chars(a.data(), a.data() + a.size(), r.level).ec != std::errc{}) throw bad();
    if (std::from_chars(b.data(), b.data() + b.size(), r.index).ec != std::errc{}) throw bad();
    try {
      std::size_t used = 0;
      r.value = std::stod(c, &used);
      if (used != c.size()) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
    if (r.level < 0 || r.level > CoefficientPyramid::kMaxSupportedLevel || r.index < 0 ||
        r.index >= (1LL << r.level)) {
      throw std::runtime_error("pyramid CSV line " + std::to_string(line_no) +
                               ": (level, index) out of range");
    }
    max_level = std::max(max_level, r.level);
    rows.push_back(r);
  }
  if (max_level < 0) throw std::runtime_error("pyramid CSV: no coefficients");
  const std::size_t total = CoefficientPyramid::size_for(max_level);
  if (rows.size() != total) {
    throw std::runtime_error("pyramid CSV: expected " + std::to_string(total) +
                             " rows for max level " + std::to_string(max_level) + ", got " +
                             std::to_string(rows.size()));
  }
  std::vector<double> flat(total, 0.0);
  std::vector<char> seen(total, 0);
  for (const Row& r : rows) {
    const std::size_t p = CoefficientPyramid::offset(r.level) + static_cast<std::size_t>(r.index);
    if (seen[p]) throw std::runtime_error("pyramid CSV: duplicate entry");
    seen[p] = 1;
    flat[p] = r.value;
  }
  return CoefficientPyramid(max_level, std::move(flat));
}

}  // namespace distwave
