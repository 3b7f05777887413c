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

#include "distwave/wavelet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "distwave/daubechies_filters.hpp"

namespace distwave {

GridFunction::GridFunction(std::vector<double> v) : values(std::move(v)) {
  if (values.size() < 2) throw std::invalid_argument("grid function needs at least 2 points");
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("grid function values must be finite");
  }
}

double grid_mise(const GridFunction& f, const GridFunction& g) {
  if (f.size() != g.size()) {
    throw std::invalid_argument("grid_mise: grids differ (" + std::to_string(f.size()) + " vs " +
                                std::to_string(g.size()) + " points)");
  }
  if (f.size() == 0) throw std::invalid_argument("grid_mise: empty grid");
  double sum = 0.0;
  for (std::size_t h = 0; h < f.size(); ++h) {
    const double d = f.values[h] - g.values[h];
    sum += d * d;
  }
  return sum / static_cast<double>(f.size());
}

void write_grid_csv(std::ostream& out, const GridFunction& f) {
  std::ostringstream row;
  row << std::setprecision(17);
  out << "t,value\n";
  for (std::size_t h = 0; h < f.size(); ++h) {
    row.str("");
    row << f.point(h) << ',' << f.values[h] << '\n';
    out << row.str();
  }
}

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

// Function sampled on the fine grid t = u / 2^(R+1), u in [first, first + v.size()).
struct FineFn {
  std::ptrdiff_t first = 0;
  std::vector<double> v;

  std::ptrdiff_t end() const { return first + static_cast<std::ptrdiff_t>(v.size()); }
};

// Midpoint rule on the 2^R cells: the cell midpoints are the odd fine indices.
double dot(const FineFn& a, const FineFn& b, double cell) {
  std::ptrdiff_t lo = std::max(a.first, b.first);
  const std::ptrdiff_t hi = std::min(a.end(), b.end());
  if ((lo & 1) == 0) ++lo;
  double sum = 0.0;
  for (std::ptrdiff_t u = lo; u < hi; u += 2) sum += a.v[u - a.first] * b.v[u - b.first];
  return sum * cell;
}

// y += alpha * x, widening y's range when needed.
void axpy(FineFn& y, double alpha, const FineFn& x) {
  if (x.v.empty() || alpha == 0.0) return;
  if (y.v.empty()) {
    y.first = x.first;
    y.v.assign(x.v.size(), 0.0);
  }
  const std::ptrdiff_t lo = std::min(y.first, x.first);
  const std::ptrdiff_t hi = std::max(y.end(), x.end());
  if (lo != y.first || hi != y.end()) {
    std::vector<double> grown(static_cast<std::size_t>(hi - lo), 0.0);
    std::copy(y.v.begin(), y.v.end(), grown.begin() + (y.first - lo));
    y.v = std::move(grown);
    y.first = lo;
  }
  for (std::size_t p = 0; p < x.v.size(); ++p) y.v[x.first - y.first + p] += alpha * x.v[p];
}

void scale(FineFn& f, double alpha) {
  for (double& x : f.v) x *= alpha;
}

// Two passes of classical Gram-Schmidt projection against `basis`.
void project_out(FineFn& f, const std::vector<FineFn>& basis, double cell) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const FineFn& b : basis) axpy(f, -dot(f, b, cell), b);
  }
}

// Drops entries below rel_tol * max|f| from both ends of the range.
void trim(FineFn& f, double rel_tol) {
  double peak = 0.0;
  for (double x : f.v) peak = std::max(peak, std::abs(x));
  const double cut = peak * rel_tol;
  std::size_t lo = 0, hi = f.v.size();
  while (lo < hi && std::abs(f.v[lo]) <= cut) ++lo;
  while (hi > lo && std::abs(f.v[hi - 1]) <= cut) --hi;
  f.v = std::vector<double>(f.v.begin() + static_cast<std::ptrdiff_t>(lo),
                            f.v.begin() + static_cast<std::ptrdiff_t>(hi));
  f.first += static_cast<std::ptrdiff_t>(lo);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int t = 1; t <= k; ++t) r = r * static_cast<double>(n - k + t) / t;
  return r;
}

// Daubechies scaling function on [0, 2N-1] with step 2^-depth: exact values
// at the integers (eigenvector of the two-scale matrix, normalized to sum 1),
// then dyadic refinement phi(x) = sqrt2 sum_l h_l phi(2x - l).
std::vector<double> scaling_table(std::span<const double> h, int depth) {
  const auto taps = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t step = std::ptrdiff_t{1} << depth;
  std::vector<double> phi(static_cast<std::size_t>((taps - 1) * step + 1), 0.0);
  if (taps == 2) {
    phi[0] = 1.0;  // Haar, right-continuous at the jumps
  } else {
    const auto unknowns = static_cast<Eigen::Index>(taps - 2);
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(unknowns, unknowns);
    for (Eigen::Index r = 0; r < unknowns; ++r) {
      for (Eigen::Index c = 0; c < unknowns; ++c) {
        const std::ptrdiff_t idx = 2 * (r + 1) - (c + 1);
        if (idx >= 0 && idx < taps) a(r, c) += kSqrt2 * h[static_cast<std::size_t>(idx)];
      }
    }
    a.row(unknowns - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    rhs(unknowns - 1) = 1.0;
    const Eigen::VectorXd values = a.fullPivLu().solve(rhs);
    for (Eigen::Index r = 0; r < unknowns; ++r) {
      phi[static_cast<std::size_t>((r + 1) * step)] = values(r);
    }
  }
  const auto size = static_cast<std::ptrdiff_t>(phi.size());
  for (int d = 1; d <= depth; ++d) {
    const std::ptrdiff_t stride = step >> d;
    for (std::ptrdiff_t u = stride; u < size; u += 2 * stride) {
      double s = 0.0;
      for (std::ptrdiff_t l = 0; l < taps; ++l) {
        const std::ptrdiff_t w = 2 * u - l * step;
        if (w >= 0 && w < size) s += h[static_cast<std::size_t>(l)] * phi[static_cast<std::size_t>(w)];
      }
      phi[static_cast<std::size_t>(u)] = kSqrt2 * s;
    }
  }
  return phi;
}

// psi(x) = sqrt2 sum_l (-1)^l h_{2N-1-l} phi(2x - l), same grid as phi.
std::vector<double> wavelet_table(std::span<const double> h, const std::vector<double>& phi,
                                  int depth) {
  const auto taps = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t step = std::ptrdiff_t{1} << depth;
  const auto size = static_cast<std::ptrdiff_t>(phi.size());
  std::vector<double> psi(phi.size(), 0.0);
  for (std::ptrdiff_t u = 0; u < size; ++u) {
    double s = 0.0;
    for (std::ptrdiff_t l = 0; l < taps; ++l) {
      const std::ptrdiff_t w = 2 * u - l * step;
      if (w < 0 || w >= size) continue;
      const double g = ((l & 1) ? -1.0 : 1.0) * h[static_cast<std::size_t>(taps - 1 - l)];
      s += g * phi[static_cast<std::size_t>(w)];
    }
    psi[static_cast<std::size_t>(u)] = kSqrt2 * s;
  }
  return psi;
}

// Samples of 2^(level/2) table(2^level t - k) on the fine grid, level >= i0.
FineFn sample_mother(const std::vector<double>& table, int level, int i0, int depth,
                     std::ptrdiff_t k, std::ptrdiff_t fine_points) {
  const std::ptrdiff_t table_size = static_cast<std::ptrdiff_t>(table.size());
  const std::ptrdiff_t step = std::ptrdiff_t{1} << depth;
  const std::ptrdiff_t mult = std::ptrdiff_t{1} << (level - i0);
  // table index = u * mult - k * step, support u in [k step / mult, (k step + size - 1) / mult]
  std::ptrdiff_t lo = (k * step + mult - 1) / mult;
  if (k * step < 0) lo = -((-k * step) / mult);
  lo = std::max<std::ptrdiff_t>(lo, 0);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>((k * step + table_size - 1) / mult, fine_points - 1);
  FineFn f;
  f.first = lo;
  const double amp = std::exp2(0.5 * level);
  for (std::ptrdiff_t u = lo; u <= hi; ++u) {
    const std::ptrdiff_t idx = u * mult - k * step;
    f.v.push_back(idx >= 0 && idx < table_size ? amp * table[static_cast<std::size_t>(idx)] : 0.0);
  }
  return f;
}

std::vector<double> to_dense(const FineFn& f, std::ptrdiff_t fine_points) {
  std::vector<double> out(static_cast<std::size_t>(fine_points), 0.0);
  for (std::size_t p = 0; p < f.v.size(); ++p) {
    const std::ptrdiff_t u = f.first + static_cast<std::ptrdiff_t>(p);
    if (u >= 0 && u < fine_points) out[static_cast<std::size_t>(u)] = f.v[p];
  }
  return out;
}

// f(2t) * sqrt2 for a left-edge function, f(2t - 1) * sqrt2 for a right-edge one.
FineFn dilate_left(const FineFn& f) {
  FineFn g;
  g.first = (f.first + 1) / 2;
  for (std::ptrdiff_t u = g.first; 2 * u < f.end(); ++u) g.v.push_back(kSqrt2 * f.v[2 * u - f.first]);
  return g;
}

FineFn dilate_right(const FineFn& f, std::ptrdiff_t fine_last) {
  // t -> 2t - 1 maps fine index u to 2u - fine_last.
  FineFn g;
  std::ptrdiff_t u = (f.first + fine_last + 1) / 2;
  g.first = u;
  for (; u <= fine_last; ++u) {
    const std::ptrdiff_t src = 2 * u - fine_last;
    g.v.push_back(src >= f.first && src < f.end() ? kSqrt2 * f.v[src - f.first] : 0.0);
  }
  return g;
}

// Orthonormal basis of the functions in span(candidates) that are orthogonal
// to every function in `constraints`. Expects exactly `want` such directions.
std::vector<FineFn> edge_wavelets(std::vector<FineFn> candidates,
                                  const std::vector<FineFn>& constraints, int want,
                                  double cell) {
  std::vector<FineFn> span;
  for (FineFn& c : candidates) {
    project_out(c, span, cell);
    const double nrm = std::sqrt(dot(c, c, cell));
    if (nrm < 1e-8) throw std::runtime_error("edge wavelet candidates are linearly dependent");
    scale(c, 1.0 / nrm);
    span.push_back(std::move(c));
  }
  const auto d = static_cast<Eigen::Index>(span.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(constraints.size()), d);
  for (std::size_t r = 0; r < constraints.size(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      a(static_cast<Eigen::Index>(r), c) = dot(constraints[r], span[static_cast<std::size_t>(c)], cell);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
  const auto& ev = eig.eigenvalues();
  if (d <= want || ev(want - 1) > 1e-6 || ev(want) < 1e-4) {
    throw std::runtime_error("edge wavelet space is not " + std::to_string(want) +
                             "-dimensional (eigenvalues " + std::to_string(ev(want - 1)) + ", " +
                             std::to_string(d > want ? ev(want) : 0.0) + ")");
  }
  std::vector<FineFn> out;
  for (int q = 0; q < want; ++q) {
    FineFn f;
    for (Eigen::Index c = 0; c < d; ++c) axpy(f, eig.eigenvectors()(c, q), span[static_cast<std::size_t>(c)]);
    project_out(f, out, cell);
    scale(f, 1.0 / std::sqrt(dot(f, f, cell)));
    double peak = 0.0;
    for (double x : f.v) {
      if (std::abs(x) > std::abs(peak)) peak = x;
    }
    if (peak < 0.0) scale(f, -1.0);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

WaveletBasis WaveletBasis::build(int N, int i0, int R, double tol_gram) {
  if (N < 1 || N > detail::kMaxVanishingMoments) {
    throw std::invalid_argument("vanishing moments N must be in [1, 8], got " + std::to_string(N));
  }
  if (i0 < 0) throw std::invalid_argument("base level i0 must be non-negative");
  if (N >= 2 && (i0 >= 30 || (1 << i0) < 2 * N)) {
    throw std::invalid_argument("base level i0 = " + std::to_string(i0) +
                                " violates 2^i0 >= 2N for N = " + std::to_string(N));
  }
  if (R < i0 + 6 || R > 24) {
    throw std::invalid_argument("dyadic resolution R must satisfy i0 + 6 <= R <= 24");
  }
  if (!(tol_gram > 0.0)) throw std::invalid_argument("tol_gram must be positive");

  WaveletBasis basis;
  basis.N_ = N;
  basis.i0_ = i0;
  basis.R_ = R;
  basis.tol_gram_ = tol_gram;
  basis.edges_ = N >= 2 ? N : 0;
  basis.depth_ = R + 1 - i0;

  const auto h = detail::daubechies_filter(N);
  basis.phi_ = scaling_table(h, basis.depth_);
  basis.psi_ = wavelet_table(h, basis.phi_, basis.depth_);

  if (basis.edges_ > 0) {
    const std::ptrdiff_t fine_points = (std::ptrdiff_t{1} << (R + 1)) + 1;
    const std::ptrdiff_t fine_last = fine_points - 1;
    const double cell = std::exp2(-R);
    const std::ptrdiff_t width = std::ptrdiff_t{1} << i0;
    const int depth = basis.depth_;
    const auto mother_at = [&](const std::vector<double>& table, int level, std::ptrdiff_t k) {
      return sample_mother(table, level, i0, depth, k, fine_points);
    };

    // Edge scaling functions: binomial combinations of the translates that
    // touch or straddle the boundary, then Gram-Schmidt.
    std::vector<FineFn> left_phi, right_phi;
    for (int q = 0; q < N; ++q) {
      FineFn raw;
      for (int n = q; n <= 2 * N - 2; ++n) axpy(raw, binomial(n, q), mother_at(basis.phi_, i0, -n));
      project_out(raw, left_phi, cell);
      scale(raw, 1.0 / std::sqrt(dot(raw, raw, cell)));
      left_phi.push_back(std::move(raw));
    }
    for (int q = 0; q < N; ++q) {
      FineFn raw;
      for (int n = q; n <= 2 * N - 2; ++n) {
        axpy(raw, binomial(n, q), mother_at(basis.phi_, i0, width - 2 * N + 1 + n));
      }
      project_out(raw, left_phi, cell);
      project_out(raw, right_phi, cell);
      scale(raw, 1.0 / std::sqrt(dot(raw, raw, cell)));
      trim(raw, 1e-13);
      right_phi.push_back(std::move(raw));
    }

    // Everything the edge wavelets must be orthogonal to: V_{i0} and the
    // interior wavelets of level i0.
    std::vector<FineFn> coarse = left_phi;
    for (std::ptrdiff_t k = 1; k <= width - 2 * N; ++k) coarse.push_back(mother_at(basis.phi_, i0, k));
    coarse.insert(coarse.end(), right_phi.begin(), right_phi.end());
    for (std::ptrdiff_t k = 1; k <= width - 2 * N; ++k) coarse.push_back(mother_at(basis.psi_, i0, k));

    // Candidates from V_{i0+1} near each edge: the dilated edge scaling
    // functions and the 2N - 1 nearest interior translates. The edge wavelets
    // are the part of their span orthogonal to V_{i0} and the interior W_{i0}.
    const std::ptrdiff_t fine_width = 2 * width;
    std::vector<FineFn> left_cand, right_cand;
    for (const FineFn& f : left_phi) left_cand.push_back(dilate_left(f));
    const int local = 2 * N - 1;
    for (std::ptrdiff_t k = 1; k <= local; ++k) left_cand.push_back(mother_at(basis.phi_, i0 + 1, k));
    for (const FineFn& f : right_phi) right_cand.push_back(dilate_right(f, fine_last));
    for (std::ptrdiff_t k = fine_width - 2 * N - local + 1; k <= fine_width - 2 * N; ++k) {
      right_cand.push_back(mother_at(basis.phi_, i0 + 1, k));
    }

    std::vector<FineFn> left_psi = edge_wavelets(std::move(left_cand), coarse, N, cell);
    coarse.insert(coarse.end(), left_psi.begin(), left_psi.end());
    std::vector<FineFn> right_psi = edge_wavelets(std::move(right_cand), coarse, N, cell);

    for (auto* group : {&left_phi, &right_phi, &left_psi, &right_psi}) {
      for (FineFn& f : *group) trim(f, 1e-12);
    }
    const auto dense = [&](const std::vector<FineFn>& fs) {
      std::vector<std::vector<double>> out;
      for (const FineFn& f : fs) out.push_back(to_dense(f, fine_points));
      return out;
    };
    basis.left_phi_ = dense(left_phi);
    basis.right_phi_ = dense(right_phi);
    basis.left_psi_ = dense(left_psi);
    basis.right_psi_ = dense(right_psi);
  }
  basis.finish_setup();

  const double deviation = basis.gram_deviation(i0 + 1);
  if (!(deviation <= tol_gram)) {
    throw std::runtime_error("wavelet basis (N=" + std::to_string(N) + ", i0=" +
                             std::to_string(i0) + ", R=" + std::to_string(R) +
                             ") fails the Gram check: deviation " + std::to_string(deviation) +
                             " > " + std::to_string(tol_gram));
  }
  return basis;
}

void WaveletBasis::finish_setup() {
  const double fine = std::exp2(R_ + 1);
  const auto last_nonzero = [&](const std::vector<double>& f) {
    std::size_t u = f.size();
    while (u > 0 && f[u - 1] == 0.0) --u;
    return u == 0 ? 0.0 : std::min(1.0, static_cast<double>(u) / fine);
  };
  const auto first_nonzero = [&](const std::vector<double>& f) {
    std::size_t u = 0;
    while (u < f.size() && f[u] == 0.0) ++u;
    return u == 0 ? 0.0 : static_cast<double>(u - 1) / fine;
  };
  left_phi_end_.clear();
  right_phi_begin_.clear();
  left_psi_end_.clear();
  right_psi_begin_.clear();
  for (const auto& f : left_phi_) left_phi_end_.push_back(last_nonzero(f));
  for (const auto& f : right_phi_) right_phi_begin_.push_back(first_nonzero(f));
  for (const auto& f : left_psi_) left_psi_end_.push_back(last_nonzero(f));
  for (const auto& f : right_psi_) right_psi_begin_.push_back(first_nonzero(f));
}

std::size_t WaveletBasis::count(int max_level) const {
  if (max_level < i0_) return std::size_t{1} << i0_;
  return std::size_t{1} << (max_level + 1);
}

WaveletBasis::Locator WaveletBasis::locate(std::size_t index) const {
  const std::size_t scaling = std::size_t{1} << i0_;
  const int first_interior = edges_ > 0 ? 1 : 0;
  if (index < scaling) {
    const int j = static_cast<int>(index);
    if (j < edges_) return {Locator::kLeftPhi, i0_, j};
    if (j >= static_cast<int>(scaling) - edges_) {
      return {Locator::kRightPhi, i0_, j - (static_cast<int>(scaling) - edges_)};
    }
    return {Locator::kInteriorPhi, i0_, j - edges_ + first_interior};
  }
  const int level = std::bit_width(index) - 1;
  const std::size_t j = index - (std::size_t{1} << level);
  const std::size_t width = std::size_t{1} << level;
  if (static_cast<std::ptrdiff_t>(j) < edges_) return {Locator::kLeftPsi, level, static_cast<int>(j)};
  if (j >= width - static_cast<std::size_t>(edges_)) {
    return {Locator::kRightPsi, level, static_cast<int>(j - (width - edges_))};
  }
  return {Locator::kInteriorPsi, level, static_cast<int>(j) - edges_ + first_interior};
}

double WaveletBasis::mother(const std::vector<double>& table, double x) const {
  const double pos = x * std::exp2(depth_);
  if (pos < 0.0) return 0.0;
  const double base = std::floor(pos);
  const auto i = static_cast<std::size_t>(base);
  if (i >= table.size()) return 0.0;
  const double frac = pos - base;
  if (frac == 0.0 || i + 1 >= table.size()) return table[i];
  return table[i] + frac * (table[i + 1] - table[i]);
}

double WaveletBasis::edge(const std::vector<double>& table, double x) const {
  const double pos = x * std::exp2(R_ + 1);
  if (pos < 0.0) return 0.0;
  const double base = std::floor(pos);
  const auto i = static_cast<std::size_t>(base);
  if (i >= table.size()) return 0.0;
  const double frac = pos - base;
  if (frac == 0.0 || i + 1 >= table.size()) return table[i];
  return table[i] + frac * (table[i + 1] - table[i]);
}

double WaveletBasis::evaluate(std::size_t index, double t) const {
  if (t < 0.0 || t > 1.0) return 0.0;
  const Locator loc = locate(index);
  const double span = 2.0 * N_ - 1.0;
  switch (loc.kind) {
    case Locator::kInteriorPhi:
    case Locator::kInteriorPsi: {
      const double x = std::ldexp(t, loc.level) - loc.position;
      if (x < 0.0 || x > span) return 0.0;
      const auto& table = loc.kind == Locator::kInteriorPhi ? phi_ : psi_;
      return std::exp2(0.5 * loc.level) * mother(table, x);
    }
    case Locator::kLeftPhi:
      return edge(left_phi_[static_cast<std::size_t>(loc.position)], t);
    case Locator::kRightPhi:
      return edge(right_phi_[static_cast<std::size_t>(loc.position)], t);
    case Locator::kLeftPsi: {
      const double x = std::ldexp(t, loc.level - i0_);
      if (x > 1.0) return 0.0;
      return std::exp2(0.5 * (loc.level - i0_)) *
             edge(left_psi_[static_cast<std::size_t>(loc.position)], x);
    }
    case Locator::kRightPsi: {
      const double x = 1.0 - std::ldexp(1.0 - t, loc.level - i0_);
      if (x < 0.0) return 0.0;
      return std::exp2(0.5 * (loc.level - i0_)) *
             edge(right_psi_[static_cast<std::size_t>(loc.position)], x);
    }
  }
  return 0.0;
}

std::pair<double, double> WaveletBasis::support(std::size_t index) const {
  const Locator loc = locate(index);
  const double a = std::exp2(loc.level - i0_);
  const auto q = static_cast<std::size_t>(loc.position);
  switch (loc.kind) {
    case Locator::kInteriorPhi:
    case Locator::kInteriorPsi: {
      const double scale = std::exp2(-loc.level);
      return {std::max(0.0, loc.position * scale),
              std::min(1.0, (loc.position + 2.0 * N_ - 1.0) * scale)};
    }
    case Locator::kLeftPhi: return {0.0, left_phi_end_[q]};
    case Locator::kRightPhi: return {right_phi_begin_[q], 1.0};
    case Locator::kLeftPsi: return {0.0, left_psi_end_[q] / a};
    case Locator::kRightPsi: return {1.0 - (1.0 - right_psi_begin_[q]) / a, 1.0};
  }
  return {0.0, 1.0};
}

std::size_t WaveletBasis::pyramid_index(int level, std::size_t j) const {
  const std::size_t p = CoefficientPyramid::offset(level) + j;
  const std::size_t low_block = (std::size_t{2} << i0_) - 1;
  return p < low_block ? p : p + 1;
}

GridFunction WaveletBasis::synthesize(const CoefficientPyramid& theta, std::size_t H,
                                      Exec exec) const {
  if (theta.max_level() > max_level()) {
    throw std::invalid_argument("synthesize: pyramid level " + std::to_string(theta.max_level()) +
                                " exceeds basis max level " + std::to_string(max_level()));
  }
  if (H < 2) throw std::invalid_argument("synthesize: need at least 2 grid points");

  const int top = std::max(theta.max_level(), i0_);
  std::vector<double> coef(count(top), 0.0);
  for (int i = 0; i <= theta.max_level(); ++i) {
    const auto lvl = theta.level(i);
    for (std::size_t j = 0; j < lvl.size(); ++j) coef[pyramid_index(i, j)] = lvl[j];
  }
  // Blocks: the scaling block [0, 2^i0), then wavelet level i at [2^i, 2^(i+1)).
  struct Block {
    std::size_t begin, end;
    int level;
  };
  std::vector<Block> blocks;
  const auto add_block = [&](std::size_t b, std::size_t e, int level) {
    for (std::size_t p = b; p < e; ++p) {
      if (coef[p] != 0.0) {
        blocks.push_back({b, e, level});
        return;
      }
    }
  };
  add_block(0, std::size_t{1} << i0_, i0_);
  for (int i = i0_; i <= top; ++i) add_block(std::size_t{1} << i, std::size_t{2} << i, i);

  const int first_interior = edges_ > 0 ? 1 : 0;
  const double span = 2.0 * N_ - 1.0;
  const auto value_at = [&](double t) {
    double sum = 0.0;
    for (const Block& blk : blocks) {
      const std::size_t width = blk.end - blk.begin;
      for (int q = 0; q < edges_; ++q) {
        sum += coef[blk.begin + static_cast<std::size_t>(q)] * evaluate(blk.begin + q, t);
        const std::size_t r = blk.end - static_cast<std::size_t>(edges_) + static_cast<std::size_t>(q);
        sum += coef[r] * evaluate(r, t);
      }
      // Interior translates k with 2^level t - k in [0, 2N-1].
      const double x = std::ldexp(t, blk.level);
      const auto k_lo = std::max<std::ptrdiff_t>(first_interior,
                                                 static_cast<std::ptrdiff_t>(std::ceil(x - span)));
      const auto k_hi = std::min<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(width) - 2 * edges_ - 1 + first_interior,
          static_cast<std::ptrdiff_t>(std::floor(x)));
      for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
        const std::size_t p = blk.begin + static_cast<std::size_t>(k - first_interior + edges_);
        if (coef[p] != 0.0) sum += coef[p] * evaluate(p, t);
      }
    }
    return sum;
  };

  std::vector<double> values(H);
  const auto n = static_cast<std::ptrdiff_t>(H);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t h = 0; h < n; ++h) {
      values[static_cast<std::size_t>(h)] = value_at((static_cast<double>(h) + 0.5) / static_cast<double>(H));
    }
  } else {
    for (std::ptrdiff_t h = 0; h < n; ++h) {
      values[static_cast<std::size_t>(h)] = value_at((static_cast<double>(h) + 0.5) / static_cast<double>(H));
    }
  }
  return GridFunction(std::move(values));
}

WaveletBasis::Samples WaveletBasis::midpoint_samples(std::size_t index) const {
  const auto [lo, hi] = support(index);
  const double cells = std::exp2(R_);
  const auto last = static_cast<std::ptrdiff_t>(cells) - 1;
  const auto first = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(lo * cells)) - 1);
  const auto end = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::ceil(hi * cells)));
  Samples s;
  s.first = static_cast<std::size_t>(first);
  for (std::ptrdiff_t h = first; h <= end; ++h) {
    s.values.push_back(evaluate(index, (static_cast<double>(h) + 0.5) / cells));
  }
  return s;
}

double WaveletBasis::gram_deviation(int max_level, Exec exec) const {
  const std::size_t total = count(max_level);
  std::vector<Samples> samples(total);
  const auto n = static_cast<std::ptrdiff_t>(total);
  const double cell = std::exp2(-R_);

  const auto pair_deviation = [&](std::ptrdiff_t p) {
    const Samples& a = samples[static_cast<std::size_t>(p)];
    const std::size_t a_end = a.first + a.values.size();
    double worst = 0.0;
    for (std::ptrdiff_t q = p; q < n; ++q) {
      const Samples& b = samples[static_cast<std::size_t>(q)];
      const std::size_t lo = std::max(a.first, b.first);
      const std::size_t hi = std::min(a_end, b.first + b.values.size());
      double ip = 0.0;
      for (std::size_t h = lo; h < hi; ++h) ip += a.values[h - a.first] * b.values[h - b.first];
      ip *= cell;
      worst = std::max(worst, std::abs(ip - (p == q ? 1.0 : 0.0)));
    }
    return worst;
  };

  double worst = 0.0;
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t p = 0; p < n; ++p) samples[static_cast<std::size_t>(p)] = midpoint_samples(p);
#pragma omp parallel for schedule(dynamic, 4) reduction(max : worst)
    for (std::ptrdiff_t p = 0; p < n; ++p) worst = std::max(worst, pair_deviation(p));
  } else {
    for (std::ptrdiff_t p = 0; p < n; ++p) samples[static_cast<std::size_t>(p)] = midpoint_samples(p);
    for (std::ptrdiff_t p = 0; p < n; ++p) worst = std::max(worst, pair_deviation(p));
  }
  return worst;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("basis cache truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void get_row(std::istream& in, std::vector<double>& row, std::size_t length) {
  std::vector<unsigned char> raw(length * 8);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error("basis cache truncated");
  }
  row.resize(length);
  for (std::size_t p = 0; p < length; ++p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(raw[p * 8 + i]) << (8 * i);
    row[p] = std::bit_cast<double>(v);
  }
}

}  // namespace

void WaveletBasis::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write basis cache " + path.string());
  put_u32(out, static_cast<std::uint32_t>(N_));
  put_u32(out, static_cast<std::uint32_t>(i0_));
  put_u32(out, static_cast<std::uint32_t>(R_));
  const std::size_t row = (std::size_t{1} << (R_ + 1)) + 1;
  const auto write_row = [&](const std::vector<double>& v) {
    for (std::size_t p = 0; p < row; ++p) put_f64(out, p < v.size() ? v[p] : 0.0);
  };
  write_row(phi_);
  write_row(psi_);
  for (const auto* group : {&left_phi_, &right_phi_, &left_psi_, &right_psi_}) {
    for (const auto& v : *group) write_row(v);
  }
  if (!out) throw std::runtime_error("failed writing basis cache " + path.string());
}

WaveletBasis WaveletBasis::load(const std::filesystem::path& path, int N, int i0, int R,
                                double tol_gram) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open basis cache " + path.string());
  const std::uint32_t fN = get_u32(in), fi0 = get_u32(in), fR = get_u32(in);
  if (fN != static_cast<std::uint32_t>(N) || fi0 != static_cast<std::uint32_t>(i0) ||
      fR != static_cast<std::uint32_t>(R)) {
    throw std::runtime_error("basis cache " + path.string() + " is keyed by a different (N, i0, R)");
  }
  if (N < 1 || N > detail::kMaxVanishingMoments || R < i0 + 6 || R > 24) {
    throw std::runtime_error("basis cache has invalid parameters");
  }
  WaveletBasis basis;
  basis.N_ = N;
  basis.i0_ = i0;
  basis.R_ = R;
  basis.tol_gram_ = tol_gram;
  basis.edges_ = N >= 2 ? N : 0;
  basis.depth_ = R + 1 - i0;
  const std::size_t row = (std::size_t{1} << (R + 1)) + 1;
  const std::size_t mother_len = static_cast<std::size_t>(2 * N - 1) * (std::size_t{1} << basis.depth_) + 1;
  get_row(in, basis.phi_, row);
  get_row(in, basis.psi_, row);
  basis.phi_.resize(mother_len);
  basis.psi_.resize(mother_len);
  for (auto* group : {&basis.left_phi_, &basis.right_phi_, &basis.left_psi_, &basis.right_psi_}) {
    group->resize(static_cast<std::size_t>(basis.edges_));
    for (auto& v : *group) get_row(in, v, row);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("basis cache " + path.string() + " has trailing data");
  }
  basis.finish_setup();
  return basis;
}

WaveletBasis WaveletBasis::load_or_build(const std::filesystem::path& path, int N, int i0, int R,
                                         double tol_gram) {
  if (std::filesystem::exists(path)) {
    try {
      return load(path, N, i0, R, tol_gram);
    } catch (const std::runtime_error&) {
      // stale or foreign cache: rebuild below
    }
  }
  WaveletBasis basis = build(N, i0, R, tol_gram);
  basis.save(path);
  return basis;
}

}  // namespace distwave
