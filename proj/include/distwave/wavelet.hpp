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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "distwave/parallel.hpp"
#include "distwave/sequence_model.hpp"

namespace distwave {

// Values of a function on H uniform points t_h = (h + 1/2) / H, h = 0..H-1.
struct GridFunction {
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double point(std::size_t h) const {
    return (static_cast<double>(h) + 0.5) / static_cast<double>(values.size());
  }
};

// (1/H) sum_h (f(t_h) - g(t_h))^2. Throws std::invalid_argument on a grid
// size mismatch.
double grid_mise(const GridFunction& f, const GridFunction& g);

// CSV `t,value`, 17 significant digits.
void write_grid_csv(std::ostream& out, const GridFunction& f);

// Boundary-corrected (Cohen-Daubechies-Vial) orthonormal wavelet basis of
// L2[0,1] with N vanishing moments and coarsest level i0.
//
// Functions are indexed flat: index j < 2^i0 is the scaling function
// phi_{i0,j}; index 2^i + j (i >= i0, 0 <= j < 2^i) is the wavelet psi_{ij}.
// Within a level the first E functions are left-edge functions, the last E
// are right-edge functions and the rest are interior Daubechies translates,
// where E = N for N >= 2 and E = 0 for Haar.
//
// The basis stores prototype tables: the Daubechies phi and psi on
// [0, 2N-1] with step 2^-(R+1-i0), and the level-i0 edge scaling functions
// and edge wavelets on [0,1] with step 2^-(R+1). Higher-level edge wavelets
// are dilations of the level-i0 ones. Evaluation interpolates linearly and is
// exact on the dyadic grid of step 2^-(R+1).
class WaveletBasis {
 public:
  static constexpr double kDefaultTolGram = 1e-3;

  // Builds and checks the basis. Requires 1 <= N <= 8, 2^i0 >= 2N when
  // N >= 2 (Haar accepts any i0 >= 0), and R >= i0 + 6. Throws
  // std::invalid_argument on bad parameters and std::runtime_error when the
  // Gram matrix over levels <= i0 + 1 deviates from the identity by more than
  // tol_gram.
  static WaveletBasis build(int N, int i0, int R, double tol_gram = kDefaultTolGram);

  int vanishing_moments() const { return N_; }
  int base_level() const { return i0_; }
  int resolution() const { return R_; }
  // Highest wavelet level this basis will evaluate (R - 1).
  int max_level() const { return R_ - 1; }
  double tol_gram() const { return tol_gram_; }

  // Number of basis functions with level <= max_level (scaling block plus
  // wavelet levels i0..max_level).
  std::size_t count(int max_level) const;

  // Value of basis function `index` at t. Zero outside [0,1].
  double evaluate(std::size_t index, double t) const;

  // Closed support [lo, hi] of basis function `index`.
  std::pair<double, double> support(std::size_t index) const;

  // Basis index of pyramid coefficient (level, j). Pyramid levels 0..i0 fill
  // the scaling block and then the level-i0 wavelets in flat order (the last
  // level-i0 right-edge wavelet is left unused); level i > i0 maps to
  // psi_{i,j}. Bijective onto its image.
  std::size_t pyramid_index(int level, std::size_t j) const;

  // sum over pyramid entries of theta_ij * basis_{pyramid_index(i,j)}(t_h) on
  // H points t_h = (h + 1/2) / H. Throws std::invalid_argument when
  // theta.max_level() exceeds max_level() or H < 2.
  GridFunction synthesize(const CoefficientPyramid& theta, std::size_t H,
                          Exec exec = Exec::kParallel) const;

  // max |<b_p, b_q> - delta_pq| over all basis functions with level <=
  // max_level, inner products by the midpoint rule on 2^R cells.
  double gram_deviation(int max_level, Exec exec = Exec::kParallel) const;

  // Samples of a basis function on the midpoints (h + 1/2) / 2^R of its
  // support: returns the first cell index and the values.
  struct Samples {
    std::size_t first = 0;
    std::vector<double> values;
  };
  Samples midpoint_samples(std::size_t index) const;

  // Binary cache, all fields little-endian:
  //   u32 N, u32 i0, u32 R,
  //   then 2 + 4E rows of 2^(R+1) + 1 float64 values, row-major:
  //   phi, psi (zero padded past (2N-1) 2^(R+1-i0) + 1 entries),
  //   E left scaling, E right scaling, E left wavelet, E right wavelet.
  void save(const std::filesystem::path& path) const;
  // Loads a cache written by save(); throws std::runtime_error if the file is
  // missing, truncated or keyed by a different (N, i0, R).
  static WaveletBasis load(const std::filesystem::path& path, int N, int i0, int R,
                           double tol_gram = kDefaultTolGram);
  // load() when the file exists and matches, otherwise build() and save().
  static WaveletBasis load_or_build(const std::filesystem::path& path, int N, int i0, int R,
                                    double tol_gram = kDefaultTolGram);

 private:
  WaveletBasis() = default;

  struct Locator {
    enum Kind { kInteriorPhi, kInteriorPsi, kLeftPhi, kRightPhi, kLeftPsi, kRightPsi } kind;
    int level;
    int position;  // translate k for interior functions, edge number otherwise
  };
  Locator locate(std::size_t index) const;
  void finish_setup();
  double mother(const std::vector<double>& table, double x) const;
  double edge(const std::vector<double>& table, double x) const;

  int N_ = 1;
  int i0_ = 0;
  int R_ = 6;
  int edges_ = 0;           // E
  int depth_ = 0;           // mother tables step is 2^-depth_
  double tol_gram_ = kDefaultTolGram;
  std::vector<double> phi_;
  std::vector<double> psi_;
  std::vector<std::vector<double>> left_phi_, right_phi_, left_psi_, right_psi_;
  // Supports of the level-i0 edge prototypes, in [0,1].
  std::vector<double> left_phi_end_, right_phi_begin_, left_psi_end_, right_psi_begin_;
};

}  // namespace distwave
