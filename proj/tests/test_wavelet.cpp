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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "distwave/rng.hpp"
#include "distwave/wavelet.hpp"

using namespace distwave;

namespace {

const WaveletBasis& db4() {
  static const WaveletBasis basis = WaveletBasis::build(4, 3, 13);
  return basis;
}

CoefficientPyramid random_pyramid(int max_level, std::uint64_t tag) {
  CoefficientPyramid p(max_level);
  const rng::Stream stream(rng::stream_key(99, rng::Domain::kTest, tag, 0));
  auto flat = p.flat();
  stream.fill_normal(0, flat);
  for (int i = 0; i <= max_level; ++i) {
    for (double& v : p.level(i)) v *= std::exp2(-0.5 * i);
  }
  return p;
}

}  // namespace

TEST_CASE("grid MISE by definition") {
  const GridFunction f({1, 2, 3, 4});
  CHECK(grid_mise(f, GridFunction({0, 2, 2, 4})) == 0.5);
  CHECK(grid_mise(f, f) == 0.0);
  CHECK(grid_mise(GridFunction({3, 3, 3}), GridFunction({0, 0, 0})) == 9.0);
  CHECK_THROWS_AS(grid_mise(f, GridFunction({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction({1.0, INFINITY}), std::invalid_argument);
  CHECK(f.point(1) == 0.375);
}

TEST_CASE("grid CSV") {
  std::ostringstream out;
  write_grid_csv(out, GridFunction({1.5, -2}));
  CHECK(out.str() == "t,value\n0.25,1.5\n0.75,-2\n");
}

TEST_CASE("Haar basis is the closed form") {
  const auto haar = WaveletBasis::build(1, 0, 10);
  CHECK(haar.evaluate(0, 0.3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(haar.evaluate(1, 0.2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(haar.evaluate(1, 0.7) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(haar.evaluate(1, 1.5) == 0.0);
  // psi_{1,1} = sqrt 2 (1 on [1/2,3/4), -1 on [3/4,1)).
  CHECK(haar.evaluate(3, 0.6) == doctest::Approx(std::sqrt(2.0)));
  CHECK(haar.evaluate(3, 0.8) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(haar.evaluate(3, 0.3) == 0.0);
  CHECK(haar.gram_deviation(6) <= 1e-14);

  CoefficientPyramid one(3);
  one(0, 0) = 1.0;
  for (double v : haar.synthesize(one, 100).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parameter checks") {
  CHECK_THROWS_AS(WaveletBasis::build(8, 3, 16), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(9, 5, 16), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(0, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(2, 2, 7), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(2, 2, 12, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(db4().synthesize(CoefficientPyramid(13), 100), std::invalid_argument);
  CHECK_THROWS_AS(db4().synthesize(CoefficientPyramid(3), 1), std::invalid_argument);
}

TEST_CASE("an unreachable Gram tolerance is reported") {
  CHECK_THROWS_AS(WaveletBasis::build(2, 2, 10, 1e-12), std::runtime_error);
}

TEST_CASE("boundary-corrected bases are orthonormal") {
  CHECK(db4().gram_deviation(5) <= 1e-3);
  const auto db2 = WaveletBasis::build(2, 2, 14);
  CHECK(db2.gram_deviation(5) <= 1e-3);
  const auto db3 = WaveletBasis::build(3, 3, 12);
  CHECK(db3.gram_deviation(5) <= 1e-3);
}

TEST_CASE("supports lie in [0, 1]") {
  const auto& b = db4();
  for (std::size_t p = 0; p < b.count(6); ++p) {
    const auto [lo, hi] = b.support(p);
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(lo < hi);
    CHECK(b.evaluate(p, -0.1) == 0.0);
  }
}

TEST_CASE("pyramid mapping is injective") {
  const auto& b = db4();
  std::set<std::size_t> seen;
  for (int i = 0; i <= 8; ++i) {
    for (std::size_t j = 0; j < (std::size_t{1} << i); ++j) {
      const std::size_t p = b.pyramid_index(i, j);
      CHECK(p < b.count(8));
      CHECK(seen.insert(p).second);
    }
  }
  CHECK(b.pyramid_index(0, 0) == 0);
  CHECK(b.pyramid_index(4, 3) == 16 + 3);
}

TEST_CASE("zero coefficients synthesize to zero") {
  for (double v : db4().synthesize(CoefficientPyramid(6), 500).values) CHECK(v == 0.0);
}

TEST_CASE("scaling space reproduces constants") {
  const auto& b = db4();
  const int scaling = 1 << b.base_level();
  CoefficientPyramid theta(4);
  for (int p = 0; p < scaling; ++p) {
    const auto s = b.midpoint_samples(static_cast<std::size_t>(p));
    double integral = 0.0;
    for (double v : s.values) integral += v;
    theta.flat()[static_cast<std::size_t>(p)] = integral * std::ldexp(1.0, -b.resolution());
  }
  for (double v : b.synthesize(theta, 4096).values) CHECK(std::abs(v - 1.0) <= 1e-3);
}

TEST_CASE("grid MISE matches the coefficient distance") {
  const auto& b = db4();
  for (std::uint64_t t = 0; t < 3; ++t) {
    const auto theta = random_pyramid(6, 2 * t);
    const auto other = random_pyramid(6, 2 * t + 1);
    const double coeff = squared_distance(theta, other);
    const double grid = grid_mise(b.synthesize(theta, 8192), b.synthesize(other, 8192));
    CHECK(std::abs(grid - coeff) <= 0.02 * coeff);
  }
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  const auto& b = db4();
  const auto theta = random_pyramid(9, 7);
  CHECK(b.synthesize(theta, 3000, Exec::kSerial).values ==
        b.synthesize(theta, 3000, Exec::kParallel).values);
  CHECK(b.gram_deviation(5, Exec::kSerial) == b.gram_deviation(5, Exec::kParallel));
}

TEST_CASE("basis cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "distwave_test_wavelet";
  std::filesystem::create_directories(dir);
  const auto path = dir / "db3.bin";
  std::filesystem::remove(path);
  const auto built = WaveletBasis::load_or_build(path, 3, 3, 12);
  REQUIRE(std::filesystem::exists(path));
  const auto loaded = WaveletBasis::load(path, 3, 3, 12);
  for (std::size_t p = 0; p < built.count(5); ++p) {
    for (double t : {0.01, 0.3, 0.5, 0.77, 0.999}) CHECK(built.evaluate(p, t) == loaded.evaluate(p, t));
  }
  CHECK_THROWS_AS(WaveletBasis::load(path, 3, 2, 12), std::runtime_error);
  CHECK_THROWS_AS(WaveletBasis::load(dir / "missing.bin", 3, 3, 12), std::runtime_error);

  const auto size = std::filesystem::file_size(path);
  CHECK(size == 12 + (2 + 4 * 3) * ((std::size_t{1} << 13) + 1) * 8);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(WaveletBasis::load(path, 3, 3, 12), std::runtime_error);

  std::ifstream header(path, std::ios::binary);
  unsigned char bytes[12];
  header.read(reinterpret_cast<char*>(bytes), 12);
  CHECK(bytes[0] == 3);
  CHECK(bytes[4] == 3);
  CHECK(bytes[8] == 12);
  std::filesystem::remove_all(dir);
}
