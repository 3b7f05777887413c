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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace distwave::rng {

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived from (seed, domain, a, b)
// with the SplitMix64 finalizer. The u64 at position c of a stream is
// mix64(key + (c + 1) * golden), i.e. the SplitMix64 sequence started at key,
// which gives random access: draw c never depends on how many other draws were
// made before it. This keeps simulations bit-identical under any thread
// schedule.
//
// Normal variates use Box-Muller on consecutive counters: variate p takes the
// pair (2*(p/2), 2*(p/2)+1), with u1 in (0,1] and u2 in [0,1), and returns
// r*cos(2*pi*u2) for even p and r*sin(2*pi*u2) for odd p, r = sqrt(-2 ln u1).

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream domains, so that e.g. observation noise and posterior draws with the
// same numeric seed never share a stream.
enum class Domain : std::uint64_t {
  kObservation = 1,
  kPosterior = 2,
  kTest = 3,
};

constexpr std::uint64_t stream_key(std::uint64_t seed, Domain domain,
                                   std::uint64_t a, std::uint64_t b) {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ (static_cast<std::uint64_t>(domain) * kGolden));
  k = mix64(k ^ (a + 1) * 0xd1b54a32d192ed03ULL);
  k = mix64(k ^ (b + 1) * 0x8cb92ba72f3d8dd7ULL);
  return k;
}

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t key() const { return key_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1].
  double uniform_pos(std::uint64_t counter) const {
    return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal variate number `index` of this stream.
  double normal(std::uint64_t index) const {
    const std::uint64_t pair = index & ~std::uint64_t{1};
    const double r = std::sqrt(-2.0 * std::log(uniform_pos(pair)));
    const double angle = 2.0 * std::numbers::pi * uniform(pair + 1);
    return (index & 1) ? r * std::sin(angle) : r * std::cos(angle);
  }

  // Writes normal variates first, first+1, ... into out. Same values as
  // calling normal() per index, but each Box-Muller pair is evaluated once.
  void fill_normal(std::uint64_t first, std::span<double> out) const {
    std::size_t pos = 0;
    std::uint64_t index = first;
    if ((index & 1) && pos < out.size()) {
      out[pos++] = normal(index++);
    }
    for (; pos + 1 < out.size(); pos += 2, index += 2) {
      const double r = std::sqrt(-2.0 * std::log(uniform_pos(index)));
      const double angle = 2.0 * std::numbers::pi * uniform(index + 1);
      out[pos] = r * std::cos(angle);
      out[pos + 1] = r * std::sin(angle);
    }
    if (pos < out.size()) out[pos] = normal(index);
  }

 private:
  std::uint64_t key_;
};

}  // namespace distwave::rng
