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

#include "distwave/selection.hpp"
#include "distwave/sequence_model.hpp"

namespace distwave {

// Fixed-point scalar code with precision n^{-C} on [-clamp, clamp].
//
// bits_per_scalar = ceil(log2(2 clamp / n^{-C})). The interval is split into
// 2^bits equal cells of width <= n^{-C}; a value is clamped, mapped to its
// cell index and decoded as the cell midpoint, so the round-trip error of a
// clamped value is at most half a cell.
class Quantizer {
 public:
  static constexpr double kDefaultPrecision = 2.0;
  static constexpr double kDefaultClamp = 8.0;
  static constexpr int kMaxBits = 52;

  // Throws std::invalid_argument for n < 1, non-positive C or clamp, or a
  // code wider than kMaxBits.
  explicit Quantizer(std::int64_t n, double precision = kDefaultPrecision,
                     double clamp = kDefaultClamp);

  double precision() const { return precision_; }
  double clamp_range() const { return clamp_; }
  // n^{-C}
  double step() const { return step_; }
  double cell_width() const { return cell_; }
  int bits_per_scalar() const { return bits_; }

  bool clamps(double x) const { return !(x >= -clamp_ && x <= clamp_); }
  std::uint64_t encode(double x) const;
  double decode(std::uint64_t code) const;
  double round_trip(double x) const { return decode(encode(x)); }

 private:
  double precision_;
  double clamp_;
  double step_;
  int bits_;
  double cell_;
  std::uint64_t max_code_;
};

// Whether transmitted reals go through the quantizer or are passed exactly.
// Bit counts are the quantized ones either way.
enum class Precision { kQuantized, kExact };

// Round codes used in the ledger CSV and the wire frames.
enum class Round : std::uint8_t { kRound1 = 1, kRound2 = 2, kBroadcast = 3 };

class BitLedger {
 public:
  explicit BitLedger(int m);

  int machines() const { return m_; }
  void add(int machine, Round round, std::uint64_t bits);
  std::uint64_t bits(int machine, Round round) const;
  // Upload bits of one machine (round 1 + round 2), broadcast excluded.
  std::uint64_t upload_bits(int machine) const;
  std::uint64_t round_total(Round round) const;
  std::uint64_t total() const;

  // CSV `machine,round,bits`, one row per machine and round in that order.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t slot(int machine, Round round) const;
  int m_;
  std::vector<std::uint64_t> bits_;
};

struct LocalSummary {
  int machine = 0;
  LevelGrid grid;
  std::vector<double> energy;  // T_i^(k) for grid levels, in order
};

// T_i^(k) = 2^{-i} sum_j (y^(k)_ij)^2 for every grid level. Throws
// std::invalid_argument if the grid reaches beyond the observed levels.
LocalSummary round1_local_summary(const MachineObservations& obs, const LevelGrid& grid);

// What the centre receives from a round-1 message: the summary after
// quantization (or unchanged for Precision::kExact). Adds |grid| *
// bits_per_scalar round-1 bits to the ledger.
LocalSummary round1_transmit(const LocalSummary& local, const Quantizer& q, Precision precision,
                             BitLedger& ledger);

struct EnergySummary {
  LevelGrid grid;
  std::vector<LocalSummary> local;  // sorted by machine
  std::vector<double> aggregated;   // T_i
  std::vector<double> adjusted;     // 2^i T_i - 2^i m / n
};

// Averages the local summaries in machine order. Throws std::invalid_argument
// unless machines 1..m are each present once with the same grid.
EnergySummary round1_aggregate(std::vector<LocalSummary> locals, std::int64_t n, int m);

struct Broadcast {
  int l_hat;
  int bits_per_machine;  // ceil(log2(I + 1))
};

// Fixed-width level broadcast; records bits_per_machine for every machine in
// the ledger when one is given. Throws std::invalid_argument unless
// 0 <= l_hat <= max_level.
Broadcast broadcast_level(int l_hat, int max_level, BitLedger* ledger = nullptr);

enum class Mode { kFrequentist, kBayes };

struct Round2Payload {
  int machine = 0;
  int l_hat = 0;
  Mode mode = Mode::kFrequentist;
  // Received values in flat pyramid order for levels 0..l_hat: y (frequentist)
  // or n/(n+1) y (Bayes), after quantization unless exact.
  std::vector<double> values;
  std::vector<std::uint64_t> codes;  // empty for Precision::kExact
  std::uint64_t bits = 0;
  std::uint64_t clamped = 0;
};

// Round-2 message of one machine: (2^{l_hat+1} - 1) scalars. Adds the bits to
// the ledger when one is given.
Round2Payload round2_transmit(const MachineObservations& obs, int l_hat, const Quantizer& q,
                              Mode mode, std::int64_t n, Precision precision,
                              BitLedger* ledger = nullptr);

// Wire frame, little-endian:
//   u8 round, u16 machine, u32 payload_bit_length, payload bytes
// Payload bits are packed LSB first and zero-padded to a whole byte.
struct Frame {
  Round round = Round::kRound1;
  std::uint16_t machine = 0;
  std::uint32_t payload_bits = 0;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> pack_codes(std::span<const std::uint64_t> codes, int width);
std::vector<std::uint64_t> unpack_codes(std::span<const std::uint8_t> bytes, int width,
                                        std::size_t count);

void append_frame(std::vector<std::uint8_t>& out, const Frame& frame);
// Reads the frame starting at `offset` and advances it. Throws
// std::runtime_error on truncated input or an unknown round code.
Frame read_frame(std::span<const std::uint8_t> bytes, std::size_t& offset);

}  // namespace distwave
