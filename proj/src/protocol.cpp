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

#include "distwave/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace distwave {

Quantizer::Quantizer(std::int64_t n, double precision, double clamp)
    : precision_(precision), clamp_(clamp) {
  if (n < 1) throw std::invalid_argument("quantizer: n must be positive");
  if (!(precision > 0.0)) throw std::invalid_argument("quantizer: precision C must be positive");
  if (!(clamp > 0.0)) throw std::invalid_argument("quantizer: clamp range must be positive");
  step_ = std::pow(static_cast<double>(n), -precision);
  const double cells = std::ceil(std::log2(2.0 * clamp / step_));
  if (!(cells <= kMaxBits)) {
    throw std::invalid_argument("quantizer: " + std::to_string(cells) +
                                " bits per scalar exceeds the supported " +
                                std::to_string(kMaxBits));
  }
  bits_ = std::max(1, static_cast<int>(cells));
  max_code_ = (std::uint64_t{1} << bits_) - 1;
  cell_ = 2.0 * clamp / std::ldexp(1.0, bits_);
}

std::uint64_t Quantizer::encode(double x) const {
  if (std::isnan(x)) throw std::invalid_argument("quantizer: NaN input");
  const double c = std::clamp(x, -clamp_, clamp_);
  const double pos = std::floor((c + clamp_) / cell_);
  if (pos <= 0.0) return 0;
  const auto code = static_cast<std::uint64_t>(pos);
  return std::min(code, max_code_);
}

double Quantizer::decode(std::uint64_t code) const {
  if (code > max_code_) throw std::invalid_argument("quantizer: code out of range");
  return -clamp_ + (static_cast<double>(code) + 0.5) * cell_;
}

BitLedger::BitLedger(int m) : m_(m) {
  if (m < 1) throw std::invalid_argument("ledger: m must be at least 1");
  bits_.assign(static_cast<std::size_t>(m) * 3, 0);
}

std::size_t BitLedger::slot(int machine, Round round) const {
  if (machine < 1 || machine > m_) {
    throw std::out_of_range("ledger: machine " + std::to_string(machine) + " out of range");
  }
  const auto r = static_cast<std::size_t>(round);
  if (r < 1 || r > 3) throw std::out_of_range("ledger: unknown round");
  return static_cast<std::size_t>(machine - 1) * 3 + (r - 1);
}

void BitLedger::add(int machine, Round round, std::uint64_t bits) { bits_[slot(machine, round)] += bits; }

std::uint64_t BitLedger::bits(int machine, Round round) const { return bits_[slot(machine, round)]; }

std::uint64_t BitLedger::upload_bits(int machine) const {
  return bits(machine, Round::kRound1) + bits(machine, Round::kRound2);
}

std::uint64_t BitLedger::round_total(Round round) const {
  std::uint64_t sum = 0;
  for (int k = 1; k <= m_; ++k) sum += bits(k, round);
  return sum;
}

std::uint64_t BitLedger::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t b : bits_) sum += b;
  return sum;
}

void BitLedger::write_csv(std::ostream& out) const {
  out << "machine,round,bits\n";
  for (int k = 1; k <= m_; ++k) {
    for (Round r : {Round::kRound1, Round::kRound2, Round::kBroadcast}) {
      out << k << ',' << static_cast<int>(r) << ',' << bits(k, r) << '\n';
    }
  }
}

LocalSummary round1_local_summary(const MachineObservations& obs, const LevelGrid& grid) {
  if (grid.l_min < 0 || grid.l_max > obs.data.max_level() || grid.l_min > grid.l_max) {
    throw std::invalid_argument("round 1: grid [" + std::to_string(grid.l_min) + ", " +
                                std::to_string(grid.l_max) + "] outside observed levels [0, " +
                                std::to_string(obs.data.max_level()) + "]");
  }
  LocalSummary s;
  s.machine = obs.machine;
  s.grid = grid;
  for (int i = grid.l_min; i <= grid.l_max; ++i) {
    double sum = 0.0;
    for (double y : obs.data.level(i)) sum += y * y;
    s.energy.push_back(std::ldexp(sum, -i));
  }
  return s;
}

LocalSummary round1_transmit(const LocalSummary& local, const Quantizer& q, Precision precision,
                             BitLedger& ledger) {
  LocalSummary received = local;
  if (precision == Precision::kQuantized) {
    for (double& t : received.energy) t = q.round_trip(t);
  }
  ledger.add(local.machine, Round::kRound1,
             static_cast<std::uint64_t>(local.energy.size()) *
                 static_cast<std::uint64_t>(q.bits_per_scalar()));
  return received;
}

EnergySummary round1_aggregate(std::vector<LocalSummary> locals, std::int64_t n, int m) {
  if (m < 1 || n < 1) throw std::invalid_argument("round 1 aggregate: need n, m >= 1");
  if (locals.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("round 1 aggregate: expected " + std::to_string(m) +
                                " machines, got " + std::to_string(locals.size()));
  }
  std::sort(locals.begin(), locals.end(),
            [](const LocalSummary& a, const LocalSummary& b) { return a.machine < b.machine; });
  for (int k = 1; k <= m; ++k) {
    const LocalSummary& s = locals[static_cast<std::size_t>(k - 1)];
    if (s.machine != k) {
      throw std::invalid_argument("round 1 aggregate: machine " + std::to_string(k) + " missing");
    }
    if (!(s.grid == locals.front().grid) ||
        s.energy.size() != static_cast<std::size_t>(s.grid.size())) {
      throw std::invalid_argument("round 1 aggregate: grid mismatch at machine " +
                                  std::to_string(k));
    }
  }
  EnergySummary out;
  out.grid = locals.front().grid;
  const auto g = static_cast<std::size_t>(out.grid.size());
  out.aggregated.assign(g, 0.0);
  for (const LocalSummary& s : locals) {
    for (std::size_t p = 0; p < g; ++p) out.aggregated[p] += s.energy[p];
  }
  const double noise = static_cast<double>(m) / static_cast<double>(n);
  for (std::size_t p = 0; p < g; ++p) {
    out.aggregated[p] /= m;
    const double width = std::ldexp(1.0, out.grid.l_min + static_cast<int>(p));
    out.adjusted.push_back(width * out.aggregated[p] - width * noise);
  }
  out.local = std::move(locals);
  return out;
}

Broadcast broadcast_level(int l_hat, int max_level, BitLedger* ledger) {
  if (max_level < 0 || l_hat < 0 || l_hat > max_level) {
    throw std::invalid_argument("broadcast: level " + std::to_string(l_hat) +
                                " outside [0, " + std::to_string(max_level) + "]");
  }
  const int bits = std::bit_width(static_cast<unsigned>(max_level));
  if (ledger != nullptr) {
    for (int k = 1; k <= ledger->machines(); ++k) {
      ledger->add(k, Round::kBroadcast, static_cast<std::uint64_t>(bits));
    }
  }
  return {l_hat, bits};
}

Round2Payload round2_transmit(const MachineObservations& obs, int l_hat, const Quantizer& q,
                              Mode mode, std::int64_t n, Precision precision, BitLedger* ledger) {
  if (l_hat < 0 || l_hat > obs.data.max_level()) {
    throw std::invalid_argument("round 2: level " + std::to_string(l_hat) +
                                " outside the observed levels");
  }
  Round2Payload p;
  p.machine = obs.machine;
  p.l_hat = l_hat;
  p.mode = mode;
  const std::size_t count = CoefficientPyramid::size_for(l_hat);
  const double factor =
      mode == Mode::kBayes ? static_cast<double>(n) / static_cast<double>(n + 1) : 1.0;
  const auto y = obs.data.flat();
  p.values.resize(count);
  if (precision == Precision::kQuantized) p.codes.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double v = factor * y[j];
    if (precision == Precision::kQuantized) {
      if (q.clamps(v)) ++p.clamped;
      p.codes[j] = q.encode(v);
      p.values[j] = q.decode(p.codes[j]);
    } else {
      p.values[j] = v;
    }
  }
  p.bits = static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(q.bits_per_scalar());
  if (ledger != nullptr) ledger->add(obs.machine, Round::kRound2, p.bits);
  return p;
}

std::vector<std::uint8_t> pack_codes(std::span<const std::uint64_t> codes, int width) {
  if (width < 1 || width > 64) throw std::invalid_argument("pack_codes: width must be in [1, 64]");
  const std::size_t total = codes.size() * static_cast<std::size_t>(width);
  std::vector<std::uint8_t> out((total + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::uint64_t c : codes) {
    for (int b = 0; b < width; ++b, ++bit) {
      if ((c >> b) & 1U) out[bit / 8] |= static_cast<std::uint8_t>(1U << (bit % 8));
    }
  }
  return out;
}

std::vector<std::uint64_t> unpack_codes(std::span<const std::uint8_t> bytes, int width,
                                        std::size_t count) {
  if (width < 1 || width > 64) throw std::invalid_argument("unpack_codes: width must be in [1, 64]");
  if (bytes.size() * 8 < count * static_cast<std::size_t>(width)) {
    throw std::runtime_error("unpack_codes: payload too short");
  }
  std::vector<std::uint64_t> out(count, 0);
  std::size_t bit = 0;
  for (std::uint64_t& c : out) {
    for (int b = 0; b < width; ++b, ++bit) {
      if ((bytes[bit / 8] >> (bit % 8)) & 1U) c |= std::uint64_t{1} << b;
    }
  }
  return out;
}

void append_frame(std::vector<std::uint8_t>& out, const Frame& frame) {
  if (frame.payload.size() != (static_cast<std::size_t>(frame.payload_bits) + 7) / 8) {
    throw std::invalid_argument("frame: payload size does not match its bit length");
  }
  out.push_back(static_cast<std::uint8_t>(frame.round));
  out.push_back(static_cast<std::uint8_t>(frame.machine & 0xff));
  out.push_back(static_cast<std::uint8_t>(frame.machine >> 8));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(frame.payload_bits >> (8 * i)));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
}

Frame read_frame(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  constexpr std::size_t kHeader = 7;
  if (offset + kHeader > bytes.size()) throw std::runtime_error("frame: truncated header");
  Frame f;
  const std::uint8_t round = bytes[offset];
  if (round < 1 || round > 3) throw std::runtime_error("frame: unknown round " + std::to_string(round));
  f.round = static_cast<Round>(round);
  f.machine = static_cast<std::uint16_t>(bytes[offset + 1] | (bytes[offset + 2] << 8));
  for (int i = 0; i < 4; ++i) {
    f.payload_bits |= static_cast<std::uint32_t>(bytes[offset + 3 + i]) << (8 * i);
  }
  const std::size_t len = (static_cast<std::size_t>(f.payload_bits) + 7) / 8;
  if (offset + kHeader + len > bytes.size()) throw std::runtime_error("frame: truncated payload");
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset + kHeader),
                   bytes.begin() + static_cast<std::ptrdiff_t>(offset + kHeader + len));
  offset += kHeader + len;
  return f;
}

}  // namespace distwave
