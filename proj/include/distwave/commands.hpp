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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "distwave/experiments.hpp"

namespace distwave {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  int threads = 0;  // 0: OpenMP default, 1: serial reference path
  bool full = false;
  bool infinite_precision = false;
  bool fault_tau = false;  // selftest only: run selection with tau = 1.5
};

// Replications used by reproduce without --reps.
inline constexpr int kDeskReplications = 50;
inline constexpr int kFullReplications = 100;

// Figure presets: fig2a, fig2b, fig3a, fig3b, fig4.
std::optional<ScenarioConfig> figure_scenario(std::string_view figure);

// Runs the scenario of options.config and writes <out>/<scenario>.csv plus
// <out>/<scenario>.ini (the configuration actually run).
int cmd_simulate(const RunOptions& options, std::ostream& out, std::ostream& err);

// Runs a figure preset and writes <out>/<figure>.csv and .ini; fig4 also
// writes <out>/fig4_truth.csv, fig4_aDC.csv and fig4_MMLE.csv (`t,value`).
int cmd_reproduce(std::string_view figure, const RunOptions& options, std::ostream& out,
                  std::ostream& err);

// Fast property suite, one PASS/FAIL line per property.
int cmd_selftest(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace distwave
