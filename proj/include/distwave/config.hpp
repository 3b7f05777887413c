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
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "distwave/experiments.hpp"

namespace distwave {

// Scenario configuration file: `key = value` lines grouped under `[section]`
// headers, `#` starts a comment. Lists are comma separated. Keys:
//
//   [scenario]  id (required), replications, seed
//   [model]     n (required, list), m, max_level, s_true
//   [selection] s_min, s_max, tau, assumed_s (list)
//   [quantizer] precision, clamp, infinite_precision
//   [wavelet]   grid_mise, grid_points, moments, base_level, resolution
//
// Omitted keys take the values of default_scenario(id). Unknown sections or keys,
// duplicates and malformed values are errors.
struct CliConfig {
  ScenarioConfig scenario;
  bool seed_given = false;

  bool operator==(const CliConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, std::string field, const std::string& what);

  const std::string& source() const { return source_; }
  // 0 when the error is not tied to a line (e.g. a missing key).
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string field_;
};

// Throws ConfigError on syntax errors, unknown or missing keys and values
// rejected by ScenarioConfig::validate().
CliConfig parse_config(std::istream& in, const std::string& source = "<config>");
CliConfig load_config(const std::filesystem::path& path);

// Writes every key, so parse_config(emit_config(c)) == c.
std::string emit_config(const CliConfig& cfg);

}  // namespace distwave
