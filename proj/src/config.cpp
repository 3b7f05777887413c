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

#include "distwave/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>
#include <vector>

namespace distwave {

ConfigError::ConfigError(std::string source, std::size_t line, std::string field,
                         const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         ": " + (field.empty() ? std::string() : field + ": ") + what),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Entry {
  std::string value;
  std::size_t line;
};

const std::map<std::string, std::vector<std::string>, std::less<>>& schema() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> keys = {
      {"scenario", {"id", "replications", "seed"}},
      {"model", {"n", "m", "max_level", "s_true"}},
      {"selection", {"s_min", "s_max", "tau", "assumed_s"}},
      {"quantizer", {"precision", "clamp", "infinite_precision"}},
      {"wavelet", {"grid_mise", "grid_points", "moments", "base_level", "resolution"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const auto it = entries_.find(key);
    throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key, why);
  }

  const Entry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Entry& require(const std::string& key) const {
    const Entry* e = find(key);
    if (e == nullptr) throw ConfigError(source_, 0, key, "missing required field");
    return *e;
  }

  template <typename T>
  T parse_number(const std::string& key, std::string_view text) const {
    text = trim(text);
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      fail(key, "expected a number, got '" + std::string(text) + "'");
    }
    return value;
  }

  template <typename T>
  void number(const std::string& key, T& out) const {
    if (const Entry* e = find(key)) out = parse_number<T>(key, e->value);
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) const {
    const Entry* e = find(key);
    if (e == nullptr) return;
    out.clear();
    std::string_view rest = e->value;
    while (true) {
      const std::size_t comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      if (trim(item).empty()) fail(key, "empty list item");
      out.push_back(parse_number<T>(key, item));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }

  void flag(const std::string& key, bool& out) const {
    const Entry* e = find(key);
    if (e == nullptr) return;
    const std::string_view v = trim(e->value);
    if (v == "true" || v == "1" || v == "yes") {
      out = true;
    } else if (v == "false" || v == "0" || v == "no") {
      out = false;
    } else {
      fail(key, "expected true or false, got '" + std::string(v) + "'");
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

std::map<std::string, Entry> tokenize(std::istream& in, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "", "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!schema().contains(section)) {
        throw ConfigError(source, line_no, "", "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source, line_no, "", "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError(source, line_no, key, "key outside of a section");
    const auto& allowed = schema().find(section)->second;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(source, line_no, key, "unknown key in [" + section + "]");
    }
    if (value.empty()) throw ConfigError(source, line_no, key, "empty value");
    if (!entries.try_emplace(key, Entry{value, line_no}).second) {
      throw ConfigError(source, line_no, key, "duplicate key");
    }
  }
  return entries;
}

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

CliConfig parse_config(std::istream& in, const std::string& source) {
  const Reader r(source, tokenize(in, source));
  const std::string id_text(trim(r.require("id").value));
  const auto id = parse_scenario(id_text);
  if (!id) r.fail("id", "unknown scenario '" + id_text + "'");

  CliConfig out;
  ScenarioConfig& c = out.scenario;
  c = default_scenario(*id);
  r.require("n");
  r.number("replications", c.replications);
  if (r.find("seed") != nullptr) {
    r.number("seed", c.master_seed);
    out.seed_given = true;
  }
  r.list("n", c.n_values);
  r.number("m", c.m);
  r.number("max_level", c.max_level);
  r.number("s_true", c.s_true);
  r.number("s_min", c.s_min);
  r.number("s_max", c.s_max);
  r.number("tau", c.tau);
  r.list("assumed_s", c.assumed_s);
  r.number("precision", c.precision);
  r.number("clamp", c.clamp);
  r.flag("infinite_precision", c.infinite_precision);
  r.flag("grid_mise", c.grid_mise);
  r.number("grid_points", c.grid_points);
  r.number("moments", c.wavelet_moments);
  r.number("base_level", c.wavelet_base_level);
  r.number("resolution", c.wavelet_resolution);

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const std::size_t colon = what.find(':');
    std::string field = colon == std::string::npos ? std::string() : what.substr(0, colon);
    if (field.rfind("n = ", 0) == 0) field = "n";
    if (field.rfind("wavelet_", 0) == 0) field = field.substr(8);
    if (r.find(field) != nullptr) {
      r.fail(field, colon == std::string::npos ? what : what.substr(colon + 2));
    }
    throw ConfigError(source, 0, "", what);
  }
  return out;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open file");
  return parse_config(in, path.string());
}

std::string emit_config(const CliConfig& cfg) {
  const ScenarioConfig& c = cfg.scenario;
  std::ostringstream out;
  out << "[scenario]\n";
  out << "id = " << scenario_name(c.id) << '\n';
  out << "replications = " << c.replications << '\n';
  if (cfg.seed_given) out << "seed = " << c.master_seed << '\n';
  out << "\n[model]\n";
  out << "n = " << join(c.n_values) << '\n';
  out << "m = " << c.m << '\n';
  out << "max_level = " << c.max_level << '\n';
  out << "s_true = " << format_real(c.s_true) << '\n';
  out << "\n[selection]\n";
  out << "s_min = " << format_real(c.s_min) << '\n';
  out << "s_max = " << format_real(c.s_max) << '\n';
  out << "tau = " << format_real(c.tau) << '\n';
  if (!c.assumed_s.empty()) out << "assumed_s = " << join(c.assumed_s) << '\n';
  out << "\n[quantizer]\n";
  out << "precision = " << format_real(c.precision) << '\n';
  out << "clamp = " << format_real(c.clamp) << '\n';
  out << "infinite_precision = " << (c.infinite_precision ? "true" : "false") << '\n';
  out << "\n[wavelet]\n";
  out << "grid_mise = " << (c.grid_mise ? "true" : "false") << '\n';
  out << "grid_points = " << c.grid_points << '\n';
  out << "moments = " << c.wavelet_moments << '\n';
  out << "base_level = " << c.wavelet_base_level << '\n';
  out << "resolution = " << c.wavelet_resolution << '\n';
  return out.str();
}

}  // namespace distwave
