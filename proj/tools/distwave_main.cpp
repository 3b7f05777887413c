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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "distwave/commands.hpp"

namespace {

void add_common(CLI::App* cmd, distwave::RunOptions& opt) {
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Master seed (generated and logged when omitted)");
  cmd->add_option("--reps", opt.replications, "Number of replications")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--parallel", opt.threads, "Threads; 1 selects the serial reference path")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--infinite-precision", opt.infinite_precision,
                "Transmit exact values instead of quantized ones");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed adaptive wavelet estimation simulator"};
  app.require_subcommand(1);
  distwave::RunOptions opt;

  auto* simulate = app.add_subcommand("simulate", "Run the scenario described by a config file");
  simulate->add_option("--config", opt.config, "Scenario config file")->required();
  add_common(simulate, opt);

  std::string figure;
  auto* reproduce = app.add_subcommand("reproduce", "Run a figure preset (fig2a fig2b fig3a fig3b fig4)");
  reproduce->add_option("figure", figure, "Figure id")->required();
  reproduce->add_flag("--full", opt.full, "Use 100 replications instead of 50");
  add_common(reproduce, opt);

  auto* selftest = app.add_subcommand("selftest", "Run the fast property suite");
  selftest->add_option("--seed", opt.seed, "Seed for the fuzz cases");
  selftest->add_option("--parallel", opt.threads, "Threads; 1 selects the serial reference path")
      ->check(CLI::NonNegativeNumber);
  selftest->add_flag("--fault-tau", opt.fault_tau)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return distwave::kExitConfig;
  }

  if (simulate->parsed()) return distwave::cmd_simulate(opt, std::cout, std::cerr);
  if (reproduce->parsed()) return distwave::cmd_reproduce(figure, opt, std::cout, std::cerr);
  return distwave::cmd_selftest(opt, std::cout, std::cerr);
}
