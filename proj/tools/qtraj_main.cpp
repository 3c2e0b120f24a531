// Copyright 2026 The qtraj authors
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

#include <cstdint>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <qtraj/experiments.hpp>

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> cap_words;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out_dir, "override the output directory");
  cmd->add_option("--threads", flags.threads,
                  "worker threads (0 = all available)");
  cmd->add_option("--cap-words", flags.cap_words,
                  "override the exact-enumeration cap");
}

qtraj::ExperimentConfig effective_config(const CommonFlags& flags) {
  qtraj::ExperimentConfig cfg = qtraj::load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.cap_words) cfg.cap_words = *flags.cap_words;
  return cfg;
}

int run(const CommonFlags& flags,
        const std::function<std::vector<std::filesystem::path>(
            const qtraj::ExperimentConfig&)>& command) {
  try {
    const qtraj::ExperimentConfig cfg = effective_config(flags);
    const auto files = command(cfg);
    for (const auto& f : files) std::cout << f.string() << "\n";
    return 0;
  } catch (const qtraj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qtraj::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qtraj: quantum trajectory simulation, dark-subspace detection,\n"
      "purification rates and filter stability"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, rates_flags, darkspace_flags, stability_flags,
      sweep_flags;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "sample a trajectory ensemble and dump CSV statistics");
  add_common_flags(simulate, simulate_flags);

  CLI::App* rates = app.add_subcommand(
      "rates", "estimate purification rates gamma_p and bound curves");
  add_common_flags(rates, rates_flags);

  CLI::App* darkspace = app.add_subcommand(
      "darkspace", "moment-space growth and the purification verdict");
  add_common_flags(darkspace, darkspace_flags);

  CLI::App* stability = app.add_subcommand(
      "stability", "paired-filter run against the stability bound");
  add_common_flags(stability, stability_flags);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "rate heatmap over a 2D parameter grid");
  add_common_flags(sweep, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return run(simulate_flags, qtraj::cmd_simulate);
  if (rates->parsed()) return run(rates_flags, qtraj::cmd_rates);
  if (darkspace->parsed()) return run(darkspace_flags, qtraj::cmd_darkspace);
  if (stability->parsed()) return run(stability_flags, qtraj::cmd_stability);
  if (sweep->parsed()) return run(sweep_flags, qtraj::cmd_sweep);
  return 1;
}
