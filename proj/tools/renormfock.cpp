#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "renormfock/config.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/suite.hpp"
#include "renormfock/sweep.hpp"

using namespace renormfock;

int main(int argc, char** argv) {
  CLI::App app{"renormfock: truncated Fock-space experiments with renormalized dressings"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int threads = default_threads();
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "evaluate a sweep and write its CSV");
  run->add_option("--config", config_path, "experiment config")->required();
  run->add_option("--out", out_path, "CSV output path")->required();
  run->add_option("--threads", threads, "worker threads (default: RENORMFOCK_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "override solver.seed");

  auto* check = app.add_subcommand("validate-config", "parse and validate a config");
  check->add_option("--config", config_path, "experiment config")->required();

  auto* suite = app.add_subcommand("suite", "run the acceptance battery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig config = load_config(config_path);
      RunOptions options;
      options.threads = threads;
      options.seed = seed;
      const auto rows = run_sweep_to_file(config, out_path, options);
      std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
      return 0;
    }
    if (check->parsed()) {
      const ExperimentConfig config = load_config(config_path);
      std::cout << "ok: " << to_string(config.model) << " model, " << config.sweep_values.size()
                << " sweep point(s) over " << to_string(config.sweep_param) << "\n";
      return 0;
    }
    if (suite->parsed()) return run_acceptance_suite(std::cout) ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
