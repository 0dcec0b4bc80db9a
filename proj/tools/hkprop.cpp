// Command line front end for the Herman-Kluk experiment harness.
#include <iostream>

#include <CLI11.hpp>

#include "hk/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Herman-Kluk semiclassical propagation experiments"};
  app.set_version_flag("--version", hk::library_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int workers = 0;
  std::optional<std::uint64_t> seed;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"propagate", "HK and reference propagation at the configured sample times"},
      {"scaling", "L2 error against the reference over the hbar ladder, with a log-log slope"},
      {"phase-invariance", "difference between two (Theta, Gamma) choices over the hbar ladder"},
      {"ehrenfest", "time at which the error first exceeds the threshold, per hbar"},
      {"inspect-kernel", "binned Fourier-Bargmann kernel decay away from the classical graph"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: output.dir from the config)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for node jitter");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    hk::ExperimentConfig cfg = hk::load_config(config_path);
    if (workers > 0) {
      cfg.workers = workers;
      cfg.quadrature.workers = workers;
    }
    if (seed) {
      cfg.seed = *seed;
      cfg.quadrature.seed = *seed;
    }
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    const std::string command = app.get_subcommands().front()->get_name();
    const auto summary = hk::run_command(command, cfg, dir);
    std::cout << summary["results"].dump(2) << '\n';
  } catch (const hk::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
