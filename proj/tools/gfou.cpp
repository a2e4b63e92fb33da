// gfou: command-line front end.
//
//   gfou <subcommand> [--config file.ini] [--out dir] [--seed n] [--resolution n]
//
// Subcommands: solve, extend, rearrange, compare, regularity, kernel.
// Exit codes: 0 ok, 1 config error, 2 inequality violated beyond budget,
// 3 inconclusive (truncation), 4 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "gfou/cli.hpp"

int main(int argc, char** argv) {
  using namespace gfou;
  CLI::App app{"Fractional Ornstein-Uhlenbeck experiments on Gaussian domains"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out", out_dir, "output directory (default: current directory)");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--resolution", resolution, "grid resolution, at least 64 (overrides the config)");
  app.fallthrough();
  const std::map<std::string, std::string> help = {
      {"solve", "fractional Dirichlet problem L^s u = f"},
      {"extend", "canonical extension w(x, y) on the configured y-levels"},
      {"rearrange", "Gaussian symmetrization of the datum"},
      {"compare", "check u* <= psi* against the symmetrized problem"},
      {"regularity", "empirical regularity constant over a data family"},
      {"kernel", "Green's function split or Mehler kernel table"}};
  for (const auto& name : cli::subcommands()) app.add_subcommand(name, help.count(name) ? help.at(name) : "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  cli::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = cli::load_config(config_path, sub);
    } else {
      std::istringstream empty;
      cfg = cli::parse_config(empty, sub);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  }
  if (!out_dir.empty()) cfg.out = out_dir;
  if (seed) cfg.seed = *seed;
  if (resolution) cfg.resolution = *resolution;
  return cli::run(cfg, std::cout, std::cerr);
}
