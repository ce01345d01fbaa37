#include <CLI11.hpp>

#include <iostream>

#include "vvpm/commands.hpp"
#include "vvpm/config.hpp"
#include "vvpm/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical fluctuation factors: Van Vleck-Pauli-Morette determinants, "
               "Gelfand-Yaglom solvers and composition checks"};
  app.require_subcommand(1);

  vvpm::CommandOptions opt;
  std::string config_path;
  std::string out_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--out", out_path, "output file (default: config 'output' or stdout)");
    sub->add_flag("--full-grid", opt.full_grid, "emit every path sample");
    sub->add_option("--threads", opt.threads, "worker threads for sweeps")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* factor = app.add_subcommand("factor", "fluctuation factor by the selected methods");
  CLI::App* verify = app.add_subcommand("verify", "composition checks at the listed t_mid");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep table (CSV or JSON)");
  CLI::App* models = app.add_subcommand("models", "list built-in models");
  add_common(factor);
  add_common(verify);
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vvpm::ConfigFailure;
  }

  if (models->parsed()) return vvpm::cmd_models(std::cout);
  if (!out_path.empty()) opt.out = out_path;

  vvpm::ScenarioConfig config;
  try {
    config = vvpm::load_config(config_path);
    if (factor->parsed()) return vvpm::cmd_factor(config, opt);
    if (verify->parsed()) return vvpm::cmd_verify(config, opt);
    if (sweep->parsed()) return vvpm::cmd_sweep(config, opt);
  } catch (const vvpm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return vvpm::ConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vvpm::NumericalFailure;
  }
  return vvpm::ConfigFailure;
}
