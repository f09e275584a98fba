#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ionreadout/cli/commands.hpp"
#include "ionreadout/cli/config.hpp"
#include "ionreadout/errors.hpp"

namespace {

using namespace ionreadout;
using namespace ionreadout::cli;

struct Overrides {
  std::vector<double> intensities;
  std::optional<double> i_sat;
  std::optional<std::string> mode;
  std::optional<double> tau_max;
  std::optional<double> tau_c;
  std::optional<unsigned> threshold;
  std::optional<std::size_t> trials;
  std::optional<double> horizon;
  std::optional<double> grid_stop;
  std::optional<double> grid_step;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--intensity", o.intensities, "Operating-point intensities, mW/cm^2");
  cmd->add_option("--i-sat", o.i_sat, "Saturation intensity, mW/cm^2");
  cmd->add_option("--mode", o.mode, "threshold | first-photon | first-two-photon");
  cmd->add_option("--tau-max", o.tau_max, "Detection window, s");
  cmd->add_option("--tau-c", o.tau_c, "Cutoff, s (default: optimal for the rates)");
  cmd->add_option("--threshold", o.threshold, "Count threshold for threshold mode");
  cmd->add_option("--trials", o.trials, "Trials per prepared state");
  cmd->add_option("--horizon", o.horizon, "Simulated record length, s");
  cmd->add_option("--grid-stop", o.grid_stop, "Largest tau_max of the sweep/optimize grid, s");
  cmd->add_option("--grid-step", o.grid_step, "Spacing of the sweep/optimize grid, s");
}

RunConfig resolve(const std::optional<std::string>& path, std::optional<std::uint64_t> seed,
                  const Overrides& o, bool single_point_sweep) {
  RunConfig c = path ? load_config(*path) : RunConfig{};
  if (seed) c.seed = *seed;
  if (!o.intensities.empty()) c.intensities = o.intensities;
  if (o.i_sat) c.model.i_sat = *o.i_sat;
  if (o.mode) c.mode = parse_mode(*o.mode);
  if (o.tau_max) c.tau_max = *o.tau_max;
  if (o.tau_c) c.tau_c = *o.tau_c;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.trials) c.trials_per_state = *o.trials;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.grid_stop) c.tau_grid.stop = c.optimize_range.stop = *o.grid_stop;
  if (o.grid_step) c.tau_grid.step = c.optimize_range.step = *o.grid_step;
  if (single_point_sweep && o.tau_max) c.tau_grid = {*o.tau_max, *o.tau_max, *o.tau_max};
  if (c.tau_c && c.tau_max < *c.tau_c) c.tau_max = *c.tau_c;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion hyperfine qubit readout: rates, photon streams, protocols, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  Runtime runtime;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base RNG seed (default 42)");
  app.add_option("--out", runtime.out_dir, "Output directory");
  app.add_option("--threads", runtime.threads, "Worker threads, 0 = all cores")->default_val(1);

  Overrides overrides;
  std::string curve_file;
  auto* rates = app.add_subcommand("rates", "Tabulate scattering and pumping rates");
  auto* simulate = app.add_subcommand("simulate", "Sample photon streams for both prepared states");
  auto* sweep = app.add_subcommand("sweep", "Error versus detection time over a tau_max grid");
  auto* optimize = app.add_subcommand("optimize", "Find the error-minimizing tau_max");
  auto* fit = app.add_subcommand("fit", "Fit a mean-count curve for the signal and pumping rates");
  fit->add_option("curve", curve_file, "Curve CSV: tau_s,mean_counts,n_trials[,count_variance]")->required();
  for (auto* cmd : {rates, simulate, sweep, optimize, fit}) add_overrides(cmd, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig config;
  try {
    config = resolve(config_path, seed, overrides, sweep->parsed());
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (rates->parsed()) cmd_rates(config, runtime, std::cout);
    if (simulate->parsed()) cmd_simulate(config, runtime, std::cout);
    if (sweep->parsed()) cmd_sweep(config, runtime, std::cout);
    if (optimize->parsed()) cmd_optimize(config, runtime, std::cout);
    if (fit->parsed()) cmd_fit(config, runtime, curve_file, std::cout);
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
