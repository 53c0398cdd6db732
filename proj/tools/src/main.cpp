#include <iostream>

#include <CLI11.hpp>

#include "ategb/cli/commands.hpp"

namespace cli = ategb::cli;

int main(int argc, char** argv) {
  CLI::App app{"Bounds on treatment effects when treatments are entry-game equilibria"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ategb 0.1.0");

  cli::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from the simulation design");
  simulate->add_option("--config", sim.config, "Design JSON (default: built-in design)");
  simulate->add_option("--n", sim.n, "Number of markets")->required();
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--out", sim.out, "Output CSV")->required();
  simulate->add_option("--selection", sim.selection, "Equilibrium selection rule (uniform, player1, player2, mixture:q)");

  cli::BoundsArgs bnd;
  auto* bounds = app.add_subcommand("bounds", "Estimate bounds from data or from population probabilities");
  bounds->add_option("--data", bnd.data, "Dataset CSV");
  bounds->add_flag("--population", bnd.population, "Use oracle probabilities from --config instead of data");
  bounds->add_option("--config", bnd.config, "Design JSON giving supports, Y range and the game");
  bounds->add_option("--target", bnd.targets, "ate:<d>-<d'> or asf:<d>; repeatable");
  bounds->add_option("--x", bnd.x, "Covariate values to report; repeatable");
  bounds->add_option("--method", bnd.methods, "manski, z-only, z-and-x; repeatable")->delimiter(',');
  bounds->add_option("--tau", bnd.tau, "Dead band for sign decisions");
  bounds->add_option("--depth", bnd.depth, "Covariate-set iteration cap (-1: fixpoint)");
  bounds->add_option("--eq-mode", bnd.eq_mode, "Instrument-pair admission: eq-star or oracle");
  bounds->add_option("--selection", bnd.selection, "Selection rule for --population");
  bounds->add_option("--boot-reps", bnd.boot_reps, "Bootstrap replications (0: none, else >= 100)");
  bounds->add_option("--level", bnd.level, "Bootstrap coverage level");
  bounds->add_option("--seed", bnd.seed, "Bootstrap seed");
  bounds->add_option("--out", bnd.out, "Report CSV");
  bounds->add_option("--json", bnd.json, "Full report JSON");

  std::string sweep_spec, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write plot-ready CSV");
  sweep->add_option("spec", sweep_spec, "Sweep spec JSON")->required();
  sweep->add_option("--out", sweep_out, "Output CSV")->required();

  cli::CheckArgs chk;
  auto* check = app.add_subcommand("check", "Validity and geometric property checks for a game");
  check->add_option("--config", chk.config, "Game or design JSON (default: built-in design)");
  check->add_option("--seed", chk.seed, "Seed for pointwise samples");
  check->add_option("--samples", chk.samples, "Pointwise samples per z value");

  cli::RegionsArgs reg;
  auto* regions = app.add_subcommand("regions", "Dump equilibrium regions for one z as CSV");
  regions->add_option("--config", reg.config, "Game or design JSON (default: built-in design)");
  regions->add_option("--z", reg.z, "Index into z_support");
  regions->add_option("--what", reg.what, "all, profile:<d>, cumulative:<j> or multiplicity:<j>");
  regions->add_option("--out", reg.out, "Output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cli::cmd_simulate(sim, std::cout, std::cerr);
    if (*bounds) return cli::cmd_bounds(bnd, std::cout, std::cerr);
    if (*sweep) return cli::cmd_sweep(sweep_spec, sweep_out, std::cout, std::cerr);
    if (*check) return cli::cmd_check(chk, std::cout, std::cerr);
    if (*regions) return cli::cmd_regions(reg, std::cout, std::cerr);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_failure;
  }
  return cli::exit_usage;
}
