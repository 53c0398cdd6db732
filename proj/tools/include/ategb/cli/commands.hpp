#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ategb/bounds.hpp"
#include "ategb/simulator.hpp"

// Command implementations behind the `ategb` executable. Each returns the
// process exit status; human-readable output goes to `out`, problems to `err`.
namespace ategb::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;  // runtime error or a failed check
inline constexpr int exit_usage = 2;

// Thrown for malformed arguments; mapped to exit_usage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config path, or empty for the built-in design with the given x grid size.
SimParams load_params(const std::string& config_path, int x_points = 3);

struct SimulateArgs {
  std::string config;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::string> selection;  // overrides the config
};
int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err);

struct BoundsArgs {
  std::string data;     // Dataset CSV; empty with population = true
  std::string config;   // supports, game for oracle pairing, Y range
  bool population = false;  // evaluate the formulas on oracle probabilities
  std::vector<std::string> targets;  // "ate:11-00", "asf:10"; default ate all-vs-none
  std::vector<double> x;              // default: every support point
  std::vector<std::string> methods;   // default: all three
  double tau = 0.0;
  int depth = -1;
  std::string eq_mode = "eq-star";
  std::optional<std::string> selection;
  int boot_reps = 0;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string out;   // CSV
  std::string json;  // full report
};
int cmd_bounds(const BoundsArgs& a, std::ostream& out, std::ostream& err);

struct SweepSpec {
  std::string param;  // gamma | beta | delta
  double min = 0.0;
  double max = 0.0;
  int steps = 1;
  std::vector<std::string> methods;  // subset of manski, z-only, z-and-x, tsls, oracle
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string selection = "uniform";
  std::string eq_mode = "eq-star";
  double tau = 0.0;
  double x = 0.0;
  std::string target = "ate:11-00";
  SimParams base;

  double value(int i) const;
  static SweepSpec from_json(const nlohmann::json& j, const std::string& base_dir = ".");
};

// Returns a copy of p with the swept parameter set to v. gamma sets every
// player's coefficient, delta every off-diagonal interaction.
SimParams with_parameter(const SimParams& p, const std::string& param, double v);

struct SweepRow {
  std::string param;
  double value = 0.0;
  std::string method;
  double L = 0.0;
  double U = 0.0;
};

// Estimator methods run on a simulated sample when n > 0; `oracle` adds the
// same methods on population probabilities (labelled oracle:<method>) plus the
// true value (labelled truth). `tsls` gives a point (L = U).
std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
int cmd_sweep(const std::string& spec_path, const std::string& out_path, std::ostream& out, std::ostream& err);

struct CheckArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t samples = 2000;  // pointwise equilibrium samples per z
};
int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err);

struct RegionsArgs {
  std::string config;
  std::size_t z = 0;
  std::string what = "all";  // all | profile:<d> | cumulative:<j> | multiplicity:<j>
  std::string out;
};
int cmd_regions(const RegionsArgs& a, std::ostream& out, std::ostream& err);

}  // namespace ategb::cli
