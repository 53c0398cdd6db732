#pragma once

#include <cstdint>
#include <vector>

#include "ategb/bounds.hpp"
#include "ategb/game.hpp"
#include "ategb/simulator.hpp"

// Ground truth computed by integration, independent of the estimator and the
// simulator code paths.
namespace ategb::oracle {

enum class Path { automatic, analytic, qmc };

struct PopulationOptions {
  Path path = Path::automatic;  // automatic: analytic for S = 2, QMC otherwise
  std::size_t qmc_points = std::size_t{1} << 16;
  int qmc_replicates = 16;
  std::uint64_t seed = 1;
};

struct PopulationTable {
  CondTable table;  // cell mass n = P(z) P(x) P(w)
  Path path = Path::analytic;
  double tolerance = 0.0;  // declared integration tolerance (analytic path)
  // QMC standard errors, same layout as the table: se_p[zi][d], se_py[zi][xi][d].
  std::vector<std::vector<double>> se_p;
  std::vector<std::vector<std::vector<double>>> se_py;
};

PopulationTable population_probs(const SimParams& p, const SelectionRule& selection, const PopulationOptions& opt = {});

double true_asf(const SimParams& p, Profile d, double x);
double true_ate(const SimParams& p, Profile d, Profile dt, double x);

// E[Y(d_fixed, D_free) | X = x]: players in fixed_mask are forced to the
// corresponding bits of fixed_values; the others keep their equilibrium action
// under the given selection rule.
double true_partial_asf(const SimParams& p, std::uint32_t fixed_mask, Profile fixed_values, double x,
                        const SelectionRule& selection, const PopulationOptions& opt = {});

// Bounds formulas evaluated on the population table.
BoundsReport population_bounds(const SimParams& p, const SelectionRule& selection, const BoundsTarget& target,
                               const BoundsOptions& opt, const PopulationOptions& popt = {});

// Sum of the treatment coefficients from a linear IV fit of Y on (1, D, X)
// with instruments (1, Z, X).
double tsls(const Dataset& ds);
double tsls(const SimParams& p, const PopulationTable& pop);

// Exact P[D=d | z] for the game with independent uniform U under a selection
// rule (grid enumeration of the threshold arrangement).
std::vector<double> game_profile_probs(const GameSpec& game, std::size_t zi, const SelectionRule& selection);

}  // namespace ategb::oracle
