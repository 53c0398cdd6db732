#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ategb/profile.hpp"
#include "ategb/regions.hpp"

namespace ategb {

enum class Link { gaussian, logistic };

std::string link_name(Link link);
Link parse_link(const std::string& name);
double apply_link(Link link, double index);

// nu^s(d_{-s}, z) = link(gamma_s z_s + sum_t delta[s][t] d_t); delta[s][s] is ignored.
struct LinearPayoff {
  std::vector<double> gamma;
  std::vector<std::vector<double>> delta;
  Link link = Link::gaussian;

  double index(int s, Profile d, std::span<const double> z) const;
};

class GameSpec {
 public:
  // table[s][d_{-s} bitmask][z index]
  using Table = std::vector<std::vector<std::vector<double>>>;

  static GameSpec from_table(int s_count, Table table, std::vector<std::vector<double>> z_support);
  static GameSpec from_linear(int s_count, LinearPayoff payoff, std::vector<std::vector<double>> z_support);

  int s_count() const { return s_count_; }
  std::size_t z_count() const { return z_support_.size(); }
  const std::vector<std::vector<double>>& z_support() const { return z_support_; }
  const std::vector<double>& z(std::size_t zi) const { return z_support_.at(zi); }
  const Table& table() const { return table_; }
  const std::optional<LinearPayoff>& linear() const { return linear_; }

  // Throws std::out_of_range when z is not a support point.
  std::size_t z_index(std::span<const double> z) const;

  double nu(int s, std::uint32_t opp, std::size_t zi) const {
    return table_[static_cast<std::size_t>(s)][opp][zi];
  }
  // Threshold for player s facing the opponents in profile d.
  double nu_at(int s, Profile d, std::size_t zi) const { return nu(s, opponents(d, s), zi); }

 private:
  int s_count_ = 0;
  Table table_;
  std::vector<std::vector<double>> z_support_;
  std::optional<LinearPayoff> linear_;
};

struct ValidityReport {
  bool strategic_substitutes = true;
  bool uniform_m1 = true;
  bool in_range = true;
  std::vector<std::string> messages;

  bool ok() const { return strategic_substitutes && uniform_m1 && in_range; }
};

ValidityReport check_validity(const GameSpec& game);

bool is_equilibrium(const GameSpec& game, std::size_t zi, std::span<const double> u, Profile d);
std::vector<Profile> enumerate_equilibria(const GameSpec& game, std::size_t zi, std::span<const double> u);
std::vector<Profile> enumerate_equilibria(const GameSpec& game, std::span<const double> z,
                                          std::span<const double> u);

// Maximal region on which d is an equilibrium: entrants u_s in (0, nu^s],
// non-entrants u_s in (nu^s, 1], thresholds evaluated at d_{-s}.
RegionSet profile_region(const GameSpec& game, std::size_t zi, Profile d);
std::vector<RegionSet> equilibrium_regions(const GameSpec& game, std::size_t zi);
RegionSet cumulative_region(const GameSpec& game, std::size_t zi, int j);
RegionSet multiplicity_region(const GameSpec& game, std::size_t zi, int j);

bool check_assumption_eq(const GameSpec& game, std::size_t zi, std::size_t zpi);

// Model-level joint-propensity ordering: z raises every player's all-entry
// threshold relative to z'. Equivalent to the data condition because the
// all-entry region is the single box prod_s (0, nu^s(1..1_{-s}, z_s)].
bool propensity_ordered(const GameSpec& game, std::size_t zi, std::size_t zpi);

struct RandomGameOptions {
  int s_count = 2;
  // Per-entrant delta_t (a weighted potential game, so a pure equilibrium
  // always exists). When false, draws a full delta[s][t] matrix.
  bool per_entrant_delta = true;
};

GameSpec random_game(std::mt19937_64& rng, const RandomGameOptions& opt);

}  // namespace ategb
