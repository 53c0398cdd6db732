#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ategb/game.hpp"
#include "ategb/profile.hpp"

namespace ategb {

struct SelectionRule {
  enum class Kind { uniform, player1, player2, mixture };
  Kind kind = Kind::uniform;
  double q = 0.5;  // mixture: probability of applying the player-1 rule

  std::string name() const;
  static SelectionRule parse(const std::string& text);
  static SelectionRule uniform() { return {}; }
  static SelectionRule player1() { return {Kind::player1, 1.0}; }
  static SelectionRule player2() { return {Kind::player2, 0.0}; }
  static SelectionRule mixture(double q) { return {Kind::mixture, q}; }
};

// Identifiers accepted by SelectionRule::parse ("mixture:q" with q in [0,1]).
std::vector<std::string> selection_rules();

// The equilibrium a deterministic priority rule picks: the one that is
// lexicographically largest when players are read in priority order
// (`first` leads, then the others in index order).
Profile priority_pick(const std::vector<Profile>& eqs, int s_count, int first);

struct SimParams {
  int s_count = 2;
  std::vector<double> mu;  // mu~_d indexed by profile mask
  double beta = 0.0;
  LinearPayoff payoff;
  Eigen::MatrixXd correlation;  // (S+1)x(S+1), index 0 is epsilon, then V_1..V_S
  std::vector<std::vector<double>> z_support;
  std::vector<double> z_probs;
  std::vector<double> x_support;
  std::vector<double> x_probs;
  std::vector<double> w_support;  // optional conditioning covariate, independent of everything
  std::vector<double> w_probs;
  SelectionRule selection;
  double y_lo = 0.0;
  double y_hi = 1.0;

  GameSpec game() const;
  double mu_at(Profile d, double x) const { return mu[d] + beta * x; }
  bool has_w() const { return !w_support.empty(); }
  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

// Section-4 design: S=2, mu~ = (-0.25, 0, 0, 0.25) for (00,10,01,11), delta=-0.1,
// gamma=1, beta=0.5, Z_s in {-1,1}, all error correlations 0.5, uniform cells.
// x_points is 3 ({-1,0,1}) or 15 (step 1/7).
SimParams default_params(int x_points = 3);

struct Dataset {
  int s_count = 0;
  std::vector<std::vector<double>> z_support;
  std::vector<double> x_support;
  std::vector<double> w_support;  // empty when no w column
  std::vector<std::uint8_t> y;
  std::vector<Profile> d;
  std::vector<std::uint32_t> zi;
  std::vector<std::uint32_t> xi;
  std::vector<std::uint32_t> wi;  // empty when no w column
  std::uint64_t seed = 0;

  std::size_t size() const { return y.size(); }
  bool has_w() const { return !w_support.empty(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

// Optional per-market latent draws, for brute-force checks.
struct GenerateTrace {
  std::vector<double> eps;
  std::vector<std::uint8_t> equilibria;  // number of pure equilibria in the market
};

Dataset generate(const SimParams& p, std::size_t n, std::uint64_t seed, GenerateTrace* trace = nullptr);

// Equilibria on the latent-normal scale: player s enters iff its latent
// index is >= v_s (equivalently nu^s >= Phi(v_s) = u_s).
std::vector<Profile> latent_equilibria(const SimParams& p, std::size_t zi, std::span<const double> v);

void write_csv(std::ostream& os, const Dataset& ds);
// Supports are taken from `like` when given (so indices match a config),
// otherwise inferred from the file as sorted unique values.
Dataset read_dataset_csv(std::istream& is, const SimParams* like = nullptr);

}  // namespace ategb
