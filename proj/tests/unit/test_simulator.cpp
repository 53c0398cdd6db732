#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ategb/bounds.hpp"
#include "ategb/oracle.hpp"
#include "ategb/simulator.hpp"

using namespace ategb;

namespace {

SimParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SimParams p = default_params(3);
  p.payoff.gamma = {0.5 + u(rng), 0.5 + u(rng)};
  const double d = -u(rng);
  p.payoff.delta = {{0.0, d}, {d, 0.0}};
  p.beta = u(rng);
  // Increasing in each player's action, as monotone response requires.
  const double base = u(rng) - 0.5, up1 = 0.5 * u(rng), up2 = 0.5 * u(rng);
  p.mu = {base, base + up1, base + up2, base + up1 + up2};
  const double rho = 0.6 * u(rng);
  p.correlation.setConstant(rho);
  p.correlation.diagonal().setOnes();
  return p;
}

// Largest |sample - population| in binomial standard errors over every cell entry.
double worst_z_score(const CondTable& sample, const CondTable& pop) {
  double worst = 0.0;
  for (std::size_t zi = 0; zi < sample.z_count(); ++zi)
    for (std::size_t xi = 0; xi < sample.x_count(); ++xi) {
      const auto& c = sample.cell(zi, xi);
      const auto& q = pop.cell(zi, xi);
      for (std::size_t d = 0; d < c.p.size(); ++d) {
        for (auto [est, truth] : {std::pair{c.p[d], q.p[d]}, std::pair{c.py[d], q.py[d]}}) {
          const double se = std::sqrt(std::max(truth * (1.0 - truth), 1e-12) / c.n);
          worst = std::max(worst, std::abs(est - truth) / se);
        }
      }
    }
  return worst;
}

}  // namespace

TEST(Selection, ParseAndName) {
  for (const auto& name : {"uniform", "player1", "player2", "mixture:0.25"})
    EXPECT_EQ(SelectionRule::parse(name).name(), name);
  EXPECT_THROW(SelectionRule::parse("mixture:2"), std::invalid_argument);
  EXPECT_THROW(SelectionRule::parse("random"), std::invalid_argument);
  EXPECT_FALSE(selection_rules().empty());
}

TEST(Selection, PriorityPickPrefersTheLeadPlayer) {
  const std::vector<Profile> eqs{0b01, 0b10};
  EXPECT_EQ(priority_pick(eqs, 2, 0), 0b01u);
  EXPECT_EQ(priority_pick(eqs, 2, 1), 0b10u);
  // Read as (player 3, player 1, player 2): 101 -> (1,1,0) beats 110 -> (1,0,1).
  EXPECT_EQ(priority_pick({0b011, 0b101, 0b110}, 3, 2), 0b101u);
}

TEST(SimParams, DefaultDesign) {
  const auto p = default_params(3);
  EXPECT_EQ(p.s_count, 2);
  EXPECT_DOUBLE_EQ(p.mu_at(0b11, 0.0), 0.25);
  EXPECT_DOUBLE_EQ(p.mu_at(0b00, 1.0), 0.25);
  EXPECT_EQ(default_params(15).x_support.size(), 15u);
  EXPECT_NEAR(default_params(15).x_support[7], 0.0, 1e-15);
  EXPECT_THROW(default_params(4), std::invalid_argument);
}

TEST(SimParams, ValidationRejectsBadInputs) {
  auto p = default_params();
  p.z_probs = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = default_params();
  p.correlation(0, 1) = p.correlation(1, 0) = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = default_params();
  p.payoff.delta[0][1] = 0.3;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Generate, SameSeedSameData) {
  const auto p = default_params();
  const auto a = generate(p, 20000, 9);
  const auto b = generate(p, 20000, 9);
  const auto c = generate(p, 20000, 10);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.zi, b.zi);
  EXPECT_NE(a.d, c.d);
}

TEST(Generate, PrefixIsStableAcrossSampleSizes) {
  const auto p = default_params();
  const auto small = generate(p, 5000, 4);
  const auto large = generate(p, 30000, 4);
  for (std::size_t i = 0; i < small.size(); ++i) ASSERT_EQ(small.d[i], large.d[i]);
}

TEST(Generate, MultiplicityIncidenceIsPositive) {
  GenerateTrace trace;
  generate(default_params(), 100000, 1, &trace);
  const auto multi = std::count_if(trace.equilibria.begin(), trace.equilibria.end(), [](auto k) { return k > 1; });
  EXPECT_GT(multi, 0);
  for (auto k : trace.equilibria) EXPECT_GE(k, 1);
}

TEST(Generate, PlayerOneRuleNeverPicksPlayerTwoInTheBand) {
  auto p = default_params();
  p.selection = SelectionRule::player1();
  GenerateTrace trace;
  const auto ds = generate(p, 200000, 2, &trace);
  std::size_t band = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (trace.equilibria[i] > 1) {
      ++band;
      EXPECT_EQ(ds.d[i], 0b01u);
    }
  EXPECT_GT(band, 0u);
}

TEST(Generate, CsvRoundTrip) {
  auto p = default_params();
  p.w_support = {0.0, 1.0};
  p.w_probs = {0.3, 0.7};
  const auto ds = generate(p, 3000, 5);
  std::stringstream ss;
  write_csv(ss, ds);
  const auto back = read_dataset_csv(ss, &p);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.d, ds.d);
  EXPECT_EQ(back.zi, ds.zi);
  EXPECT_EQ(back.xi, ds.xi);
  EXPECT_EQ(back.wi, ds.wi);
  std::stringstream again;
  write_csv(again, back);
  ss.clear();
  ss.seekg(0);
  EXPECT_EQ(again.str(), ss.str());
}

TEST(Generate, TabulatedCellsMatchTheOracle) {
  std::mt19937_64 rng(77);
  for (int draw = 0; draw < 6; ++draw) {
    const SimParams p = draw == 0 ? default_params() : random_params(rng);
    const auto sample = tabulate(generate(p, 1000000, 100 + static_cast<std::uint64_t>(draw)));
    const auto pop = oracle::population_probs(p, p.selection);
    EXPECT_LT(worst_z_score(sample, pop.table), 4.0) << "draw " << draw;
  }
}
