#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ategb/mvn.hpp"
#include "ategb/oracle.hpp"

using namespace ategb;
using namespace ategb::oracle;

// Reference values from 30-digit adaptive quadrature of the defining integrals.
TEST(Mvn, NormalCdfAndQuantile) {
  EXPECT_NEAR(mvn::cdf(-3.0), 0.0013498980316300945, 1e-16);
  EXPECT_NEAR(mvn::cdf(0.25), 0.59870632568292372, 1e-15);
  EXPECT_NEAR(mvn::cdf(1.96), 0.97500210485177956, 1e-15);
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.99}) EXPECT_NEAR(mvn::cdf(mvn::quantile(p)), p, 1e-14 + 1e-12 * p);
}

TEST(Mvn, BivariateCdfMatchesReference) {
  struct Case {
    double h, k, r, want;
  };
  for (const auto& c : {Case{0, 0, 0.5, 1.0 / 3.0}, Case{0.3, -0.7, 0.5, 0.20652377978573901},
                        Case{-1.2, 0.4, -0.3, 0.052498253077877628}, Case{1.5, 1.5, 0.95, 0.91693980225792853},
                        Case{-2, -1, 0.8, 0.020859583932255541}, Case{0.5, 0.2, -0.9, 0.27525243207637858},
                        Case{2.5, -3, 0.2, 0.0013490248425096273}})
    EXPECT_NEAR(mvn::bvn_cdf(c.h, c.k, c.r), c.want, 1e-7) << c.h << ' ' << c.k << ' ' << c.r;
}

TEST(Mvn, TrivariateCdfMatchesReference) {
  EXPECT_NEAR(mvn::tvn_cdf(0, 0, 0, 0.5, 0.5, 0.5), 0.25, 1e-7);
  EXPECT_NEAR(mvn::tvn_cdf(0.3, -0.2, 1.0, 0.5, 0.5, 0.5), 0.324424403741697, 1e-7);
  EXPECT_NEAR(mvn::tvn_cdf(-0.5, 0.7, 0.1, 0.3, -0.2, 0.4), 0.131110387367636, 1e-7);
}

TEST(TrueAsf, ClosedForm) {
  const auto p = default_params();
  EXPECT_NEAR(true_ate(p, 0b11, 0b00, 0.0), 0.19741265136584745, 1e-12);
  auto q = p;
  std::fill(q.mu.begin(), q.mu.end(), 0.0);
  EXPECT_DOUBLE_EQ(true_asf(q, 0b10, 0.0), 0.5);
  EXPECT_LT(true_asf(p, 0b00, 0.0), true_asf(p, 0b10, 0.0));
  EXPECT_LT(true_asf(p, 0b10, 0.0), true_asf(p, 0b11, 0.0));
}

TEST(PopulationProbs, NoInteractionGivesBivariateNormal) {
  auto p = default_params();
  p.payoff.delta = {{0.0, 0.0}, {0.0, 0.0}};
  const auto pop = population_probs(p, SelectionRule::uniform());
  EXPECT_EQ(pop.path, Path::analytic);
  const double want[4] = {0.0625140947096638, 0.154872951858603, 0.154872951858603, 0.74520358684675};
  for (std::size_t zi = 0; zi < 4; ++zi) EXPECT_NEAR(pop.table.cell(zi, 1).p[0b11], want[zi], 1e-7);
}

TEST(PopulationProbs, FlatOutcomeIndexGivesOneHalf) {
  auto p = default_params();
  p.beta = 0.0;
  std::fill(p.mu.begin(), p.mu.end(), 0.0);
  const auto pop = population_probs(p, SelectionRule::uniform());
  for (std::size_t zi = 0; zi < 4; ++zi)
    for (std::size_t xi = 0; xi < 3; ++xi) {
      const auto& c = pop.table.cell(zi, xi);
      EXPECT_NEAR(std::accumulate(c.py.begin(), c.py.end(), 0.0), 0.5, 1e-9);
    }
}

TEST(PopulationProbs, CellsSumToOne) {
  for (const auto& sel : {SelectionRule::uniform(), SelectionRule::player2(), SelectionRule::mixture(0.7)}) {
    const auto pop = population_probs(default_params(), sel);
    for (std::size_t zi = 0; zi < 4; ++zi)
      for (std::size_t xi = 0; xi < 3; ++xi) {
        const auto& c = pop.table.cell(zi, xi);
        EXPECT_NEAR(std::accumulate(c.p.begin(), c.p.end(), 0.0), 1.0, 1e-9);
      }
  }
}

TEST(PopulationProbs, AnalyticAndQmcAgree) {
  PopulationOptions qmc;
  qmc.path = Path::qmc;
  qmc.qmc_points = std::size_t{1} << 18;
  qmc.qmc_replicates = 64;
  PopulationOptions exact;
  exact.path = Path::analytic;
  for (const auto& sel : {SelectionRule::uniform(), SelectionRule::player1(), SelectionRule::mixture(0.3)}) {
    const auto a = population_probs(default_params(), sel, exact);
    const auto q = population_probs(default_params(), sel, qmc);
    for (std::size_t zi = 0; zi < 4; ++zi)
      for (std::size_t xi = 0; xi < 3; ++xi)
        for (std::size_t d = 0; d < 4; ++d) {
          EXPECT_LE(std::abs(a.table.cell(zi, xi).p[d] - q.table.cell(zi, xi).p[d]), 3.0 * q.se_p[zi][d] + 1e-12);
          EXPECT_LE(std::abs(a.table.cell(zi, xi).py[d] - q.table.cell(zi, xi).py[d]),
                    3.0 * q.se_py[zi][xi][d] + 1e-12);
        }
  }
}

TEST(PopulationProbs, SelectionShiftsOnlyTheBand) {
  const auto u = population_probs(default_params(), SelectionRule::uniform());
  const auto p1 = population_probs(default_params(), SelectionRule::player1());
  const auto& cu = u.table.cell(3, 1);
  const auto& c1 = p1.table.cell(3, 1);
  EXPECT_GT(c1.p[0b01], cu.p[0b01]);
  EXPECT_LT(c1.p[0b10], cu.p[0b10]);
  EXPECT_NEAR(c1.p[0b11], cu.p[0b11], 1e-12);
  EXPECT_NEAR(c1.p[0b00], cu.p[0b00], 1e-12);
}

TEST(PartialAsf, EmptyFreeGroupIsTheAsf) {
  const auto p = default_params();
  EXPECT_NEAR(true_partial_asf(p, 0b11, 0b10, 0.0, SelectionRule::uniform()), true_asf(p, 0b10, 0.0), 1e-12);
}

TEST(PartialAsf, DegenerateFreeActionIsTheAsf) {
  auto p = default_params();
  p.payoff.gamma = {1.0, 10.0};
  p.z_support = {{-1, -1}, {1, -1}};
  p.z_probs = {0.5, 0.5};
  EXPECT_NEAR(true_partial_asf(p, 0b01, 0b01, 0.0, SelectionRule::uniform()), true_asf(p, 0b01, 0.0), 1e-9);
}

TEST(PartialAsf, MatchesBruteForceSimulation) {
  // Relabel outcome indices so that the observed Y equals Y(1, D_2).
  const auto p = default_params();
  SimParams q = p;
  for (Profile d = 0; d < 4; ++d) q.mu[d] = p.mu[d | 0b01];
  q.x_support = {0.0};
  q.x_probs = {1.0};
  const std::size_t n = 2000000;
  const auto ds = generate(q, n, 31);
  const double mean = std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / static_cast<double>(n);
  const double se = std::sqrt(mean * (1.0 - mean) / static_cast<double>(n));
  const double truth = true_partial_asf(p, 0b01, 0b01, 0.0, SelectionRule::uniform());
  EXPECT_NEAR(mean, truth, 4.0 * se);
  EXPECT_GT(truth, true_asf(p, 0b01, 0.0));
  EXPECT_LT(truth, true_asf(p, 0b11, 0.0));
}

TEST(Tsls, RecoversLinearModel) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds;
  ds.s_count = 2;
  ds.z_support = {{-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
  ds.x_support = {-1, 0, 1};
  const std::size_t n = 400000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = static_cast<std::uint32_t>(u(rng) * 4);
    const auto xi = static_cast<std::uint32_t>(u(rng) * 3);
    const auto& z = ds.z_support[zi];
    const bool d1 = u(rng) < 0.5 + 0.3 * z[0];
    const bool d2 = u(rng) < 0.5 + 0.3 * z[1];
    const double py = 0.3 + 0.25 * d1 + 0.15 * d2 + 0.1 * ds.x_support[xi];
    ds.zi.push_back(zi);
    ds.xi.push_back(xi);
    ds.d.push_back((d1 ? 1u : 0u) | (d2 ? 2u : 0u));
    ds.y.push_back(u(rng) < py ? 1 : 0);
  }
  EXPECT_NEAR(tsls(ds), 0.4, 0.02);
}

TEST(Tsls, PopulationMomentsGolden) {
  // Misspecification bias of the linear IV fit in the default design.
  const auto p = default_params();
  const auto pop = population_probs(p, SelectionRule::uniform());
  const double t = tsls(p, pop);
  EXPECT_NEAR(t, 0.192411252732, 1e-9);
  EXPECT_NEAR(t - true_ate(p, 0b11, 0b00, 0.0), -0.0050013986, 1e-9);
}

TEST(Tsls, IrrelevantInstrumentsThrow) {
  auto p = default_params();
  p.payoff.gamma = {0.0, 0.0};
  const auto pop = population_probs(p, SelectionRule::uniform());
  EXPECT_THROW(tsls(p, pop), std::runtime_error);
}

TEST(GameProfileProbs, IndependentThresholdProducts) {
  LinearPayoff pay;
  pay.gamma = {0.7, -0.4};
  pay.delta = {{0, 0}, {0, 0}};
  const auto g = GameSpec::from_linear(2, pay, {{1, 1}});
  const auto pr = game_profile_probs(g, 0, SelectionRule::uniform());
  const double a = mvn::cdf(0.7), b = mvn::cdf(-0.4);
  EXPECT_NEAR(pr[0b11], a * b, 1e-14);
  EXPECT_NEAR(pr[0b01], a * (1 - b), 1e-14);
  EXPECT_NEAR(pr[0b00], (1 - a) * (1 - b), 1e-14);
}

TEST(PopulationBounds, StrongInstrumentCollapses) {
  auto p = default_params();
  p.payoff.gamma = {10.0, 10.0};
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  t.x = {1};
  BoundsOptions o;
  o.methods = {Method::z_only};
  const auto rep = population_bounds(p, SelectionRule::uniform(), t, o);
  const auto* r = rep.find(Method::z_only, true, 0b11, 0b00, 1);
  ASSERT_NE(r, nullptr);
  EXPECT_LE(r->b.U - r->b.L, 0.01);
  EXPECT_LE(r->b.L, 0.19741265136584745 + 1e-4);
  EXPECT_GE(r->b.U, 0.19741265136584745 - 1e-4);
}

TEST(PopulationBounds, IrrelevantInstrumentGivesManski) {
  auto p = default_params();
  p.payoff.gamma = {0.0, 0.0};
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  const auto rep = population_bounds(p, SelectionRule::uniform(), t, {});
  EXPECT_TRUE(rep.fell_back_to_manski);
  for (std::size_t xi = 0; xi < 3; ++xi) {
    const auto* m = rep.find(Method::manski, true, 0b11, 0b00, xi);
    const auto* z = rep.find(Method::z_only, true, 0b11, 0b00, xi);
    EXPECT_DOUBLE_EQ(m->b.L, z->b.L);
    EXPECT_DOUBLE_EQ(m->b.U, z->b.U);
  }
}

TEST(PopulationBounds, NarrowestWithoutInteraction) {
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  t.x = {1};
  BoundsOptions o;
  o.methods = {Method::z_only};
  double previous = -1.0;
  for (double delta : {0.0, -0.5, -1.0, -2.0}) {
    auto p = default_params();
    p.payoff.delta = {{0.0, delta}, {delta, 0.0}};
    const auto rep = population_bounds(p, SelectionRule::uniform(), t, o);
    const auto& b = rep.find(Method::z_only, true, 0b11, 0b00, 1)->b;
    EXPECT_GE(b.U - b.L, previous - 1e-12) << "delta " << delta;
    previous = b.U - b.L;
  }
}
