#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ategb/bounds.hpp"
#include "ategb/oracle.hpp"

using namespace ategb;

namespace {

// Two instrument values, one covariate cell.
CondTable small_table() {
  CondTable ct(2, {{-1, -1}, {1, 1}}, {0.0});
  auto& lo = ct.cell(0, 0);
  lo.n = 0.5;
  lo.p = {0.7, 0.1, 0.1, 0.1};
  lo.py = {0.2, 0.05, 0.04, 0.08};
  lo.defined = true;
  auto& hi = ct.cell(1, 0);
  hi.n = 0.5;
  hi.p = {0.1, 0.1, 0.1, 0.7};
  hi.py = {0.03, 0.06, 0.05, 0.5};
  hi.defined = true;
  return ct;
}

const oracle::PopulationTable& default_population() {
  static const auto pop = oracle::population_probs(default_params(), SelectionRule::uniform());
  return pop;
}

BoundsReport default_report(const BoundsOptions& opt = {}) {
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  return compute_bounds(default_population().table, t, opt);
}

}  // namespace

TEST(Manski, HandComputedTable) {
  const auto ct = small_table();
  const auto b11 = manski_bounds(ct, 0b11, 0);
  EXPECT_DOUBLE_EQ(b11.L, std::max(0.08, 0.5));
  EXPECT_DOUBLE_EQ(b11.U, std::min(0.08 + 0.9, 0.5 + 0.3));
  const auto b00 = manski_bounds(ct, 0b00, 0, 0, {0.0, 2.0});
  EXPECT_DOUBLE_EQ(b00.L, 0.2);
  EXPECT_DOUBLE_EQ(b00.U, std::min(0.2 + 2.0 * 0.3, 0.03 + 2.0 * 0.9));
}

TEST(Contrasts, HandComputed) {
  const auto ct = small_table();
  EXPECT_NEAR(*h(ct, 1, 0, 0), (0.03 + 0.06 + 0.05 + 0.5) - (0.2 + 0.05 + 0.04 + 0.08), 1e-15);
  EXPECT_NEAR(*h_profile(ct, 0b11, 1, 0, 0), 0.42, 1e-15);
  // With every level at the same x the tilde contrast is the plain one.
  EXPECT_NEAR(*h_tilde(ct, 1, 0, {0, 0, 0}), *h(ct, 1, 0, 0), 1e-15);
}

TEST(Contrasts, UndefinedCellsGiveNothing) {
  CondTable ct(2, {{-1, -1}, {1, 1}}, {0.0, 1.0});
  ct.cell(0, 0) = small_table().cell(0, 0);
  ct.cell(1, 0) = small_table().cell(1, 0);
  EXPECT_TRUE(h(ct, 1, 0, 0).has_value());
  EXPECT_FALSE(h(ct, 1, 0, 1).has_value());
}

TEST(SignBand, DeadBand) {
  EXPECT_EQ(sign_with_band(0.02, 0.0), 1);
  EXPECT_EQ(sign_with_band(-0.02, 0.0), -1);
  EXPECT_EQ(sign_with_band(0.02, 0.05), 0);
  EXPECT_EQ(sign_with_band(0.0, 0.0), 0);
}

TEST(Pairs, DefaultDesignAdmitsTheCornerPair) {
  const auto& ct = default_population().table;
  std::vector<PairDiagnostic> diag;
  const auto pairs = eq_pairs(ct, PairMode::eq_star, nullptr, 0, &diag);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].z, 3u);
  EXPECT_EQ(pairs[0].zp, 0u);
  EXPECT_TRUE(eq_star_holds(ct, 3, 0));
  EXPECT_FALSE(diag.empty());

  const auto g = default_params().game();
  const auto oracle_pairs = eq_pairs(ct, PairMode::oracle, &g);
  ASSERT_EQ(oracle_pairs.size(), 1u);
  EXPECT_EQ(oracle_pairs[0].z, 3u);
  EXPECT_THROW(eq_pairs(ct, PairMode::oracle, nullptr), std::invalid_argument);
}

TEST(XSets, DepthZeroIsTheDiagonal) {
  const auto& ct = default_population().table;
  const auto pairs = eq_pairs(ct, PairMode::eq_star);
  const auto xs = build_x_sets(ct, pairs, 0);
  for (const auto& e : xs.entries) EXPECT_EQ(e.xa, e.xb);
  for (std::size_t xi = 0; xi < 3; ++xi) {
    EXPECT_TRUE(xs.contains(1, 1, xi, xi));
    EXPECT_TRUE(xs.contains(2, 1, xi, xi));
  }
}

TEST(XSets, DefaultDesignSignsAndWitnesses) {
  // Frozen from the population table: the pair (x_2, x_1) = (-1, 0) is
  // admitted with a negative sign through x~ = (0, 0, -1).
  const auto& ct = default_population().table;
  const auto pairs = eq_pairs(ct, PairMode::eq_star);
  const auto xs = build_x_sets(ct, pairs, -1);
  EXPECT_TRUE(xs.fixpoint);
  EXPECT_TRUE(xs.contains(2, -1, 0, 1));
  EXPECT_NEAR(xs.h_tilde({1, 1, 0}), -0.00074, 5e-6);
  // The worked examples' contrasts are positive in this design.
  EXPECT_NEAR(xs.h_tilde({1, 0, 0}), 0.0077, 5e-5);
  EXPECT_NEAR(xs.h_tilde({2, 2, 1}), 0.0132, 5e-5);
  EXPECT_FALSE(xs.contains(2, -1, 1, 2));
  for (const auto& e : xs.entries) {
    ASSERT_EQ(e.witness.size(), 3u);
    EXPECT_EQ(sign_with_band(xs.h_tilde(e.witness), 0.0), e.sign);
  }
}

TEST(XSets, ChainSetsKeepTheStartingPointWhenSignsAllow) {
  const auto& ct = default_population().table;
  const auto xs = build_x_sets(ct, eq_pairs(ct, PairMode::eq_star), -1);
  for (std::size_t xi = 0; xi < 3; ++xi)
    for (int jp = 0; jp <= 2; ++jp)
      for (auto side : {Side::lower, Side::upper}) {
        // Staying put across levels needs H(x) to carry a usable sign.
        const int sg = sign_with_band(xs.big_h[xi], 0.0);
        const int usable = (side == Side::upper) == (jp < 2) ? -1 : 1;
        const bool expect = jp == 2 || sg == 0 || sg == usable;
        EXPECT_EQ(chain_set(xs, xi, 2, jp, side)[xi] != 0, expect) << xi << ' ' << jp;
      }
  // Upper bound on Y(11) at x = -1 may borrow level-1 terms at x = 0.
  EXPECT_TRUE(chain_set(xs, 0, 2, 1, Side::upper)[1]);
}

TEST(Bounds, DefaultPopulationGoldens) {
  const auto rep = default_report();
  auto check = [&](Method m, std::size_t xi, double L, double U) {
    const auto* r = rep.find(m, true, 0b11, 0b00, xi);
    ASSERT_NE(r, nullptr);
    EXPECT_NEAR(r->b.L, L, 1e-7) << method_name(m) << " x#" << xi;
    EXPECT_NEAR(r->b.U, U, 1e-7) << method_name(m) << " x#" << xi;
  };
  check(Method::manski, 1, 0.021086416714, 0.566659493199);
  check(Method::z_only, 1, 0.141315867666, 0.566659493199);
  check(Method::z_and_x, 1, 0.141315867666, 0.566659493199);
  check(Method::z_and_x, 0, 0.123991157368, 0.320437181786);
  check(Method::z_and_x, 2, 0.121994417373, 0.326987160517);
}

TEST(Bounds, PopulationBoundsContainTheTruthAndNest) {
  const auto p = default_params();
  BoundsTarget t;  // every profile, every x
  const auto rep = compute_bounds(default_population().table, t, {});
  for (const auto& r : rep.rows) {
    const double truth = oracle::true_asf(p, r.d, p.x_support[r.xi]);
    EXPECT_LE(r.b.L, truth + 1e-9) << method_name(r.method);
    EXPECT_GE(r.b.U, truth - 1e-9) << method_name(r.method);
  }
  for (Profile d = 0; d < 4; ++d)
    for (std::size_t xi = 0; xi < 3; ++xi) {
      const auto& m = rep.find(Method::manski, false, d, 0, xi)->b;
      const auto& z = rep.find(Method::z_only, false, d, 0, xi)->b;
      const auto& zx = rep.find(Method::z_and_x, false, d, 0, xi)->b;
      EXPECT_GE(z.L, m.L - 1e-12);
      EXPECT_LE(z.U, m.U + 1e-12);
      EXPECT_GE(zx.L, z.L - 1e-12);
      EXPECT_LE(zx.U, z.U + 1e-12);
    }
}

TEST(Bounds, DepthCapZeroReproducesZOnly) {
  BoundsOptions o;
  o.depth_cap = 0;
  const auto rep = default_report(o);
  for (std::size_t xi = 0; xi < 3; ++xi) {
    const auto& a = rep.find(Method::z_only, true, 0b11, 0b00, xi)->b;
    const auto& b = rep.find(Method::z_and_x, true, 0b11, 0b00, xi)->b;
    EXPECT_DOUBLE_EQ(a.L, b.L);
    EXPECT_DOUBLE_EQ(a.U, b.U);
  }
}

// Pairing both profiles at the same z gives up the freedom to pick the best z
// for each side separately, so without w the joint interval can only widen.
TEST(Bounds, JointAteContainsSeparate) {
  BoundsOptions sep, joint;
  sep.joint_ate = false;
  joint.joint_ate = true;
  const auto a = default_report(sep);
  const auto b = default_report(joint);
  for (std::size_t xi = 0; xi < 3; ++xi) {
    const auto& s = a.find(Method::z_and_x, true, 0b11, 0b00, xi)->b;
    const auto& j = b.find(Method::z_and_x, true, 0b11, 0b00, xi)->b;
    EXPECT_LE(j.L, s.L + 1e-12);
    EXPECT_GE(j.U, s.U - 1e-12);
  }
}

// A huge dead band zeroes every sign; both orientations then apply and the
// intersected bounds can only tighten, possibly to an empty interval.
TEST(Bounds, WideDeadBandUsesBothOrientations) {
  BoundsOptions o;
  o.tau = 10.0;
  const auto rep = default_report(o);
  const auto base = default_report();
  for (const auto& r : rep.rows) EXPECT_EQ(rep.h_sign[r.xi], 0);
  for (std::size_t xi = 0; xi < 3; ++xi) {
    const auto& wide = rep.find(Method::z_only, true, 0b11, 0b00, xi)->b;
    const auto& ref = base.find(Method::z_only, true, 0b11, 0b00, xi)->b;
    EXPECT_GE(wide.L, ref.L - 1e-12);
    EXPECT_LE(wide.U, ref.U + 1e-12);
  }
  const bool empty = std::any_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.b.L > r.b.U + 1e-12; });
  const bool flagged = std::any_of(rep.diagnostics.begin(), rep.diagnostics.end(),
                                   [](const auto& m) { return m.find("L > U") != std::string::npos; });
  EXPECT_EQ(empty, flagged);
}

TEST(Bounds, MethodFilterAndCsv) {
  BoundsOptions o;
  o.methods = {Method::manski};
  const auto rep = default_report(o);
  EXPECT_EQ(rep.rows.size(), 3u);
  std::stringstream ss;
  rep.write_csv(ss);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "target,method,L,U,H_sign,n_effective");
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    EXPECT_NE(line.find(",manski,"), std::string::npos);
  }
  EXPECT_EQ(rows, 3);
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("rows"));
}

TEST(Bounds, WiderOutcomeRangeWidensManski) {
  BoundsOptions o;
  o.methods = {Method::manski};
  o.y = {0.0, 2.0};
  const auto wide = default_report(o);
  const auto narrow = default_report();
  const auto& w = wide.find(Method::manski, true, 0b11, 0b00, 1)->b;
  const auto& n = narrow.find(Method::manski, true, 0b11, 0b00, 1)->b;
  EXPECT_GT(w.U - w.L, n.U - n.L);
}

TEST(Bounds, SampleBoundsApproachPopulation) {
  const auto ds = generate(default_params(), 400000, 12);
  BoundsTarget t;
  t.ate = {{0b11, 0b00}};
  t.x = {1};
  const auto est = compute_bounds(tabulate(ds), t, {});
  const auto pop = default_report();
  for (Method m : {Method::manski, Method::z_only}) {
    const auto& a = est.find(m, true, 0b11, 0b00, 1)->b;
    const auto& b = pop.find(m, true, 0b11, 0b00, 1)->b;
    EXPECT_NEAR(a.L, b.L, 0.02);
    EXPECT_NEAR(a.U, b.U, 0.02);
  }
  // H~ values near zero can flip sign in a sample and admit extra x pairs, so
  // z-and-x is only required to stay inside the population z-only interval.
  const auto& zx = est.find(Method::z_and_x, true, 0b11, 0b00, 1)->b;
  const auto& zo = pop.find(Method::z_only, true, 0b11, 0b00, 1)->b;
  EXPECT_GE(zx.L, zo.L - 0.02);
  EXPECT_LE(zx.U, zo.U + 0.02);
}

TEST(Bootstrap, LevelZeroIsThePointEstimate) {
  const auto ds = generate(default_params(), 20000, 6);
  BootstrapTarget bt;
  const auto ci = bootstrap_ci(ds, bt, 0.0, 100, 1);
  EXPECT_DOUBLE_EQ(ci.lo, ci.L_hat);
  EXPECT_DOUBLE_EQ(ci.hi, ci.U_hat);
  EXPECT_THROW(bootstrap_ci(ds, bt, 0.95, 10, 1), std::invalid_argument);
}

TEST(Bootstrap, IntervalWrapsTheEstimateAndIsSeeded) {
  const auto ds = generate(default_params(), 20000, 6);
  BootstrapTarget bt;
  const auto a = bootstrap_ci(ds, bt, 0.9, 200, 3);
  const auto b = bootstrap_ci(ds, bt, 0.9, 200, 3);
  EXPECT_LT(a.lo, a.L_hat);
  EXPECT_GT(a.hi, a.U_hat);
  EXPECT_DOUBLE_EQ(a.lo, b.lo);
  EXPECT_DOUBLE_EQ(a.hi, b.hi);
  const auto wider = bootstrap_ci(ds, bt, 0.99, 200, 3);
  EXPECT_LE(wider.lo, a.lo);
  EXPECT_GE(wider.hi, a.hi);
}

// The set itself does not shrink with n, so the rate is read off the margin
// the interval adds around the estimated endpoints.
TEST(Bootstrap, MarginShrinksAtRootN) {
  BootstrapTarget bt;
  std::vector<double> margin;
  for (std::size_t n : {10000u, 40000u, 160000u}) {
    const auto ci = bootstrap_ci(generate(default_params(), n, 31), bt, 0.9, 200, 8);
    margin.push_back((ci.L_hat - ci.lo) + (ci.hi - ci.U_hat));
  }
  for (std::size_t k = 1; k < margin.size(); ++k) {
    const double ratio = margin[k - 1] / margin[k];
    EXPECT_GT(ratio, 1.4) << k;
    EXPECT_LT(ratio, 2.6) << k;
  }
}
