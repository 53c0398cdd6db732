#include "ategb/oracle.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <boost/random/sobol.hpp>

#include "ategb/mvn.hpp"
#include "ategb/parallel.hpp"

namespace ategb::oracle {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Latent entry cutoffs: player s enters iff v_s <= cut(s, d_{-s}).
struct Cutoffs {
  int S = 0;
  std::vector<std::vector<double>> by_player;  // [s][full profile mask], bit s ignored

  double operator()(int s, Profile d) const {
    return by_player[static_cast<std::size_t>(s)][d & ~(1u << s)];
  }
};

Cutoffs cutoffs(const SimParams& p, const std::vector<double>& z) {
  Cutoffs c;
  c.S = p.s_count;
  c.by_player.assign(static_cast<std::size_t>(p.s_count), std::vector<double>(profile_count(p.s_count)));
  for (int s = 0; s < p.s_count; ++s)
    for (Profile d = 0; d < profile_count(p.s_count); ++d) {
      double idx = p.payoff.gamma[static_cast<std::size_t>(s)] * z[static_cast<std::size_t>(s)];
      for (int t = 0; t < p.s_count; ++t)
        if (t != s && ((d >> t) & 1u)) idx += p.payoff.delta[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
      if (p.payoff.link == Link::logistic) idx = mvn::quantile(1.0 / (1.0 + std::exp(-idx)));
      c.by_player[static_cast<std::size_t>(s)][d] = idx;
    }
  return c;
}

std::vector<Profile> fixed_points(const Cutoffs& c, const double* v) {
  std::vector<Profile> out;
  for (Profile d = 0; d < profile_count(c.S); ++d) {
    bool ok = true;
    for (int s = 0; s < c.S && ok; ++s) ok = ((d >> s) & 1u) == (v[s] <= c(s, d) ? 1u : 0u);
    if (ok) out.push_back(d);
  }
  return out;
}

Profile priority(const std::vector<Profile>& eqs, int S, int first) {
  Profile best = eqs.front();
  auto better = [&](Profile a, Profile b) {  // a preferred over b
    if (((a >> first) & 1u) != ((b >> first) & 1u)) return ((a >> first) & 1u) > ((b >> first) & 1u);
    for (int s = 0; s < S; ++s) {
      if (s == first) continue;
      if (((a >> s) & 1u) != ((b >> s) & 1u)) return ((a >> s) & 1u) > ((b >> s) & 1u);
    }
    return false;
  };
  for (Profile d : eqs)
    if (better(d, best)) best = d;
  return best;
}

// Expected selection weight of each equilibrium (the rule's randomization integrated out).
std::vector<std::pair<Profile, double>> selection_weights(const std::vector<Profile>& eqs, int S,
                                                          const SelectionRule& rule) {
  if (eqs.empty()) throw std::runtime_error("oracle: region without a pure-strategy equilibrium");
  if (eqs.size() == 1) return {{eqs.front(), 1.0}};
  const int second = std::min(1, S - 1);
  switch (rule.kind) {
    case SelectionRule::Kind::uniform: {
      std::vector<std::pair<Profile, double>> out;
      for (Profile d : eqs) out.emplace_back(d, 1.0 / static_cast<double>(eqs.size()));
      return out;
    }
    case SelectionRule::Kind::player1: return {{priority(eqs, S, 0), 1.0}};
    case SelectionRule::Kind::player2: return {{priority(eqs, S, second), 1.0}};
    case SelectionRule::Kind::mixture: {
      const Profile a = priority(eqs, S, 0), b = priority(eqs, S, second);
      if (a == b) return {{a, 1.0}};
      return {{a, rule.q}, {b, 1.0 - rule.q}};
    }
  }
  return {};
}

CondTable empty_population_table(const SimParams& p) {
  CondTable ct(p.s_count, p.z_support, p.x_support, p.w_support);
  for (std::size_t wi = 0; wi < ct.w_count(); ++wi)
    for (std::size_t zi = 0; zi < ct.z_count(); ++zi)
      for (std::size_t xi = 0; xi < ct.x_count(); ++xi) {
        auto& c = ct.cell(zi, xi, wi);
        c.n = p.z_probs[zi] * p.x_probs[xi] * (p.has_w() ? p.w_probs[wi] : 1.0);
        c.defined = c.n > 0.0;
      }
  return ct;
}

// Copies w = 0 cells to the other w values (W is independent of everything).
void replicate_w(CondTable& ct) {
  for (std::size_t wi = 1; wi < ct.w_count(); ++wi)
    for (std::size_t zi = 0; zi < ct.z_count(); ++zi)
      for (std::size_t xi = 0; xi < ct.x_count(); ++xi) {
        auto& c = ct.cell(zi, xi, wi);
        c.p = ct.cell(zi, xi, 0).p;
        c.py = ct.cell(zi, xi, 0).py;
      }
}

PopulationTable analytic_two_player(const SimParams& p, const SelectionRule& rule) {
  PopulationTable out;
  out.path = Path::analytic;
  out.tolerance = 1e-9;
  out.table = empty_population_table(p);
  const auto& R = p.correlation;
  const double r01 = R(0, 1), r02 = R(0, 2), r12 = R(1, 2);

  for (std::size_t zi = 0; zi < p.z_support.size(); ++zi) {
    const Cutoffs c = cutoffs(p, p.z_support[zi]);
    std::array<std::vector<double>, 2> edges;
    for (int s = 0; s < 2; ++s) {
      auto& e = edges[static_cast<std::size_t>(s)];
      const Profile other = 1u << (1 - s);
      e = {-inf, c(s, 0), c(s, other), inf};
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    auto mid = [](double lo, double hi) {
      if (lo == -inf) return hi - 1.0;
      if (hi == inf) return lo + 1.0;
      return 0.5 * (lo + hi);
    };
    // Mass of each profile per V-cell, and the cells themselves.
    struct VCell {
      double l1, u1, l2, u2;
      std::vector<std::pair<Profile, double>> weights;
    };
    std::vector<VCell> vcells;
    for (std::size_t a = 0; a + 1 < edges[0].size(); ++a)
      for (std::size_t b = 0; b + 1 < edges[1].size(); ++b) {
        const double v[2] = {mid(edges[0][a], edges[0][a + 1]), mid(edges[1][b], edges[1][b + 1])};
        vcells.push_back({edges[0][a], edges[0][a + 1], edges[1][b], edges[1][b + 1],
                          selection_weights(fixed_points(c, v), 2, rule)});
      }

    std::vector<double> prop(4, 0.0);
    for (const auto& vc : vcells) {
      const double mass = mvn::bvn_cdf(vc.u1, vc.u2, r12) - mvn::bvn_cdf(vc.l1, vc.u2, r12) -
                          mvn::bvn_cdf(vc.u1, vc.l2, r12) + mvn::bvn_cdf(vc.l1, vc.l2, r12);
      for (const auto& [d, w] : vc.weights) prop[d] += w * mass;
    }

    std::map<std::tuple<double, double, double>, double> memo;
    auto F = [&](double a, double b1, double b2) {
      const auto key = std::make_tuple(a, b1, b2);
      if (auto it = memo.find(key); it != memo.end()) return it->second;
      const double v = mvn::tvn_cdf(a, b1, b2, r01, r02, r12);
      memo.emplace(key, v);
      return v;
    };
    for (std::size_t xi = 0; xi < p.x_support.size(); ++xi) {
      std::vector<double> py(4, 0.0);
      for (const auto& vc : vcells)
        for (const auto& [d, w] : vc.weights) {
          const double a = p.mu_at(d, p.x_support[xi]);
          const double mass = F(a, vc.u1, vc.u2) - F(a, vc.l1, vc.u2) - F(a, vc.u1, vc.l2) + F(a, vc.l1, vc.l2);
          py[d] += w * mass;
        }
      auto& cell = out.table.cell(zi, xi, 0);
      cell.p = prop;
      cell.py = py;
    }
  }
  replicate_w(out.table);
  return out;
}

PopulationTable qmc_any(const SimParams& p, const SelectionRule& rule, const PopulationOptions& opt) {
  const int S = p.s_count;
  const int dim = S + 1;
  const std::size_t nz = p.z_support.size(), nx = p.x_support.size(), nd = profile_count(S);
  const int reps = std::max(2, opt.qmc_replicates);
  const std::size_t per_rep = std::max<std::size_t>(1, opt.qmc_points / static_cast<std::size_t>(reps));
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(p.correlation).matrixL();

  std::vector<double> base(per_rep * static_cast<std::size_t>(dim));
  {
    boost::random::sobol gen(static_cast<std::size_t>(dim));
    const double scale = std::ldexp(1.0, -64);
    for (auto& x : base) x = static_cast<double>(gen()) * scale;
  }
  std::vector<Cutoffs> cuts;
  for (const auto& z : p.z_support) cuts.push_back(cutoffs(p, z));

  // est[rep] holds p (nz*nd) followed by py (nz*nx*nd).
  const std::size_t width = nz * nd + nz * nx * nd;
  std::vector<std::vector<double>> est(static_cast<std::size_t>(reps), std::vector<double>(width, 0.0));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
    std::mt19937_64 rng(derive_seed(opt.seed, rep));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(static_cast<std::size_t>(dim));
    for (auto& s : shift) s = unif(rng);
    auto& acc = est[rep];
    Eigen::VectorXd e(dim);
    for (std::size_t i = 0; i < per_rep; ++i) {
      for (int k = 0; k < dim; ++k) {
        double u = base[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] + shift[static_cast<std::size_t>(k)];
        u -= std::floor(u);
        e(k) = mvn::quantile(std::clamp(u, 1e-16, 1.0 - 1e-16));
      }
      const Eigen::VectorXd lat = chol * e;
      const double eps = lat(0);
      for (std::size_t zi = 0; zi < nz; ++zi) {
        const auto weights = selection_weights(fixed_points(cuts[zi], lat.data() + 1), S, rule);
        for (const auto& [d, w] : weights) {
          acc[zi * nd + d] += w;
          for (std::size_t xi = 0; xi < nx; ++xi)
            if (eps <= p.mu_at(d, p.x_support[xi])) acc[nz * nd + (zi * nx + xi) * nd + d] += w;
        }
      }
    }
    for (auto& v : acc) v /= static_cast<double>(per_rep);
  });

  PopulationTable out;
  out.path = Path::qmc;
  out.table = empty_population_table(p);
  out.se_p.assign(nz, std::vector<double>(nd));
  out.se_py.assign(nz, std::vector<std::vector<double>>(nx, std::vector<double>(nd)));
  std::vector<double> mean(width, 0.0), se(width, 0.0);
  for (std::size_t k = 0; k < width; ++k) {
    for (int r = 0; r < reps; ++r) mean[k] += est[static_cast<std::size_t>(r)][k];
    mean[k] /= reps;
    double ss = 0.0;
    for (int r = 0; r < reps; ++r) ss += std::pow(est[static_cast<std::size_t>(r)][k] - mean[k], 2);
    se[k] = std::sqrt(ss / (reps - 1) / reps);
  }
  for (std::size_t zi = 0; zi < nz; ++zi) {
    std::vector<double> prop(mean.begin() + static_cast<long>(zi * nd), mean.begin() + static_cast<long>((zi + 1) * nd));
    for (std::size_t d = 0; d < nd; ++d) out.se_p[zi][d] = se[zi * nd + d];
    for (std::size_t xi = 0; xi < nx; ++xi) {
      auto& cell = out.table.cell(zi, xi, 0);
      cell.p = prop;
      for (std::size_t d = 0; d < nd; ++d) {
        const std::size_t k = nz * nd + (zi * nx + xi) * nd + d;
        cell.py[d] = mean[k];
        out.se_py[zi][xi][d] = se[k];
      }
    }
  }
  double worst = 0.0;
  for (double s : se) worst = std::max(worst, s);
  out.tolerance = 4.0 * worst;
  replicate_w(out.table);
  return out;
}

}  // namespace

PopulationTable population_probs(const SimParams& p, const SelectionRule& selection, const PopulationOptions& opt) {
  p.validate();
  Path path = opt.path;
  if (path == Path::automatic) path = p.s_count == 2 ? Path::analytic : Path::qmc;
  if (path == Path::analytic) {
    if (p.s_count != 2) throw std::invalid_argument("analytic oracle path supports S = 2 only");
    return analytic_two_player(p, selection);
  }
  return qmc_any(p, selection, opt);
}

double true_asf(const SimParams& p, Profile d, double x) {
  if (d >= p.mu.size()) throw std::out_of_range("profile out of range");
  return mvn::cdf(p.mu_at(d, x));
}

double true_ate(const SimParams& p, Profile d, Profile dt, double x) { return true_asf(p, d, x) - true_asf(p, dt, x); }

double true_partial_asf(const SimParams& p, std::uint32_t fixed_mask, Profile fixed_values, double x,
                        const SelectionRule& selection, const PopulationOptions& opt) {
  p.validate();
  const Profile all = profile_count(p.s_count) - 1;
  fixed_mask &= all;
  // Outcome index of the forced profile, keyed by the realized equilibrium.
  SimParams q = p;
  for (Profile d = 0; d <= all; ++d) q.mu[d] = p.mu[(d & ~fixed_mask) | (fixed_values & fixed_mask)];
  q.x_support = {x};
  q.x_probs = {1.0};
  q.w_support.clear();
  q.w_probs.clear();
  Path path = opt.path == Path::automatic ? (p.s_count == 2 ? Path::analytic : Path::qmc) : opt.path;
  if (path == Path::analytic && p.s_count != 2) throw std::invalid_argument("analytic oracle path supports S = 2 only");
  const auto pop = path == Path::analytic ? analytic_two_player(q, selection) : qmc_any(q, selection, opt);
  double v = 0.0;
  for (std::size_t zi = 0; zi < p.z_support.size(); ++zi) {
    double s = 0.0;
    for (double m : pop.table.cell(zi, 0, 0).py) s += m;
    v += p.z_probs[zi] * s;
  }
  return v;
}

BoundsReport population_bounds(const SimParams& p, const SelectionRule& selection, const BoundsTarget& target,
                               const BoundsOptions& opt, const PopulationOptions& popt) {
  const auto pop = population_probs(p, selection, popt);
  BoundsOptions o = opt;
  GameSpec game = p.game();
  if (o.pair_mode == PairMode::oracle && !o.game) o.game = &game;
  if (o.game && o.game->z_support() != p.z_support) o.game = &game;
  o.y = {p.y_lo, p.y_hi};
  return compute_bounds(pop.table, target, o);
}

namespace {

double solve_iv(const Eigen::MatrixXd& qr, const Eigen::VectorXd& qy, int S) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(qr);
  if (!lu.isInvertible()) throw std::runtime_error("TSLS: singular instrument cross-moment matrix");
  const Eigen::VectorXd coef = lu.solve(qy);
  double sum = 0.0;
  for (int s = 1; s <= S; ++s) sum += coef(s);
  return sum;
}

}  // namespace

double tsls(const Dataset& ds) {
  const int S = ds.s_count;
  const int k = S + 2;
  Eigen::MatrixXd qr = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd qy = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd q(k), r(k);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = ds.x_support[ds.xi[i]];
    const auto& z = ds.z_support[ds.zi[i]];
    q(0) = 1.0;
    r(0) = 1.0;
    for (int s = 0; s < S; ++s) {
      q(s + 1) = z[static_cast<std::size_t>(s)];
      r(s + 1) = (ds.d[i] >> s) & 1u;
    }
    q(k - 1) = x;
    r(k - 1) = x;
    qr.noalias() += q * r.transpose();
    qy += q * static_cast<double>(ds.y[i]);
  }
  return solve_iv(qr, qy, S);
}

double tsls(const SimParams& p, const PopulationTable& pop) {
  const int S = p.s_count;
  const int k = S + 2;
  Eigen::MatrixXd qr = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd qy = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd q(k), r(k);
  const auto& ct = pop.table;
  for (std::size_t zi = 0; zi < ct.z_count(); ++zi)
    for (std::size_t xi = 0; xi < ct.x_count(); ++xi) {
      const auto& c = ct.cell(zi, xi, 0);
      const double m = p.z_probs[zi] * p.x_probs[xi];
      const double x = ct.x_support()[xi];
      q(0) = 1.0;
      r(0) = 1.0;
      for (int s = 0; s < S; ++s) {
        q(s + 1) = ct.z_support()[zi][static_cast<std::size_t>(s)];
        double ed = 0.0;
        for (Profile d = 0; d < profile_count(S); ++d)
          if ((d >> s) & 1u) ed += c.p[d];
        r(s + 1) = ed;
      }
      q(k - 1) = x;
      r(k - 1) = x;
      double ey = 0.0;
      for (double v : c.py) ey += v;
      qr.noalias() += m * q * r.transpose();
      qy += m * ey * q;
    }
  return solve_iv(qr, qy, S);
}

std::vector<double> game_profile_probs(const GameSpec& game, std::size_t zi, const SelectionRule& selection) {
  const int S = game.s_count();
  std::vector<std::vector<double>> edges(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    auto& e = edges[static_cast<std::size_t>(s)];
    e = {0.0, 1.0};
    for (std::uint32_t opp = 0; opp < (1u << (S - 1)); ++opp) e.push_back(game.nu(s, opp, zi));
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
  }
  std::vector<double> probs(profile_count(S), 0.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(S), 0);
  std::vector<double> u(static_cast<std::size_t>(S));
  while (true) {
    double vol = 1.0;
    for (int s = 0; s < S; ++s) {
      const auto& e = edges[static_cast<std::size_t>(s)];
      const std::size_t i = idx[static_cast<std::size_t>(s)];
      vol *= e[i + 1] - e[i];
      u[static_cast<std::size_t>(s)] = 0.5 * (e[i] + e[i + 1]);
    }
    std::vector<Profile> eqs;
    for (Profile d = 0; d < profile_count(S); ++d) {
      bool ok = true;
      for (int s = 0; s < S && ok; ++s) {
        const std::uint32_t opp = (d & ((1u << s) - 1u)) | ((d >> (s + 1)) << s);
        ok = ((d >> s) & 1u) == (u[static_cast<std::size_t>(s)] <= game.nu(s, opp, zi) ? 1u : 0u);
      }
      if (ok) eqs.push_back(d);
    }
    for (const auto& [d, w] : selection_weights(eqs, S, selection)) probs[d] += w * vol;
    int s = S - 1;
    for (; s >= 0; --s) {
      auto us = static_cast<std::size_t>(s);
      if (++idx[us] + 1 < edges[us].size()) break;
      idx[us] = 0;
    }
    if (s < 0) break;
  }
  return probs;
}

}  // namespace ategb::oracle
