#include "ategb/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace ategb {

std::string link_name(Link link) { return link == Link::gaussian ? "gaussian" : "logistic"; }

Link parse_link(const std::string& name) {
  if (name == "gaussian" || name == "probit") return Link::gaussian;
  if (name == "logistic" || name == "logit") return Link::logistic;
  throw std::invalid_argument("unknown link: " + name);
}

double apply_link(Link link, double index) {
  if (link == Link::gaussian) return boost::math::cdf(boost::math::normal_distribution<double>(), index);
  return 1.0 / (1.0 + std::exp(-index));
}

double LinearPayoff::index(int s, Profile d, std::span<const double> z) const {
  const auto us = static_cast<std::size_t>(s);
  double v = gamma[us] * z[us];
  for (std::size_t t = 0; t < gamma.size(); ++t)
    if (t != us && bit(d, static_cast<int>(t))) v += delta[us][t];
  return v;
}

namespace {

void check_support(int s_count, const std::vector<std::vector<double>>& zs) {
  if (zs.empty()) throw std::invalid_argument("z_support is empty");
  for (const auto& z : zs)
    if (static_cast<int>(z.size()) != s_count)
      throw std::invalid_argument("z_support vectors must have s_count coordinates");
  for (std::size_t a = 0; a < zs.size(); ++a)
    for (std::size_t b = a + 1; b < zs.size(); ++b)
      if (zs[a] == zs[b]) throw std::invalid_argument("z_support has duplicate vectors");
}

}  // namespace

GameSpec GameSpec::from_table(int s_count, Table table, std::vector<std::vector<double>> z_support) {
  if (s_count < 1 || s_count > max_players) throw std::invalid_argument("s_count out of range");
  check_support(s_count, z_support);
  if (static_cast<int>(table.size()) != s_count) throw std::invalid_argument("payoff table: wrong player count");
  const std::size_t opp_count = std::size_t{1} << (s_count - 1);
  for (const auto& per_s : table) {
    if (per_s.size() != opp_count) throw std::invalid_argument("payoff table: wrong opponent-profile count");
    for (const auto& per_opp : per_s)
      if (per_opp.size() != z_support.size()) throw std::invalid_argument("payoff table: wrong z count");
  }
  GameSpec g;
  g.s_count_ = s_count;
  g.table_ = std::move(table);
  g.z_support_ = std::move(z_support);
  return g;
}

GameSpec GameSpec::from_linear(int s_count, LinearPayoff payoff, std::vector<std::vector<double>> z_support) {
  if (s_count < 1 || s_count > max_players) throw std::invalid_argument("s_count out of range");
  const auto us = static_cast<std::size_t>(s_count);
  if (payoff.gamma.size() != us) throw std::invalid_argument("linear payoff: gamma needs s_count entries");
  if (payoff.delta.size() != us) throw std::invalid_argument("linear payoff: delta must be s_count x s_count");
  for (const auto& row : payoff.delta)
    if (row.size() != us) throw std::invalid_argument("linear payoff: delta must be s_count x s_count");
  check_support(s_count, z_support);
  Table table(us, std::vector<std::vector<double>>(std::size_t{1} << (s_count - 1),
                                                   std::vector<double>(z_support.size())));
  for (int s = 0; s < s_count; ++s)
    for (std::uint32_t opp = 0; opp < (1u << (s_count - 1)); ++opp)
      for (std::size_t zi = 0; zi < z_support.size(); ++zi) {
        const Profile d = with_player(opp, s, false);
        table[static_cast<std::size_t>(s)][opp][zi] = apply_link(payoff.link, payoff.index(s, d, z_support[zi]));
      }
  GameSpec g = from_table(s_count, std::move(table), std::move(z_support));
  g.linear_ = std::move(payoff);
  return g;
}

std::size_t GameSpec::z_index(std::span<const double> z) const {
  for (std::size_t i = 0; i < z_support_.size(); ++i)
    if (std::equal(z.begin(), z.end(), z_support_[i].begin(), z_support_[i].end())) return i;
  throw std::out_of_range("instrument vector is not in z_support");
}

ValidityReport check_validity(const GameSpec& g) {
  ValidityReport rep;
  const int S = g.s_count();
  const std::uint32_t opp_count = 1u << (S - 1);
  for (int s = 0; s < S; ++s)
    for (std::uint32_t opp = 0; opp < opp_count; ++opp)
      for (std::size_t zi = 0; zi < g.z_count(); ++zi) {
        const double v = g.nu(s, opp, zi);
        if (!(v > 0.0 && v <= 1.0)) {
          rep.in_range = false;
          std::ostringstream m;
          m << "range: nu^" << s + 1 << " = " << v << " outside (0,1] at z#" << zi;
          rep.messages.push_back(m.str());
        }
        for (int t = 0; t < S - 1; ++t) {
          if (opp & (1u << t)) continue;
          const double flipped = g.nu(s, opp | (1u << t), zi);
          if (!(flipped < v)) {
            rep.strategic_substitutes = false;
            std::ostringstream m;
            m << "SS: nu^" << s + 1 << " does not strictly decrease when opponent slot " << t + 1
              << " enters (opp mask " << opp << ", z#" << zi << "): " << v << " -> " << flipped;
            rep.messages.push_back(m.str());
          }
        }
      }
  for (int s = 0; s < S; ++s)
    for (std::size_t a = 0; a < g.z_count(); ++a)
      for (std::size_t b = a + 1; b < g.z_count(); ++b) {
        bool pos = false, neg = false;
        for (std::uint32_t opp = 0; opp < opp_count; ++opp) {
          const double diff = g.nu(s, opp, a) - g.nu(s, opp, b);
          pos = pos || diff > 0.0;
          neg = neg || diff < 0.0;
        }
        if (pos && neg) {
          rep.uniform_m1 = false;
          std::ostringstream m;
          m << "M1: sign of nu^" << s + 1 << "(., z#" << a << ") - nu^" << s + 1 << "(., z#" << b
            << ") varies across opponent profiles";
          rep.messages.push_back(m.str());
        }
      }
  return rep;
}

namespace {

void check_point(const GameSpec& g, std::size_t zi, std::span<const double> u) {
  if (zi >= g.z_count()) throw std::out_of_range("z index out of range");
  if (static_cast<int>(u.size()) != g.s_count()) throw std::invalid_argument("u has wrong dimension");
  for (double x : u)
    if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("u must lie in (0,1]^S");
}

}  // namespace

bool is_equilibrium(const GameSpec& g, std::size_t zi, std::span<const double> u, Profile d) {
  for (int s = 0; s < g.s_count(); ++s) {
    const bool enter = g.nu_at(s, d, zi) >= u[static_cast<std::size_t>(s)];
    if (enter != bit(d, s)) return false;
  }
  return true;
}

std::vector<Profile> enumerate_equilibria(const GameSpec& g, std::size_t zi, std::span<const double> u) {
  check_point(g, zi, u);
  std::vector<Profile> out;
  for (Profile d = 0; d < profile_count(g.s_count()); ++d)
    if (is_equilibrium(g, zi, u, d)) out.push_back(d);
  return out;
}

std::vector<Profile> enumerate_equilibria(const GameSpec& g, std::span<const double> z, std::span<const double> u) {
  return enumerate_equilibria(g, g.z_index(z), u);
}

RegionSet profile_region(const GameSpec& g, std::size_t zi, Profile d) {
  if (zi >= g.z_count()) throw std::out_of_range("z index out of range");
  std::vector<Interval> sides;
  for (int s = 0; s < g.s_count(); ++s) {
    const double v = g.nu_at(s, d, zi);
    Interval iv = bit(d, s) ? Interval{0.0, v} : Interval{v, 1.0};
    if (!(iv.lo < iv.hi)) return RegionSet::empty(g.s_count());
    sides.push_back(iv);
  }
  return RegionSet::of(Box(std::move(sides)));
}

std::vector<RegionSet> equilibrium_regions(const GameSpec& g, std::size_t zi) {
  if (!check_validity(g).ok()) throw std::invalid_argument("game spec fails SS/M1/range validity");
  std::vector<RegionSet> out;
  for (Profile d = 0; d < profile_count(g.s_count()); ++d) out.push_back(profile_region(g, zi, d));
  return out;
}

RegionSet cumulative_region(const GameSpec& g, std::size_t zi, int j) {
  if (j < 0 || j > g.s_count()) throw std::out_of_range("entrant count out of range");
  std::vector<Box> boxes;
  for (Profile d = 0; d < profile_count(g.s_count()); ++d)
    if (entrants(d) <= j) {
      const RegionSet r = profile_region(g, zi, d);
      boxes.insert(boxes.end(), r.boxes().begin(), r.boxes().end());
    }
  return RegionSet(g.s_count(), std::move(boxes));
}

RegionSet multiplicity_region(const GameSpec& g, std::size_t zi, int j) {
  if (j < 0 || j > g.s_count()) throw std::out_of_range("entrant count out of range");
  const auto level = profiles_with_count(g.s_count(), j);
  std::vector<RegionSet> regs;
  for (Profile d : level) regs.push_back(profile_region(g, zi, d));
  RegionSet out = RegionSet::empty(g.s_count());
  for (std::size_t a = 0; a < regs.size(); ++a)
    for (std::size_t b = a + 1; b < regs.size(); ++b) out = unite(out, intersect(regs[a], regs[b]));
  return out;
}

bool check_assumption_eq(const GameSpec& g, std::size_t zi, std::size_t zpi) {
  if (zi >= g.z_count() || zpi >= g.z_count()) throw std::out_of_range("z index out of range");
  const int S = g.s_count();
  for (int s = 0; s < S; ++s)
    for (int sp = 0; sp < S; ++sp) {
      if (sp == s) continue;
      for (Profile d = 0; d < profile_count(S); ++d) {
        if (bit(d, s) || bit(d, sp)) continue;  // d encodes d_{-(s,s')}
        const double lhs = g.nu_at(s, d, zpi);
        const double rhs = g.nu_at(s, d | (1u << sp), zi);
        if (lhs > rhs) return false;
      }
    }
  return true;
}

bool propensity_ordered(const GameSpec& g, std::size_t zi, std::size_t zpi) {
  const int S = g.s_count();
  const Profile all = profile_count(S) - 1;
  for (int s = 0; s < S; ++s)
    if (!(g.nu_at(s, all, zi) > g.nu_at(s, all, zpi))) return false;
  return true;
}

GameSpec random_game(std::mt19937_64& rng, const RandomGameOptions& opt) {
  const int S = opt.s_count;
  std::uniform_real_distribution<double> gamma_law(0.0, 2.0);
  std::uniform_real_distribution<double> delta_law(-1.0, 0.0);
  std::bernoulli_distribution three_points(0.5);
  LinearPayoff pay;
  pay.gamma.resize(static_cast<std::size_t>(S));
  pay.delta.assign(static_cast<std::size_t>(S), std::vector<double>(static_cast<std::size_t>(S), 0.0));
  for (auto& g : pay.gamma) {
    do g = 2.0 - gamma_law(rng);  // (0, 2]
    while (g <= 0.0);
  }
  auto draw_delta = [&] {
    double v;
    do v = delta_law(rng);  // [-1, 0)
    while (v >= 0.0);
    return v;
  };
  if (opt.per_entrant_delta) {
    std::vector<double> per(static_cast<std::size_t>(S));
    for (auto& v : per) v = draw_delta();
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < S; ++t)
        if (s != t) pay.delta[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = per[static_cast<std::size_t>(t)];
  } else {
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < S; ++t)
        if (s != t) pay.delta[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = draw_delta();
  }
  std::vector<std::vector<double>> coord(static_cast<std::size_t>(S));
  for (auto& c : coord) c = three_points(rng) ? std::vector<double>{-1.0, 0.0, 1.0} : std::vector<double>{-1.0, 1.0};
  std::vector<std::vector<double>> support{{}};
  for (const auto& c : coord) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : support)
      for (double v : c) {
        auto z = prefix;
        z.push_back(v);
        next.push_back(std::move(z));
      }
    support = std::move(next);
  }
  GameSpec g = GameSpec::from_linear(S, std::move(pay), std::move(support));
  if (!check_validity(g).strategic_substitutes) return random_game(rng, opt);  // reject
  return g;
}

}  // namespace ategb
