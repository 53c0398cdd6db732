#include "ategb/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ategb/parallel.hpp"

namespace ategb {

CondTable::CondTable(int s_count, std::vector<std::vector<double>> z_support, std::vector<double> x_support,
                     std::vector<double> w_support)
    : s_count_(s_count),
      z_support_(std::move(z_support)),
      x_support_(std::move(x_support)),
      w_support_(std::move(w_support)) {
  if (z_support_.empty() || x_support_.empty()) throw std::invalid_argument("table supports must be nonempty");
  CellStats blank;
  blank.p.assign(profile_count(s_count_), 0.0);
  blank.py.assign(profile_count(s_count_), 0.0);
  cells_.assign(w_count() * z_count() * x_count(), blank);
}

std::size_t CondTable::x_index(double x) const {
  const auto it = std::find(x_support_.begin(), x_support_.end(), x);
  if (it == x_support_.end()) throw std::out_of_range("x value not in support");
  return static_cast<std::size_t>(it - x_support_.begin());
}

double CondTable::total() const {
  double t = 0.0;
  for (const auto& c : cells_) t += c.n;
  return t;
}

double CondTable::z_mass(std::size_t zi, std::size_t wi) const {
  double m = 0.0;
  for (std::size_t xi = 0; xi < x_count(); ++xi) m += cell(zi, xi, wi).n;
  return m;
}

double CondTable::propensity(Profile d, std::size_t zi, std::size_t wi) const {
  double num = 0.0, den = 0.0;
  for (std::size_t xi = 0; xi < x_count(); ++xi) {
    const auto& c = cell(zi, xi, wi);
    if (!c.defined) continue;
    num += c.n * c.p[d];
    den += c.n;
  }
  return den > 0.0 ? num / den : 0.0;
}

CondTable tabulate(const Dataset& ds) {
  CondTable ct(ds.s_count, ds.z_support, ds.x_support, ds.w_support);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& c = ct.cell(ds.zi[i], ds.xi[i], ds.has_w() ? ds.wi[i] : 0);
    c.n += 1.0;
    c.p[ds.d[i]] += 1.0;
    if (ds.y[i]) c.py[ds.d[i]] += 1.0;
  }
  for (std::size_t wi = 0; wi < ct.w_count(); ++wi)
    for (std::size_t zi = 0; zi < ct.z_count(); ++zi)
      for (std::size_t xi = 0; xi < ct.x_count(); ++xi) {
        auto& c = ct.cell(zi, xi, wi);
        c.defined = c.n > 0.0;
        if (!c.defined) continue;
        for (auto& v : c.p) v /= c.n;
        for (auto& v : c.py) v /= c.n;
      }
  return ct;
}

std::optional<double> h(const CondTable& ct, std::size_t zi, std::size_t zpi, std::size_t xi, std::size_t wi) {
  const auto& a = ct.cell(zi, xi, wi);
  const auto& b = ct.cell(zpi, xi, wi);
  if (!a.defined || !b.defined) return std::nullopt;
  double v = 0.0;
  for (std::size_t d = 0; d < a.py.size(); ++d) v += a.py[d] - b.py[d];
  return v;
}

std::optional<double> h_profile(const CondTable& ct, Profile d, std::size_t zi, std::size_t zpi, std::size_t xi,
                                std::size_t wi) {
  const auto& a = ct.cell(zi, xi, wi);
  const auto& b = ct.cell(zpi, xi, wi);
  if (!a.defined || !b.defined) return std::nullopt;
  return a.py[d] - b.py[d];
}

std::optional<double> h_tilde(const CondTable& ct, std::size_t zi, std::size_t zpi,
                              const std::vector<std::size_t>& x_tilde, std::size_t wi) {
  if (static_cast<int>(x_tilde.size()) != ct.s_count() + 1)
    throw std::invalid_argument("x_tilde needs S+1 entries");
  double v = 0.0;
  for (Profile d = 0; d < profile_count(ct.s_count()); ++d) {
    const auto part = h_profile(ct, d, zi, zpi, x_tilde[static_cast<std::size_t>(entrants(d))], wi);
    if (!part) return std::nullopt;
    v += *part;
  }
  return v;
}

std::string pair_mode_name(PairMode m) { return m == PairMode::oracle ? "oracle" : "eq-star"; }

PairMode parse_pair_mode(const std::string& text) {
  if (text == "oracle") return PairMode::oracle;
  if (text == "eq-star" || text == "eq_star" || text == "eqstar") return PairMode::eq_star;
  throw std::invalid_argument("unknown eq mode: " + text);
}

bool eq_star_holds(const CondTable& ct, std::size_t zi, std::size_t zpi, std::size_t wi) {
  const int S = ct.s_count();
  for (int j = 2; j <= S; ++j)
    for (Profile hi : profiles_with_count(S, j))
      for (Profile lo : profiles_with_count(S, j - 2))
        if (!(ct.propensity(hi, zi, wi) + ct.propensity(lo, zpi, wi) > eq_star_threshold)) return false;
  return true;
}

namespace {

bool propensity_ordered_table(const CondTable& ct, std::size_t zi, std::size_t zpi, std::size_t wi) {
  const int S = ct.s_count();
  const Profile all = profile_count(S) - 1;
  const auto& z = ct.z_support()[zi];
  const auto& zp = ct.z_support()[zpi];
  if (ct.z_mass(zi, wi) <= 0.0 || ct.z_mass(zpi, wi) <= 0.0) return false;
  const double top = ct.propensity(all, zi, wi);
  for (int s = 0; s < S; ++s) {
    const auto us = static_cast<std::size_t>(s);
    if (z[us] == zp[us]) return false;
    auto alt = z;
    alt[us] = zp[us];
    const auto it = std::find(ct.z_support().begin(), ct.z_support().end(), alt);
    const bool have_alt = it != ct.z_support().end() && ct.z_mass(static_cast<std::size_t>(it - ct.z_support().begin()), wi) > 0.0;
    const std::size_t cmp = have_alt ? static_cast<std::size_t>(it - ct.z_support().begin()) : zpi;
    if (!(top > ct.propensity(all, cmp, wi))) return false;
  }
  return true;
}

}  // namespace

std::vector<ZPair> eq_pairs(const CondTable& ct, PairMode mode, const GameSpec* game, std::size_t wi,
                            std::vector<PairDiagnostic>* diagnostics) {
  if (mode == PairMode::oracle) {
    if (!game) throw std::invalid_argument("oracle eq mode requires a game spec");
    if (game->s_count() != ct.s_count() || game->z_support() != ct.z_support())
      throw std::invalid_argument("game spec does not match the table's instrument support");
  }
  std::vector<ZPair> out;
  const double total = [&] {
    double t = 0.0;
    for (std::size_t zi = 0; zi < ct.z_count(); ++zi) t += ct.z_mass(zi, wi);
    return t;
  }();
  for (std::size_t zi = 0; zi < ct.z_count(); ++zi)
    for (std::size_t zpi = 0; zpi < ct.z_count(); ++zpi) {
      if (zi == zpi) continue;
      PairDiagnostic diag;
      diag.z = zi;
      diag.zp = zpi;
      diag.ordered = propensity_ordered_table(ct, zi, zpi, wi);
      if (game) diag.eq = check_assumption_eq(*game, zi, zpi);
      diag.eq_star = eq_star_holds(ct, zi, zpi, wi);
      const bool eq_ok = mode == PairMode::oracle ? diag.eq.value_or(false) : diag.eq_star;
      diag.admitted = diag.ordered && eq_ok;
      if (diag.admitted) out.push_back({zi, zpi, ct.z_mass(zi, wi) / total * ct.z_mass(zpi, wi) / total});
      if (diagnostics && (diag.ordered || diag.admitted)) diagnostics->push_back(diag);
    }
  return out;
}

double big_h(const CondTable& ct, const std::vector<ZPair>& pairs, std::size_t xi, std::size_t wi) {
  if (pairs.empty()) throw std::invalid_argument("big_h needs at least one admissible pair");
  double num = 0.0, den = 0.0;
  for (const auto& pr : pairs) {
    num += pr.weight * h(ct, pr.z, pr.zp, xi, wi).value_or(0.0);
    den += pr.weight;
  }
  return num / den;
}

int sign_with_band(double v, double tau) {
  if (std::abs(v) <= tau) return 0;
  return v > 0.0 ? 1 : -1;
}

void XSets::reset(int s, std::size_t nx) {
  s_count = s;
  x_count = nx;
  entries.clear();
  member_.assign(static_cast<std::size_t>(std::max(s, 1)) * 3 * nx * nx, 0);
}

bool XSets::insert(const XSetEntry& e) {
  auto& m = member_[slot(e.j, e.sign, e.xa, e.xb)];
  if (m) return false;
  m = 1;
  entries.push_back(e);
  return true;
}

double XSets::h_tilde(const std::vector<std::size_t>& x_tilde) const {
  double v = 0.0;
  for (int j = 0; j <= s_count; ++j) v += level_h[static_cast<std::size_t>(j)][x_tilde[static_cast<std::size_t>(j)]];
  return v;
}

XSets build_x_sets(const CondTable& ct, const std::vector<ZPair>& pairs, int depth_cap, double tau, std::size_t wi) {
  const int S = ct.s_count();
  const std::size_t nx = ct.x_count();
  XSets xs;
  xs.reset(S, nx);
  xs.level_h.assign(static_cast<std::size_t>(S + 1), std::vector<double>(nx, 0.0));
  xs.big_h.assign(nx, 0.0);
  if (pairs.empty()) {
    xs.fixpoint = true;
    return xs;
  }

  // H~(x~) = sum_j G_j(x_j) with G_j the pair average of sum_{d in D^j} h_d.
  double wsum = 0.0;
  for (const auto& pr : pairs) wsum += pr.weight;
  for (const auto& pr : pairs)
    for (std::size_t xi = 0; xi < nx; ++xi)
      for (Profile d = 0; d < profile_count(S); ++d)
        xs.level_h[static_cast<std::size_t>(entrants(d))][xi] +=
            pr.weight / wsum * h_profile(ct, d, pr.z, pr.zp, xi, wi).value_or(0.0);
  for (std::size_t xi = 0; xi < nx; ++xi)
    for (int j = 0; j <= S; ++j) xs.big_h[xi] += xs.level_h[static_cast<std::size_t>(j)][xi];

  for (std::size_t xi = 0; xi < nx; ++xi) {
    const int sg = sign_with_band(xs.big_h[xi], tau);
    for (int j = 1; j <= S; ++j)
      xs.insert({j, sg, xi, xi, 0, std::vector<std::size_t>(static_cast<std::size_t>(S + 1), xi), xs.big_h[xi]});
  }

  const std::size_t combos = [&] {
    std::size_t c = 1;
    for (int j = 0; j <= S; ++j) c *= nx;
    return c;
  }();
  std::vector<std::size_t> xt(static_cast<std::size_t>(S + 1));
  int t = 0;
  while (depth_cap < 0 || t < depth_cap) {
    const XSets prev = xs;
    bool changed = false;
    ++t;
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t rest = code;
      for (int j = 0; j <= S; ++j) {
        xt[static_cast<std::size_t>(j)] = rest % nx;
        rest /= nx;
      }
      const double v = xs.h_tilde(xt);
      const int sg = sign_with_band(v, tau);
      int missing = 0, missing_j = 0;
      for (int k = 1; k <= S && missing < 2; ++k)
        if (!prev.contains(k, -sg, xt[static_cast<std::size_t>(k)], xt[static_cast<std::size_t>(k - 1)])) {
          ++missing;
          missing_j = k;
        }
      if (missing >= 2) continue;
      for (int j = 1; j <= S; ++j) {
        if (missing == 1 && j != missing_j) continue;
        const std::size_t a = xt[static_cast<std::size_t>(j)], b = xt[static_cast<std::size_t>(j - 1)];
        if (xs.contains(j, sg, a, b)) continue;
        xs.insert({j, sg, a, b, t, xt, v});
        changed = true;
      }
    }
    if (!changed) {
      xs.fixpoint = true;
      --t;
      break;
    }
  }
  xs.depth = t;
  if (depth_cap >= 0 && t == depth_cap && !xs.fixpoint) {
    // Detect whether the cap happened to coincide with the fixpoint.
    XSets probe = build_x_sets(ct, pairs, -1, tau, wi);
    xs.fixpoint = probe.size() == xs.size();
  }
  return xs;
}

std::vector<char> chain_set(const XSets& xs, std::size_t xi, int j, int jp, Side side) {
  const std::size_t nx = xs.x_count;
  std::vector<char> cur(nx, 0);
  cur[xi] = 1;
  if (jp == j) return cur;
  const bool down = jp < j;
  // Allowed nonzero sign: upper bound reductions use -1, extensions +1;
  // the lower bound mirrors this. Sign 0 is always allowed.
  const int allowed = (side == Side::upper) == down ? -1 : 1;
  auto ok = [&](int k, std::size_t a, std::size_t b) {
    return xs.contains(k, allowed, a, b) || xs.contains(k, 0, a, b);
  };
  if (down) {
    for (int k = j; k > jp; --k) {
      std::vector<char> next(nx, 0);
      for (std::size_t a = 0; a < nx; ++a)
        if (cur[a])
          for (std::size_t b = 0; b < nx; ++b)
            if (ok(k, a, b)) next[b] = 1;
      cur.swap(next);
    }
  } else {
    for (int k = j + 1; k <= jp; ++k) {
      std::vector<char> next(nx, 0);
      for (std::size_t b = 0; b < nx; ++b)
        if (cur[b])
          for (std::size_t a = 0; a < nx; ++a)
            if (ok(k, a, b)) next[a] = 1;
      cur.swap(next);
    }
  }
  return cur;
}

ProfileBounds manski_bounds(const CondTable& ct, Profile d, std::size_t xi, std::size_t wi, YRange y) {
  ProfileBounds out;
  out.L = -std::numeric_limits<double>::infinity();
  out.U = std::numeric_limits<double>::infinity();
  for (std::size_t zi = 0; zi < ct.z_count(); ++zi) {
    const auto& c = ct.cell(zi, xi, wi);
    if (!c.defined) continue;
    const double lo = c.py[d] + y.lo * (1.0 - c.p[d]);
    const double hi = c.py[d] + y.hi * (1.0 - c.p[d]);
    if (lo > out.L) {
      out.L = lo;
      out.z_lower = zi;
    }
    if (hi < out.U) {
      out.U = hi;
      out.z_upper = zi;
    }
  }
  if (!out.z_lower) throw std::runtime_error("no defined cell at this x");
  return out;
}

namespace {

// Chain sets for every level, for one target level/side.
std::vector<std::vector<char>> chains_for(const XSets& xs, std::size_t xi, int j, Side side) {
  std::vector<std::vector<char>> out(static_cast<std::size_t>(xs.s_count + 1));
  for (int jp = 0; jp <= xs.s_count; ++jp)
    if (jp != j) out[static_cast<std::size_t>(jp)] = chain_set(xs, xi, j, jp, side);
  return out;
}

std::optional<double> bound_at(const CondTable& ct, Profile d, std::size_t zi, std::size_t xi,
                               const std::vector<std::vector<char>>& chains, Side side, std::size_t wi, YRange y) {
  const auto& c = ct.cell(zi, xi, wi);
  if (!c.defined) return std::nullopt;
  const int S = ct.s_count();
  const bool upper = side == Side::upper;
  const double range_term = upper ? y.hi : y.lo;
  double v = c.py[d];
  for (Profile dp = 0; dp < profile_count(S); ++dp) {
    if (dp == d) continue;
    if (is_reduction(dp, d) || is_extension(dp, d)) {
      const auto& chain = chains[static_cast<std::size_t>(entrants(dp))];
      std::optional<double> best;
      for (std::size_t xp = 0; xp < chain.size(); ++xp) {
        if (!chain[xp]) continue;
        const auto& cp = ct.cell(zi, xp, wi);
        if (!cp.defined) continue;
        const double m = cp.py[dp];
        if (!best || (upper ? m < *best : m > *best)) best = m;
      }
      v += best ? *best : range_term * c.p[dp];
    } else {
      v += range_term * c.p[dp];
    }
  }
  return v;
}

}  // namespace

std::optional<double> proposed_bound_at(const CondTable& ct, Profile d, std::size_t zi, std::size_t xi,
                                        const XSets& xs, Side side, std::size_t wi, YRange y) {
  return bound_at(ct, d, zi, xi, chains_for(xs, xi, entrants(d), side), side, wi, y);
}

ProfileBounds proposed_bounds(const CondTable& ct, Profile d, std::size_t xi, const XSets& xs, std::size_t wi,
                              YRange y) {
  const auto up = chains_for(xs, xi, entrants(d), Side::upper);
  const auto lo = chains_for(xs, xi, entrants(d), Side::lower);
  ProfileBounds out;
  out.L = -std::numeric_limits<double>::infinity();
  out.U = std::numeric_limits<double>::infinity();
  for (std::size_t zi = 0; zi < ct.z_count(); ++zi) {
    const auto u = bound_at(ct, d, zi, xi, up, Side::upper, wi, y);
    const auto l = bound_at(ct, d, zi, xi, lo, Side::lower, wi, y);
    if (u && *u < out.U) {
      out.U = *u;
      out.z_upper = zi;
    }
    if (l && *l > out.L) {
      out.L = *l;
      out.z_lower = zi;
    }
  }
  if (!out.z_lower) throw std::runtime_error("no defined cell at this x");
  return out;
}

ProfileBounds ate_bounds(const CondTable& ct, Profile d, Profile dt, std::size_t xi, const XSets& xs, bool joint,
                         std::size_t wi, YRange y) {
  if (!joint) {
    const auto a = proposed_bounds(ct, d, xi, xs, wi, y);
    const auto b = proposed_bounds(ct, dt, xi, xs, wi, y);
    return {a.L - b.U, a.U - b.L, a.z_lower, a.z_upper};
  }
  const auto du = chains_for(xs, xi, entrants(d), Side::upper);
  const auto dl = chains_for(xs, xi, entrants(d), Side::lower);
  const auto tu = chains_for(xs, xi, entrants(dt), Side::upper);
  const auto tl = chains_for(xs, xi, entrants(dt), Side::lower);
  ProfileBounds out;
  out.L = -std::numeric_limits<double>::infinity();
  out.U = std::numeric_limits<double>::infinity();
  for (std::size_t zi = 0; zi < ct.z_count(); ++zi) {
    const auto ud = bound_at(ct, d, zi, xi, du, Side::upper, wi, y);
    const auto ld = bound_at(ct, d, zi, xi, dl, Side::lower, wi, y);
    const auto ut = bound_at(ct, dt, zi, xi, tu, Side::upper, wi, y);
    const auto lt = bound_at(ct, dt, zi, xi, tl, Side::lower, wi, y);
    if (!ud || !lt) continue;
    if (*ud - *lt < out.U) {
      out.U = *ud - *lt;
      out.z_upper = zi;
    }
    if (*ld - *ut > out.L) {
      out.L = *ld - *ut;
      out.z_lower = zi;
    }
  }
  if (!out.z_lower) throw std::runtime_error("no defined cell at this x");
  return out;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::manski: return "manski";
    case Method::z_only: return "z-only";
    case Method::z_and_x: return "z-and-x";
  }
  return "manski";
}

Method parse_method(const std::string& text) {
  if (text == "manski") return Method::manski;
  if (text == "z-only" || text == "z_only" || text == "zonly") return Method::z_only;
  if (text == "z-and-x" || text == "z_and_x" || text == "zx") return Method::z_and_x;
  throw std::invalid_argument("unknown method: " + text);
}

const BoundsReport::Row* BoundsReport::find(Method m, bool is_ate, Profile d, Profile dt, std::size_t xi) const {
  for (const auto& r : rows)
    if (r.method == m && r.is_ate == is_ate && r.d == d && (!is_ate || r.dt == dt) && r.xi == xi) return &r;
  return nullptr;
}

namespace {

std::string target_label(const BoundsReport::Row& r, int S, double x) {
  std::ostringstream os;
  os << (r.is_ate ? "ate:" : "asf:") << profile_string(r.d, S);
  if (r.is_ate) os << '-' << profile_string(r.dt, S);
  os << "@x=" << x;
  return os.str();
}

nlohmann::json xsets_json(const XSets& xs, const std::vector<double>& xv) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : xs.entries) {
    std::vector<double> witness;
    for (auto i : e.witness) witness.push_back(xv[i]);
    entries.push_back({{"j", e.j}, {"sign", e.sign}, {"x_j", xv[e.xa]}, {"x_j_minus_1", xv[e.xb]},
                       {"depth", e.depth}, {"witness", witness}, {"h_tilde", e.h_tilde}});
  }
  return {{"depth", xs.depth}, {"fixpoint", xs.fixpoint}, {"entries", entries}};
}

}  // namespace

nlohmann::json BoundsReport::to_json() const {
  nlohmann::json j;
  j["s_count"] = s_count;
  j["x_support"] = x_support;
  j["z_support"] = z_support;
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json o{{"method", method_name(r.method)},
                     {"target", target_label(r, s_count, x_support[r.xi])},
                     {"L", r.b.L},
                     {"U", r.b.U},
                     {"n_effective", r.n_effective}};
    if (r.b.z_lower) o["z_lower"] = z_support[*r.b.z_lower];
    if (r.b.z_upper) o["z_upper"] = z_support[*r.b.z_upper];
    rj.push_back(o);
  }
  j["rows"] = rj;
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : pairs) {
    nlohmann::json o{{"z", z_support[p.z]}, {"z_prime", z_support[p.zp]}, {"ordered", p.ordered},
                     {"eq_star", p.eq_star}, {"admitted", p.admitted}};
    if (p.eq) o["eq"] = *p.eq;
    pj.push_back(o);
  }
  j["pairs"] = pj;
  j["H"] = big_h;
  j["H_sign"] = h_sign;
  if (z_only_sets) j["x_sets_z_only"] = xsets_json(*z_only_sets, x_support);
  if (z_and_x_sets) j["x_sets_z_and_x"] = xsets_json(*z_and_x_sets, x_support);
  j["fell_back_to_manski"] = fell_back_to_manski;
  j["diagnostics"] = diagnostics;
  return j;
}

void BoundsReport::write_csv(std::ostream& os) const {
  os << "target,method,L,U,H_sign,n_effective\n";
  const auto old = os.precision(12);
  for (const auto& r : rows)
    os << target_label(r, s_count, x_support[r.xi]) << ',' << method_name(r.method) << ',' << r.b.L << ',' << r.b.U
       << ',' << (r.xi < h_sign.size() ? h_sign[r.xi] : 0) << ',' << r.n_effective << '\n';
  os.precision(old);
}

BoundsReport compute_bounds(const CondTable& ct, const BoundsTarget& target, const BoundsOptions& opt) {
  const int S = ct.s_count();
  const std::size_t wi = target.w;
  if (wi >= ct.w_count()) throw std::out_of_range("w index out of range");
  BoundsReport rep;
  rep.s_count = S;
  rep.x_support = ct.x_support();
  rep.z_support = ct.z_support();

  std::vector<Profile> profiles = target.profiles;
  if (profiles.empty() && target.ate.empty())
    for (Profile d = 0; d < profile_count(S); ++d) profiles.push_back(d);
  std::vector<std::size_t> xis = target.x;
  if (xis.empty())
    for (std::size_t xi = 0; xi < ct.x_count(); ++xi) xis.push_back(xi);
  const bool joint = opt.joint_ate.value_or(ct.has_w());

  const auto pairs = eq_pairs(ct, opt.pair_mode, opt.game, wi, &rep.pairs);
  if (pairs.empty()) {
    rep.fell_back_to_manski = true;
    rep.diagnostics.push_back("no admissible (z, z') pair: proposed bounds degrade to Manski bounds");
  }
  rep.big_h.assign(ct.x_count(), 0.0);
  rep.h_sign.assign(ct.x_count(), 0);
  if (!pairs.empty())
    for (std::size_t xi = 0; xi < ct.x_count(); ++xi) {
      rep.big_h[xi] = big_h(ct, pairs, xi, wi);
      rep.h_sign[xi] = sign_with_band(rep.big_h[xi], opt.tau);
      if (rep.h_sign[xi] == 0 && rep.big_h[xi] != 0.0)
        rep.diagnostics.push_back("|H(x=" + std::to_string(ct.x_support()[xi]) + ")| within dead band; sign set to 0");
    }
  for (const auto& pr : pairs)
    for (std::size_t xi = 0; xi < ct.x_count(); ++xi)
      if (!h(ct, pr.z, pr.zp, xi, wi))
        rep.diagnostics.push_back("undefined h at an admissible pair for x=" + std::to_string(ct.x_support()[xi]) +
                                  "; treated as 0");

  auto n_eff = [&](std::size_t xi) {
    double n = 0.0;
    for (std::size_t zi = 0; zi < ct.z_count(); ++zi) n += ct.cell(zi, xi, wi).n;
    return n;
  };

  XSets empty_sets;
  empty_sets.reset(S, ct.x_count());
  for (Method m : opt.methods) {
    const XSets* xs = &empty_sets;
    if (m == Method::z_only) {
      rep.z_only_sets = build_x_sets(ct, pairs, 0, opt.tau, wi);
      xs = &*rep.z_only_sets;
    } else if (m == Method::z_and_x) {
      rep.z_and_x_sets = build_x_sets(ct, pairs, opt.depth_cap, opt.tau, wi);
      xs = &*rep.z_and_x_sets;
    }
    for (std::size_t xi : xis) {
      for (Profile d : profiles) {
        BoundsReport::Row r{m, false, d, 0, xi, {}, n_eff(xi)};
        r.b = m == Method::manski ? manski_bounds(ct, d, xi, wi, opt.y) : proposed_bounds(ct, d, xi, *xs, wi, opt.y);
        rep.rows.push_back(r);
      }
      for (const auto& [d, dt] : target.ate) {
        BoundsReport::Row r{m, true, d, dt, xi, {}, n_eff(xi)};
        if (m == Method::manski) {
          const auto a = manski_bounds(ct, d, xi, wi, opt.y);
          const auto b = manski_bounds(ct, dt, xi, wi, opt.y);
          r.b = {a.L - b.U, a.U - b.L, a.z_lower, a.z_upper};
        } else {
          r.b = ate_bounds(ct, d, dt, xi, *xs, joint, wi, opt.y);
        }
        rep.rows.push_back(r);
      }
    }
  }
  for (const auto& r : rep.rows)
    if (r.b.L > r.b.U + 1e-12)
      rep.diagnostics.push_back("empty bound interval (L > U) for " + target_label(r, S, ct.x_support()[r.xi]) +
                                " under " + method_name(r.method) + ": model assumptions rejected by the data");
  return rep;
}

namespace {

double empirical_quantile(std::vector<double> v, double level) {
  if (v.empty() || level <= 0.0) return 0.0;
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(v.size())));
  return v[std::min(v.size(), std::max<std::size_t>(k, 1)) - 1];
}

}  // namespace

ConfidenceInterval bootstrap_ci(const Dataset& ds, const BootstrapTarget& target, double level, int reps,
                                std::uint64_t seed, const BoundsOptions& opt) {
  if (reps < 100) throw std::invalid_argument("bootstrap needs reps >= 100");
  if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("level must be in [0,1)");
  BoundsOptions o = opt;
  o.methods = {target.method};
  auto point = [&](const Dataset& data) {
    const CondTable ct = tabulate(data);
    BoundsTarget t;
    t.x = {ct.x_index(target.x)};
    if (target.is_ate)
      t.ate = {{target.d, target.dt}};
    else
      t.profiles = {target.d};
    const auto rep = compute_bounds(ct, t, o);
    return rep.rows.front().b;
  };
  const auto hat = point(ds);
  ConfidenceInterval ci{hat.L, hat.U, hat.L, hat.U, reps};
  if (level == 0.0) return ci;

  std::vector<double> dev_l(static_cast<std::size_t>(reps)), dev_u(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    std::vector<std::size_t> rows(ds.size());
    for (auto& r : rows) r = pick(rng);
    const auto star = point(ds.subset(rows));
    dev_l[b] = std::abs(star.L - hat.L);
    dev_u[b] = std::abs(star.U - hat.U);
  });
  ci.lo = hat.L - empirical_quantile(dev_l, level);
  ci.hi = hat.U + empirical_quantile(dev_u, level);
  return ci;
}

}  // namespace ategb
