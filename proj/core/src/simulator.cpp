#include "ategb/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include "ategb/parallel.hpp"

namespace ategb {

std::string SelectionRule::name() const {
  switch (kind) {
    case Kind::uniform: return "uniform";
    case Kind::player1: return "player1";
    case Kind::player2: return "player2";
    case Kind::mixture: {
      std::ostringstream os;
      os << "mixture:" << q;
      return os.str();
    }
  }
  return "uniform";
}

SelectionRule SelectionRule::parse(const std::string& text) {
  if (text == "uniform" || text == "uniform-random") return uniform();
  if (text == "player1" || text == "always-player-1-monopoly") return player1();
  if (text == "player2" || text == "always-player-2-monopoly") return player2();
  const std::string prefix = "mixture:";
  if (text.rfind(prefix, 0) == 0) {
    const double q = std::stod(text.substr(prefix.size()));
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("mixture weight must be in [0,1]");
    return mixture(q);
  }
  throw std::invalid_argument("unknown selection rule: " + text);
}

std::vector<std::string> selection_rules() { return {"uniform", "player1", "player2", "mixture:q"}; }

Profile priority_pick(const std::vector<Profile>& eqs, int s_count, int first) {
  auto key = [&](Profile d) {
    std::uint32_t k = bit(d, first) ? 1u << (s_count - 1) : 0u;
    int pos = s_count - 2;
    for (int s = 0; s < s_count; ++s) {
      if (s == first) continue;
      if (bit(d, s)) k |= 1u << pos;
      --pos;
    }
    return k;
  };
  return *std::max_element(eqs.begin(), eqs.end(), [&](Profile a, Profile b) { return key(a) < key(b); });
}

GameSpec SimParams::game() const { return GameSpec::from_linear(s_count, payoff, z_support); }

namespace {

void check_probs(const std::vector<double>& probs, std::size_t n, const char* what) {
  if (probs.size() != n) throw std::invalid_argument(std::string(what) + ": probabilities do not match support");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

}  // namespace

void SimParams::validate() const {
  if (s_count < 1 || s_count > max_players) throw std::invalid_argument("s_count out of range");
  const auto S = static_cast<std::size_t>(s_count);
  if (mu.size() != profile_count(s_count)) throw std::invalid_argument("outcome_index needs one entry per profile");
  if (payoff.gamma.size() != S || payoff.delta.size() != S)
    throw std::invalid_argument("payoff gamma/delta sizes do not match s_count");
  for (std::size_t s = 0; s < S; ++s) {
    if (payoff.delta[s].size() != S) throw std::invalid_argument("delta must be s_count x s_count");
    for (std::size_t t = 0; t < S; ++t)
      if (s != t && payoff.delta[s][t] > 0.0) throw std::invalid_argument("delta entries must be <= 0");
  }
  if (correlation.rows() != s_count + 1 || correlation.cols() != s_count + 1)
    throw std::invalid_argument("error_law correlation must be (S+1)x(S+1)");
  if (!correlation.isApprox(correlation.transpose(), 1e-12))
    throw std::invalid_argument("error_law correlation must be symmetric");
  for (int i = 0; i <= s_count; ++i)
    if (std::abs(correlation(i, i) - 1.0) > 1e-12) throw std::invalid_argument("error_law must have unit variances");
  if (Eigen::LLT<Eigen::MatrixXd>(correlation).info() != Eigen::Success)
    throw std::invalid_argument("error_law correlation is not positive definite");
  // Monotone treatment response with a common direction across s and d_{-s}.
  bool up = false, down = false;
  for (int s = 0; s < s_count; ++s)
    for (Profile d = 0; d < profile_count(s_count); ++d) {
      if (bit(d, s)) continue;
      const double diff = mu[d | (1u << s)] - mu[d];
      up = up || diff > 0.0;
      down = down || diff < 0.0;
    }
  if (up && down) throw std::invalid_argument("outcome_index violates monotone response (M*)");
  for (const auto& z : z_support)
    if (z.size() != S) throw std::invalid_argument("z_support vectors must have s_count coordinates");
  check_probs(z_probs, z_support.size(), "z_law");
  if (x_support.empty()) throw std::invalid_argument("x_support is empty");
  check_probs(x_probs, x_support.size(), "x_law");
  if (has_w()) check_probs(w_probs, w_support.size(), "w_law");
  if (!(y_lo < y_hi)) throw std::invalid_argument("y range must satisfy y_lo < y_hi");
  // A linear index with delta < 0 is SS and M1 by construction, and delta = 0
  // is the no-interaction limit with a unique equilibrium. Tabulated thresholds
  // are not rechecked because the link can saturate.
}

SimParams default_params(int x_points) {
  if (x_points != 3 && x_points != 15) throw std::invalid_argument("x_points must be 3 or 15");
  SimParams p;
  p.s_count = 2;
  p.mu = {-0.25, 0.0, 0.0, 0.25};  // 00, 10, 01, 11
  p.beta = 0.5;
  p.payoff.gamma = {1.0, 1.0};
  p.payoff.delta = {{0.0, -0.1}, {-0.1, 0.0}};
  p.payoff.link = Link::gaussian;
  p.correlation = Eigen::MatrixXd::Constant(3, 3, 0.5);
  p.correlation.diagonal().setOnes();
  p.z_support = {{-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
  p.z_probs.assign(4, 0.25);
  if (x_points == 3) {
    p.x_support = {-1.0, 0.0, 1.0};
  } else {
    for (int k = -7; k <= 7; ++k) p.x_support.push_back(k / 7.0);
  }
  p.x_probs.assign(p.x_support.size(), 1.0 / static_cast<double>(p.x_support.size()));
  return p;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.s_count = s_count;
  out.z_support = z_support;
  out.x_support = x_support;
  out.w_support = w_support;
  out.seed = seed;
  out.y.reserve(rows.size());
  out.d.reserve(rows.size());
  out.zi.reserve(rows.size());
  out.xi.reserve(rows.size());
  for (auto r : rows) {
    out.y.push_back(y[r]);
    out.d.push_back(d[r]);
    out.zi.push_back(zi[r]);
    out.xi.push_back(xi[r]);
    if (has_w()) out.wi.push_back(wi[r]);
  }
  return out;
}

std::vector<Profile> latent_equilibria(const SimParams& p, std::size_t zi, std::span<const double> v) {
  const auto& z = p.z_support[zi];
  std::vector<Profile> out;
  const boost::math::normal_distribution<double> nd;
  for (Profile d = 0; d < profile_count(p.s_count); ++d) {
    bool ok = true;
    for (int s = 0; s < p.s_count && ok; ++s) {
      const double idx = p.payoff.index(s, d, z);
      const double vs = v[static_cast<std::size_t>(s)];
      const bool enter = p.payoff.link == Link::gaussian ? idx >= vs
                                                         : apply_link(p.payoff.link, idx) >= boost::math::cdf(nd, vs);
      ok = enter == bit(d, s);
    }
    if (ok) out.push_back(d);
  }
  return out;
}

namespace {

std::size_t draw_index(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> cumulative(const std::vector<double>& probs) {
  std::vector<double> c(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) c[i] = acc += probs[i];
  return c;
}

constexpr std::size_t block_size = 8192;

}  // namespace

Dataset generate(const SimParams& p, std::size_t n, std::uint64_t seed, GenerateTrace* trace) {
  p.validate();
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  const int S = p.s_count;
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(p.correlation).matrixL();
  const auto zc = cumulative(p.z_probs), xc = cumulative(p.x_probs), wc = cumulative(p.w_probs);

  Dataset ds;
  ds.s_count = S;
  ds.z_support = p.z_support;
  ds.x_support = p.x_support;
  ds.w_support = p.w_support;
  ds.seed = seed;
  ds.y.resize(n);
  ds.d.resize(n);
  ds.zi.resize(n);
  ds.xi.resize(n);
  if (p.has_w()) ds.wi.resize(n);
  if (trace) {
    trace->eps.resize(n);
    trace->equilibria.resize(n);
  }

  const std::size_t blocks = (n + block_size - 1) / block_size;
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd e(S + 1);
    std::vector<double> v(static_cast<std::size_t>(S));
    const std::size_t end = std::min(n, (b + 1) * block_size);
    for (std::size_t i = b * block_size; i < end; ++i) {
      const std::size_t zi = draw_index(zc, unif(rng));
      const std::size_t xi = draw_index(xc, unif(rng));
      if (p.has_w()) ds.wi[i] = static_cast<std::uint32_t>(draw_index(wc, unif(rng)));
      for (int k = 0; k <= S; ++k) e(k) = gauss(rng);
      const Eigen::VectorXd lat = chol * e;
      const double pick = unif(rng);
      for (int s = 0; s < S; ++s) v[static_cast<std::size_t>(s)] = lat(s + 1);
      const auto eqs = latent_equilibria(p, zi, v);
      if (eqs.empty()) throw std::runtime_error("market has no pure-strategy equilibrium");
      Profile d = eqs.front();
      if (eqs.size() > 1) {
        switch (p.selection.kind) {
          case SelectionRule::Kind::uniform:
            d = eqs[std::min(eqs.size() - 1, static_cast<std::size_t>(pick * static_cast<double>(eqs.size())))];
            break;
          case SelectionRule::Kind::player1: d = priority_pick(eqs, S, 0); break;
          case SelectionRule::Kind::player2: d = priority_pick(eqs, S, std::min(1, S - 1)); break;
          case SelectionRule::Kind::mixture:
            d = priority_pick(eqs, S, pick < p.selection.q ? 0 : std::min(1, S - 1));
            break;
        }
      }
      const double x = p.x_support[xi];
      ds.zi[i] = static_cast<std::uint32_t>(zi);
      ds.xi[i] = static_cast<std::uint32_t>(xi);
      ds.d[i] = d;
      ds.y[i] = p.mu_at(d, x) >= lat(0) ? 1 : 0;
      if (trace) {
        trace->eps[i] = lat(0);
        trace->equilibria[i] = static_cast<std::uint8_t>(eqs.size());
      }
    }
  });
  return ds;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw std::runtime_error("dataset CSV: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_csv(std::ostream& os, const Dataset& ds) {
  const int S = ds.s_count;
  os << 'y';
  for (int s = 1; s <= S; ++s) os << ",d" << s;
  for (int s = 1; s <= S; ++s) os << ",z" << s;
  os << ",x";
  if (ds.has_w()) os << ",w";
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << static_cast<int>(ds.y[i]);
    for (int s = 0; s < S; ++s) os << ',' << (bit(ds.d[i], s) ? 1 : 0);
    for (int s = 0; s < S; ++s) {
      os << ',';
      put(os, ds.z_support[ds.zi[i]][static_cast<std::size_t>(s)]);
    }
    os << ',';
    put(os, ds.x_support[ds.xi[i]]);
    if (ds.has_w()) {
      os << ',';
      put(os, ds.w_support[ds.wi[i]]);
    }
    os << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is, const SimParams* like) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("dataset CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  int S = 0;
  while (static_cast<std::size_t>(S + 1) < header.size() && header[static_cast<std::size_t>(S + 1)] == "d" + std::to_string(S + 1)) ++S;
  if (S == 0 || header[0] != "y") throw std::runtime_error("dataset CSV: header must start with y,d1,...");
  const std::size_t base = 1 + 2 * static_cast<std::size_t>(S);
  if (header.size() < base + 1 || header[base] != "x") throw std::runtime_error("dataset CSV: expected x column");
  const bool has_w = header.size() == base + 2;
  if (has_w && header[base + 1] != "w") throw std::runtime_error("dataset CSV: unexpected trailing column");

  std::vector<std::uint8_t> y;
  std::vector<Profile> d;
  std::vector<std::vector<double>> z;
  std::vector<double> x, w;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw std::runtime_error("dataset CSV: ragged row");
    const double yv = parse_double(f[0]);
    if (yv != 0.0 && yv != 1.0) throw std::runtime_error("dataset CSV: y must be 0 or 1");
    y.push_back(static_cast<std::uint8_t>(yv));
    Profile dv = 0;
    for (int s = 0; s < S; ++s) {
      const double b = parse_double(f[1 + static_cast<std::size_t>(s)]);
      if (b != 0.0 && b != 1.0) throw std::runtime_error("dataset CSV: d must be 0 or 1");
      if (b == 1.0) dv |= 1u << s;
    }
    d.push_back(dv);
    std::vector<double> zv;
    for (int s = 0; s < S; ++s) zv.push_back(parse_double(f[1 + static_cast<std::size_t>(S + s)]));
    z.push_back(std::move(zv));
    x.push_back(parse_double(f[base]));
    if (has_w) w.push_back(parse_double(f[base + 1]));
  }

  Dataset ds;
  ds.s_count = S;
  if (like) {
    if (like->s_count != S) throw std::runtime_error("dataset CSV: player count differs from config");
    ds.z_support = like->z_support;
    ds.x_support = like->x_support;
    if (has_w) ds.w_support = like->w_support;
  }
  auto unique_sorted = [](auto values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  };
  if (ds.z_support.empty()) ds.z_support = unique_sorted(z);
  if (ds.x_support.empty()) ds.x_support = unique_sorted(x);
  if (has_w && ds.w_support.empty()) ds.w_support = unique_sorted(w);
  auto find = [](const auto& support, const auto& v, const char* what) {
    const auto it = std::find(support.begin(), support.end(), v);
    if (it == support.end()) throw std::runtime_error(std::string("dataset CSV: value outside declared ") + what + " support");
    return static_cast<std::uint32_t>(it - support.begin());
  };
  ds.y = std::move(y);
  ds.d = std::move(d);
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    ds.zi.push_back(find(ds.z_support, z[i], "z"));
    ds.xi.push_back(find(ds.x_support, x[i], "x"));
    if (has_w) ds.wi.push_back(find(ds.w_support, w[i], "w"));
  }
  return ds;
}

}  // namespace ategb
