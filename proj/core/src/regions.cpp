#include "ategb/regions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include "ategb/parallel.hpp"

namespace ategb {

Box::Box(std::vector<Interval> sides) : sides_(std::move(sides)) {
  for (const auto& iv : sides_)
    if (!(0.0 <= iv.lo && iv.lo < iv.hi && iv.hi <= 1.0))
      throw std::invalid_argument("box side must satisfy 0 <= lo < hi <= 1");
}

Box Box::unit(int dim) { return Box(std::vector<Interval>(static_cast<std::size_t>(dim))); }

bool Box::contains(std::span<const double> u) const {
  if (u.size() != sides_.size()) throw std::invalid_argument("point dimension mismatch");
  for (std::size_t s = 0; s < sides_.size(); ++s)
    if (!sides_[s].contains(u[s])) return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& iv : sides_) v *= iv.length();
  return v;
}

namespace {

using Pred = std::function<bool(bool, bool)>;

// Arrangement of the breakpoints of up to two operands; cell i along
// coordinate k is (bp[k][i], bp[k][i+1]].
struct Grid {
  int dim = 0;
  std::vector<std::vector<double>> bp;
  std::vector<std::size_t> stride;
  std::vector<std::uint8_t> cell;

  std::size_t cells(int k) const { return bp[static_cast<std::size_t>(k)].size() - 1; }
};

std::size_t locate(const std::vector<double>& v, double x) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
}

void paint(Grid& g, const Box& b, std::uint8_t flag) {
  std::vector<std::size_t> lo(static_cast<std::size_t>(g.dim)), hi(lo.size());
  for (int k = 0; k < g.dim; ++k) {
    const auto& v = g.bp[static_cast<std::size_t>(k)];
    lo[static_cast<std::size_t>(k)] = locate(v, b[k].lo);
    hi[static_cast<std::size_t>(k)] = locate(v, b[k].hi);
  }
  std::vector<std::size_t> idx(lo);
  while (true) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) off += idx[k] * g.stride[k];
    g.cell[off] |= flag;
    int k = g.dim - 1;
    for (; k >= 0; --k) {
      auto uk = static_cast<std::size_t>(k);
      if (++idx[uk] < hi[uk]) break;
      idx[uk] = lo[uk];
    }
    if (k < 0) break;
  }
}

Grid make_grid(int dim, const std::vector<Box>& a, const std::vector<Box>* b) {
  Grid g;
  g.dim = dim;
  g.bp.assign(static_cast<std::size_t>(dim), std::vector<double>{0.0, 1.0});
  auto collect = [&](const std::vector<Box>& boxes) {
    for (const auto& box : boxes)
      for (int k = 0; k < dim; ++k) {
        g.bp[static_cast<std::size_t>(k)].push_back(box[k].lo);
        g.bp[static_cast<std::size_t>(k)].push_back(box[k].hi);
      }
  };
  collect(a);
  if (b) collect(*b);
  for (auto& v : g.bp) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  g.stride.assign(static_cast<std::size_t>(dim), 1);
  std::size_t total = 1;
  for (int k = dim - 1; k >= 0; --k) {
    g.stride[static_cast<std::size_t>(k)] = total;
    total *= g.cells(k);
  }
  g.cell.assign(total, 0);
  for (const auto& box : a) paint(g, box, 1);
  if (b)
    for (const auto& box : *b) paint(g, box, 2);
  return g;
}

using Suffix = std::vector<Interval>;

std::vector<Suffix> build(const Grid& g, const std::vector<char>& in, int k, std::size_t offset) {
  if (k == g.dim) return in[offset] ? std::vector<Suffix>{Suffix{}} : std::vector<Suffix>{};
  const auto& v = g.bp[static_cast<std::size_t>(k)];
  const std::size_t n = g.cells(k);
  std::vector<Suffix> out;
  std::vector<Suffix> run;
  std::size_t run_start = 0;
  auto flush = [&](std::size_t end) {
    if (run.empty()) return;
    for (const auto& s : run) {
      Suffix box;
      box.reserve(s.size() + 1);
      box.push_back({v[run_start], v[end]});
      box.insert(box.end(), s.begin(), s.end());
      out.push_back(std::move(box));
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    auto sub = build(g, in, k + 1, offset + i * g.stride[static_cast<std::size_t>(k)]);
    if (i > 0 && sub == run) continue;
    flush(i);
    run = std::move(sub);
    run_start = i;
  }
  flush(n);
  return out;
}

std::vector<Box> canonical(const Grid& g, const Pred& pred) {
  std::vector<char> in(g.cell.size());
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = pred(g.cell[i] & 1, g.cell[i] & 2);
  std::vector<Box> out;
  for (auto& s : build(g, in, 0, 0)) out.emplace_back(std::move(s));
  return out;
}

void require_same_dim(const RegionSet& a, const RegionSet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("region dimension mismatch");
}

RegionSet combine(const RegionSet& a, const RegionSet& b, const Pred& pred) {
  require_same_dim(a, b);
  Grid g = make_grid(a.dim(), a.boxes(), &b.boxes());
  return RegionSet(a.dim(), canonical(g, pred));
}

bool any_cell(const RegionSet& a, const RegionSet& b, const Pred& pred) {
  require_same_dim(a, b);
  Grid g = make_grid(a.dim(), a.boxes(), &b.boxes());
  for (auto c : g.cell)
    if (pred(c & 1, c & 2)) return true;
  return false;
}

}  // namespace

RegionSet::RegionSet(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("region dimension must be >= 1");
}

RegionSet::RegionSet(int dim, std::vector<Box> boxes) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("region dimension must be >= 1");
  for (const auto& b : boxes)
    if (b.dim() != dim) throw std::invalid_argument("box dimension mismatch");
  Grid g = make_grid(dim, boxes, nullptr);
  std::vector<char> in(g.cell.begin(), g.cell.end());
  for (auto& s : build(g, in, 0, 0)) boxes_.emplace_back(std::move(s));
}

RegionSet RegionSet::full(int dim) { return RegionSet(dim, {Box::unit(dim)}); }

RegionSet RegionSet::of(const Box& b) { return RegionSet(b.dim(), {b}); }

bool RegionSet::contains(std::span<const double> u) const {
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(u); });
}

double RegionSet::volume() const {
  double v = 0.0;
  for (const auto& b : boxes_) v += b.volume();
  return v;
}

RegionSet unite(const RegionSet& a, const RegionSet& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}

RegionSet intersect(const RegionSet& a, const RegionSet& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}

RegionSet difference(const RegionSet& a, const RegionSet& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

RegionSet complement(const RegionSet& a) { return difference(RegionSet::full(a.dim()), a); }

bool is_subset(const RegionSet& a, const RegionSet& b) {
  return !any_cell(a, b, [](bool x, bool y) { return x && !y; });
}

bool disjoint(const RegionSet& a, const RegionSet& b) {
  return !any_cell(a, b, [](bool x, bool y) { return x && y; });
}

Measurement measure(const RegionSet& r, const ErrorLaw& law, const MeasureOptions& opt) {
  if (law.kind == ErrorLaw::Kind::independent_uniform) return {r.volume(), 0.0};

  const int dim = r.dim();
  const Eigen::MatrixXd& corr = law.correlation;
  if (corr.rows() != dim || corr.cols() != dim)
    throw std::invalid_argument("copula correlation matrix has wrong size");
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success || !corr.isApprox(corr.transpose()))
    throw std::invalid_argument("copula correlation matrix is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  if (r.is_empty()) return {0.0, 0.0};

  const int reps = std::max(2, opt.replicates);
  const std::size_t per_rep = std::max<std::size_t>(1, opt.points / static_cast<std::size_t>(reps));

  // One Sobol point set, randomly shifted per replicate.
  std::vector<double> base(per_rep * static_cast<std::size_t>(dim));
  {
    boost::random::sobol gen(static_cast<std::size_t>(dim));
    const double scale = std::ldexp(1.0, -64);
    for (auto& x : base) x = static_cast<double>(gen()) * scale;
  }

  const boost::math::normal_distribution<double> std_normal;
  std::vector<double> estimates(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
    std::mt19937_64 rng(derive_seed(opt.seed, rep));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(static_cast<std::size_t>(dim));
    for (auto& s : shift) s = unif(rng);
    Eigen::VectorXd z(dim);
    std::vector<double> u(static_cast<std::size_t>(dim));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < per_rep; ++i) {
      for (int k = 0; k < dim; ++k) {
        double p = base[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] +
                   shift[static_cast<std::size_t>(k)];
        p -= std::floor(p);
        p = std::clamp(p, 1e-16, 1.0 - 1e-16);
        z(k) = boost::math::quantile(std_normal, p);
      }
      const Eigen::VectorXd x = chol * z;
      for (int k = 0; k < dim; ++k) u[static_cast<std::size_t>(k)] = boost::math::cdf(std_normal, x(k));
      if (r.contains(u)) ++hits;
    }
    estimates[rep] = static_cast<double>(hits) / static_cast<double>(per_rep);
  });

  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= reps;
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  return {mean, se};
}

void write_csv(std::ostream& os, const RegionSet& r) {
  for (int k = 1; k <= r.dim(); ++k) os << (k > 1 ? "," : "") << "lo_" << k << ",hi_" << k;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (const auto& b : r.boxes()) {
    for (int k = 0; k < r.dim(); ++k) os << (k > 0 ? "," : "") << b[k].lo << ',' << b[k].hi;
    os << '\n';
  }
  os.precision(old_precision);
}

RegionSet read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("region CSV: missing header");
  const auto fields = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (fields % 2 != 0) throw std::runtime_error("region CSV: odd number of columns");
  const int dim = fields / 2;
  std::vector<Box> boxes;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cellv;
    std::vector<double> vals;
    while (std::getline(ss, cellv, ',')) vals.push_back(std::stod(cellv));
    if (static_cast<int>(vals.size()) != fields) throw std::runtime_error("region CSV: ragged row");
    std::vector<Interval> sides;
    for (int k = 0; k < dim; ++k)
      sides.push_back({vals[static_cast<std::size_t>(2 * k)], vals[static_cast<std::size_t>(2 * k + 1)]});
    boxes.emplace_back(std::move(sides));
  }
  return RegionSet(dim, std::move(boxes));
}

}  // namespace ategb
