#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ategb/game.hpp"
#include "ategb/profile.hpp"
#include "ategb/simulator.hpp"

namespace ategb {

struct CellStats {
  double n = 0.0;          // count (sample) or probability mass (population)
  std::vector<double> p;   // P[D=d | cell]
  std::vector<double> py;  // P[Y=1, D=d | cell], i.e. E[Y 1{D=d} | cell]
  bool defined = false;
};

class CondTable {
 public:
  CondTable() = default;
  CondTable(int s_count, std::vector<std::vector<double>> z_support, std::vector<double> x_support,
            std::vector<double> w_support = {});

  int s_count() const { return s_count_; }
  std::size_t z_count() const { return z_support_.size(); }
  std::size_t x_count() const { return x_support_.size(); }
  std::size_t w_count() const { return w_support_.empty() ? 1 : w_support_.size(); }
  const std::vector<std::vector<double>>& z_support() const { return z_support_; }
  const std::vector<double>& x_support() const { return x_support_; }
  const std::vector<double>& w_support() const { return w_support_; }
  bool has_w() const { return !w_support_.empty(); }

  CellStats& cell(std::size_t zi, std::size_t xi, std::size_t wi = 0) { return cells_[index(zi, xi, wi)]; }
  const CellStats& cell(std::size_t zi, std::size_t xi, std::size_t wi = 0) const { return cells_[index(zi, xi, wi)]; }

  std::size_t x_index(double x) const;
  double total() const;
  // Mass of z given w, summed over x.
  double z_mass(std::size_t zi, std::size_t wi = 0) const;
  // P[D=d | z, w], pooling the x cells.
  double propensity(Profile d, std::size_t zi, std::size_t wi = 0) const;

 private:
  std::size_t index(std::size_t zi, std::size_t xi, std::size_t wi) const {
    return (wi * z_support_.size() + zi) * x_support_.size() + xi;
  }

  int s_count_ = 0;
  std::vector<std::vector<double>> z_support_;
  std::vector<double> x_support_;
  std::vector<double> w_support_;
  std::vector<CellStats> cells_;
};

CondTable tabulate(const Dataset& ds);

std::optional<double> h(const CondTable& ct, std::size_t zi, std::size_t zpi, std::size_t xi, std::size_t wi = 0);
std::optional<double> h_profile(const CondTable& ct, Profile d, std::size_t zi, std::size_t zpi, std::size_t xi,
                                std::size_t wi = 0);
// x_tilde[j] is the x index at which the level-j profiles are evaluated.
std::optional<double> h_tilde(const CondTable& ct, std::size_t zi, std::size_t zpi,
                              const std::vector<std::size_t>& x_tilde, std::size_t wi = 0);

enum class PairMode { oracle, eq_star };
std::string pair_mode_name(PairMode m);
PairMode parse_pair_mode(const std::string& text);

inline constexpr double eq_star_threshold = 0.58578643762690485;  // 2 - sqrt(2)

struct ZPair {
  std::size_t z = 0;
  std::size_t zp = 0;
  double weight = 0.0;
};

struct PairDiagnostic {
  std::size_t z = 0;
  std::size_t zp = 0;
  bool ordered = false;  // joint-propensity ordering
  std::optional<bool> eq;       // check_assumption_eq, when a game is supplied
  bool eq_star = false;         // 2 - sqrt(2) inequality on the table
  bool admitted = false;
};

bool eq_star_holds(const CondTable& ct, std::size_t zi, std::size_t zpi, std::size_t wi = 0);

// Ordered pairs (z, z') with z raising the joint propensity of full entry in
// every coordinate and passing the selected EQ criterion. Oracle mode needs a game.
std::vector<ZPair> eq_pairs(const CondTable& ct, PairMode mode, const GameSpec* game = nullptr, std::size_t wi = 0,
                            std::vector<PairDiagnostic>* diagnostics = nullptr);

double big_h(const CondTable& ct, const std::vector<ZPair>& pairs, std::size_t xi, std::size_t wi = 0);

int sign_with_band(double v, double tau);

struct XSetEntry {
  int j = 0;  // level: the pair is (x_j, x_{j-1})
  int sign = 0;
  std::size_t xa = 0;  // index of x_j
  std::size_t xb = 0;  // index of x_{j-1}
  int depth = 0;
  std::vector<std::size_t> witness;  // x~ whose H~ admitted the pair
  double h_tilde = 0.0;
};

struct XSets {
  int s_count = 0;
  std::size_t x_count = 0;
  int depth = 0;
  bool fixpoint = false;
  std::vector<double> big_h;  // H(x) per x index
  std::vector<std::vector<double>> level_h;  // level_h[j][x]: pair-averaged sum of h_d over d in D^j
  std::vector<XSetEntry> entries;

  bool contains(int j, int sign, std::size_t xa, std::size_t xb) const {
    return member_[slot(j, sign, xa, xb)] != 0;
  }
  double h_tilde(const std::vector<std::size_t>& x_tilde) const;
  std::size_t size() const { return entries.size(); }

  // Internal storage; use build_x_sets().
  void reset(int s_count, std::size_t x_count);
  bool insert(const XSetEntry& e);

 private:
  std::size_t slot(int j, int sign, std::size_t xa, std::size_t xb) const {
    return ((static_cast<std::size_t>(j - 1) * 3 + static_cast<std::size_t>(sign + 1)) * x_count + xa) * x_count + xb;
  }
  std::vector<char> member_;
};

// depth_cap < 0 iterates to the fixpoint; depth_cap = 0 gives the all-equal seed
// (which reproduces the Z-only bounds).
XSets build_x_sets(const CondTable& ct, const std::vector<ZPair>& pairs, int depth_cap, double tau = 0.0,
                   std::size_t wi = 0);

// x indices reachable from x at level j to level jp through pairs whose
// signs are allowed for the given side of the bound.
enum class Side { lower, upper };
std::vector<char> chain_set(const XSets& xs, std::size_t xi, int j, int jp, Side side);

struct ProfileBounds {
  double L = 0.0;
  double U = 0.0;
  std::optional<std::size_t> z_lower;  // z attaining L
  std::optional<std::size_t> z_upper;
};

struct YRange {
  double lo = 0.0;
  double hi = 1.0;
};

ProfileBounds manski_bounds(const CondTable& ct, Profile d, std::size_t xi, std::size_t wi = 0, YRange y = {});

// Bound evaluated at a single z (before taking inf/sup over z); empty when the
// (z, x) cell is undefined.
std::optional<double> proposed_bound_at(const CondTable& ct, Profile d, std::size_t zi, std::size_t xi,
                                        const XSets& xs, Side side, std::size_t wi = 0, YRange y = {});
ProfileBounds proposed_bounds(const CondTable& ct, Profile d, std::size_t xi, const XSets& xs, std::size_t wi = 0,
                              YRange y = {});

// Separate: L = L_d - U_dt, U = U_d - L_dt. Joint: both profiles' terms at the
// same z before the inf/sup over z.
ProfileBounds ate_bounds(const CondTable& ct, Profile d, Profile dt, std::size_t xi, const XSets& xs, bool joint,
                         std::size_t wi = 0, YRange y = {});

enum class Method { manski, z_only, z_and_x };
std::string method_name(Method m);
Method parse_method(const std::string& text);

struct BoundsOptions {
  std::vector<Method> methods{Method::manski, Method::z_only, Method::z_and_x};
  double tau = 0.0;
  int depth_cap = -1;
  PairMode pair_mode = PairMode::eq_star;
  const GameSpec* game = nullptr;  // required by PairMode::oracle
  YRange y{};
  std::optional<bool> joint_ate;  // default: joint when conditioning on w
};

struct BoundsTarget {
  std::vector<Profile> profiles;  // empty: all profiles
  std::vector<std::pair<Profile, Profile>> ate;
  std::vector<std::size_t> x;  // empty: all x
  std::size_t w = 0;
};

struct BoundsReport {
  struct Row {
    Method method = Method::manski;
    bool is_ate = false;
    Profile d = 0;
    Profile dt = 0;
    std::size_t xi = 0;
    ProfileBounds b;
    double n_effective = 0.0;
  };

  int s_count = 0;
  std::vector<double> x_support;
  std::vector<std::vector<double>> z_support;
  std::vector<Row> rows;
  std::vector<PairDiagnostic> pairs;
  std::vector<double> big_h;
  std::vector<int> h_sign;
  std::optional<XSets> z_only_sets;
  std::optional<XSets> z_and_x_sets;
  std::vector<std::string> diagnostics;
  bool fell_back_to_manski = false;

  const Row* find(Method m, bool is_ate, Profile d, Profile dt, std::size_t xi) const;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

BoundsReport compute_bounds(const CondTable& ct, const BoundsTarget& target, const BoundsOptions& opt);

struct BootstrapTarget {
  Method method = Method::z_only;
  bool is_ate = true;
  Profile d = 0;
  Profile dt = 0;
  double x = 0.0;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double L_hat = 0.0;
  double U_hat = 0.0;
  int reps = 0;
};

// Percentile interval around the estimated bounds: lo = L_hat - q(|L* - L_hat|),
// hi = U_hat + q(|U* - U_hat|), q the empirical `level` quantile over replications.
// level = 0 returns the point estimates.
ConfidenceInterval bootstrap_ci(const Dataset& ds, const BootstrapTarget& target, double level, int reps,
                                std::uint64_t seed, const BoundsOptions& opt = {});

}  // namespace ategb
