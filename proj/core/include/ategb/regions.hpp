#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ategb {

// Half-open interval (lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double u) const { return lo < u && u <= hi; }
  double length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> sides);

  static Box unit(int dim);

  int dim() const { return static_cast<int>(sides_.size()); }
  const Interval& operator[](int s) const { return sides_[static_cast<std::size_t>(s)]; }
  const std::vector<Interval>& sides() const { return sides_; }
  bool contains(std::span<const double> u) const;
  double volume() const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<Interval> sides_;
};

// Finite union of disjoint half-open boxes inside (0,1]^S, always held in
// canonical form: slabs along coordinate 0 are maximal intervals with a
// constant cross-section, and each cross-section is canonical recursively.
// Two sets are equal iff their box lists are equal.
class RegionSet {
 public:
  explicit RegionSet(int dim = 1);
  RegionSet(int dim, std::vector<Box> boxes);  // boxes may overlap; canonicalized

  static RegionSet full(int dim);
  static RegionSet empty(int dim) { return RegionSet(dim); }
  static RegionSet of(const Box& b);

  int dim() const { return dim_; }
  bool is_empty() const { return boxes_.empty(); }
  const std::vector<Box>& boxes() const { return boxes_; }
  bool contains(std::span<const double> u) const;
  double volume() const;

  friend bool operator==(const RegionSet&, const RegionSet&) = default;

 private:
  int dim_;
  std::vector<Box> boxes_;
};

RegionSet unite(const RegionSet& a, const RegionSet& b);
RegionSet intersect(const RegionSet& a, const RegionSet& b);
RegionSet difference(const RegionSet& a, const RegionSet& b);
RegionSet complement(const RegionSet& a);
bool is_subset(const RegionSet& a, const RegionSet& b);
bool disjoint(const RegionSet& a, const RegionSet& b);

// Probability law of U on (0,1]^S.
struct ErrorLaw {
  enum class Kind { independent_uniform, gaussian_copula };
  Kind kind = Kind::independent_uniform;
  Eigen::MatrixXd correlation;  // used by gaussian_copula only

  static ErrorLaw independent() { return {}; }
  static ErrorLaw copula(Eigen::MatrixXd corr) { return {Kind::gaussian_copula, std::move(corr)}; }
};

struct MeasureOptions {
  std::size_t points = std::size_t{1} << 16;
  std::uint64_t seed = 1;
  int replicates = 16;  // independent random shifts; the SE comes from their spread
};

struct Measurement {
  double value = 0.0;
  double std_error = 0.0;
};

// Exact volume for the independent law; randomized quasi-Monte Carlo for the copula.
Measurement measure(const RegionSet& r, const ErrorLaw& law, const MeasureOptions& opt = {});

void write_csv(std::ostream& os, const RegionSet& r);
RegionSet read_csv(std::istream& is);

}  // namespace ategb
