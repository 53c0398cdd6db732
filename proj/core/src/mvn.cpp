#include "ategb/mvn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace ategb::mvn {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

namespace {

template <int N>
struct Legendre {
  std::array<double, N / 2> x{};
  std::array<double, N / 2> w{};
  Legendre() {
    const auto& a = boost::math::quadrature::gauss<double, N>::abscissa();
    const auto& b = boost::math::quadrature::gauss<double, N>::weights();
    for (int i = 0; i < N / 2; ++i) {
      x[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)];
      w[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)];
    }
  }
};

template <std::size_t M>
double bvnu_sum(const std::array<double, M>& x, const std::array<double, M>& w, double h, double k, double r) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (std::size_t i = 0; i < M; ++i)
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (sgn * x[i] + 1.0) / 2.0);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    return bvn * asr / (2.0 * two_pi) + cdf(-h) * cdf(-k);
  }
  double kk = k, hkk = hk;
  if (r < 0.0) {
    kk = -k;
    hkk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - kk) * (h - kk);
    const double c = (4.0 - hkk) / 8.0;
    const double d = (12.0 - hkk) / 16.0;
    double asr = -(bs / as + hkk) / 2.0;
    if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (-hkk < 100.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hkk / 2.0) * std::sqrt(two_pi) * cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < M; ++i)
      for (double sgn : {-1.0, 1.0}) {
        const double xs = (a * (sgn * x[i] + 1.0)) * (a * (sgn * x[i] + 1.0));
        const double rs = std::sqrt(1.0 - xs);
        asr = -(bs / xs + hkk) / 2.0;
        if (asr > -100.0)
          bvn += a * w[i] * std::exp(asr) *
                 (std::exp(-hkk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
      }
    bvn = -bvn / two_pi;
  }
  if (r > 0.0) return bvn + cdf(-std::max(h, kk));
  return -bvn + std::max(0.0, cdf(-h) - cdf(-kk));
}

// Upper orthant P[X1 > h, X2 > k].
double bvnu(double h, double k, double r) {
  static const Legendre<6> g6;
  static const Legendre<12> g12;
  static const Legendre<20> g20;
  const double ar = std::abs(r);
  if (ar < 0.3) return bvnu_sum(g6.x, g6.w, h, k, r);
  if (ar < 0.75) return bvnu_sum(g12.x, g12.w, h, k, r);
  return bvnu_sum(g20.x, g20.w, h, k, r);
}

}  // namespace

double bvn_cdf(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == -inf || k == -inf) return 0.0;
  if (h == inf) return cdf(k);
  if (k == inf) return cdf(h);
  if (r == 0.0) return cdf(h) * cdf(k);
  const double v = bvnu(-h, -k, r);
  return std::clamp(v, 0.0, std::min(cdf(h), cdf(k)));
}

double tvn_cdf(double h1, double h2, double h3, double r12, double r13, double r23) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h1 == -inf || h2 == -inf || h3 == -inf) return 0.0;
  if (h1 == inf) return bvn_cdf(h2, h3, r23);
  if (h2 == inf) return bvn_cdf(h1, h3, r13);
  if (h3 == inf) return bvn_cdf(h1, h2, r12);
  // Condition on the coordinate with the smallest correlations to the others
  // keeps the conditional scales away from zero.
  const double s2 = std::sqrt(1.0 - r12 * r12);
  const double s3 = std::sqrt(1.0 - r13 * r13);
  const double rho = (r23 - r12 * r13) / (s2 * s3);
  constexpr double lower = -9.0;  // Phi(-9) ~ 1e-19
  if (h1 <= lower) return 0.0;
  auto f = [&](double t) { return phi(t) * bvn_cdf((h2 - r12 * t) / s2, (h3 - r13 * t) / s3, rho); };
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lower, h1, 12, 1e-13);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace ategb::mvn
