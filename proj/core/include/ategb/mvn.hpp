#pragma once

// Normal distribution functions used only by the oracle.
namespace ategb::mvn {

double phi(double x);       // density
double cdf(double x);       // Phi
double quantile(double p);  // Phi^{-1}

// P[X1 <= h, X2 <= k] for standard bivariate normal with correlation r
// (Genz's BVND algorithm; absolute error near 1e-15).
double bvn_cdf(double h, double k, double r);

// P[X1 <= h1, X2 <= h2, X3 <= h3] by conditioning on X1 and adaptive
// Gauss-Kronrod quadrature of the bivariate CDF.
double tvn_cdf(double h1, double h2, double h3, double r12, double r13, double r23);

}  // namespace ategb::mvn
