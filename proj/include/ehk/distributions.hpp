#pragma once
// Tail probabilities from first principles: regularized incomplete beta and
// gamma via series/continued fractions (accurate to ~1e-12 for the df ranges
// used here) and the studentized range CDF via double Gauss-Legendre
// quadrature.

namespace ehk::dist {

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Regularized lower/upper incomplete gamma P(a, x) and Q(a, x).
double reg_lower_gamma(double a, double x);
double reg_upper_gamma(double a, double x);

double normal_cdf(double z);
double normal_sf(double z);

// Two-tailed p for Student's t on df degrees of freedom.
double t_two_tailed(double t, double df);

// Upper tails.
double f_sf(double f, double df1, double df2);
double chi2_sf(double x, double df);

// P(Q <= q) / P(Q > q) for the studentized range of k groups with df
// degrees of freedom in the variance estimate.
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);

} // namespace ehk::dist
