#pragma once

namespace damsa::stats {

// Standard normal CDF / upper tail / quantile (Wichura's AS 241, double
// precision).
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation,
// relative accuracy ~1e-14.
double incomplete_beta(double a, double b, double x);

// Regularized upper incomplete gamma Q(a, x).
double incomplete_gamma_q(double a, double x);

// Two-sided tail of Student's t with df degrees of freedom.
double student_t_sf_two_sided(double t, double df);

// Upper tail of the F distribution with (d1, d2) degrees of freedom.
double f_sf(double f, double d1, double d2);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, double k);

}  // namespace damsa::stats
