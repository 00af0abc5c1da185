#pragma once

// Standard normal distribution helpers used by the Gaussian copula.

namespace bbis {

double std_normal_cdf(double x);

/// log Phi(x), accurate in both tails (no cancellation near 0, no underflow
/// far below -37).
double log_std_normal_cdf(double x);

/// Phi^{-1}(p) for p in (0,1). Absolute error stays below 1e-9 on
/// [1e-300, 1 - 1e-12]; throws a domain error outside (0,1).
double std_normal_quantile(double p);

/// Phi^{-1}(exp(log_p)) for log_p < 0. Works far beyond the double range of p,
/// which the copula needs when a transformed sample sits deep in a tail.
double std_normal_quantile_from_log(double log_p);

}  // namespace bbis
