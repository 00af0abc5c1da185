#pragma once

// Self-structuring change of measure Z = T(X), T(x)_i = x_i * r^{kappa_i(x)},
// together with its Jacobian and the resulting log-likelihood ratio.

#include <span>
#include <vector>

#include "bbis/distribution.hpp"

namespace bbis {

class TransformParams {
 public:
  /// Requires r > 1 and rho > 0.
  TransformParams(double r, double rho);

  /// Accepts r >= 1. Only meant for tests that need the identity map (r = 1).
  static TransformParams permissive(double r, double rho);

  double r() const { return r_; }
  double rho() const { return rho_; }

 private:
  struct Unchecked {};
  TransformParams(Unchecked, double r, double rho) : r_(r), rho_(rho) {}

  double r_;
  double rho_;
};

/// r_beta = h * ln(ln(1/beta)). Throws unless 0 < beta < 1/e, h > 0 and the
/// result exceeds 1.
double extrapolation_factor(double beta, double h);

/// Index of the largest |x_i|, smallest index on ties. Throws on x = 0.
int dominant_index(std::span<const double> x);

std::vector<double> kappa(std::span<const double> x, double rho);

std::vector<double> transform_T(std::span<const double> x, const TransformParams& p);
void transform_T(std::span<const double> x, const TransformParams& p, std::span<double> out);

double log_jacobian(std::span<const double> x, const TransformParams& p);

/// log f_X(T(x)) - log f_X(x) + log J(x).
double log_likelihood_ratio(std::span<const double> x, const DistributionSpec& spec, const TransformParams& p);

struct TransformedSamples {
  SampleMatrix z;
  std::vector<double> log_lr;
};

/// Algorithm steps 1-2 applied row by row to a sample matrix.
TransformedSamples apply_change_of_measure(const SampleMatrix& x, const DistributionSpec& spec,
                                           const TransformParams& p);

}  // namespace bbis
