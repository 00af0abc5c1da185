#pragma once

// Weibull-type marginals F(x) = 1 - exp(-x^alpha) coupled by a Gaussian
// copula. Only log-densities are exposed; raw densities underflow long
// before the tails the importance sampler visits.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace bbis {

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MarginalSpec {
  explicit MarginalSpec(double alpha);
  double alpha;
};

double marginal_cdf(double x, const MarginalSpec& m);
/// log(1 - F(x)) = -x^alpha.
double marginal_log_survival(double x, const MarginalSpec& m);
double marginal_quantile(double u, const MarginalSpec& m);
/// Inverse of marginal_log_survival: (-log_s)^{1/alpha}. Keeps full relative
/// precision where 1 - F(x) is below double resolution of F.
double marginal_quantile_from_log_survival(double log_s, const MarginalSpec& m);
double marginal_log_density(double x, const MarginalSpec& m);
/// Phi^{-1}(F(x)), evaluated through whichever tail keeps full precision.
double marginal_normal_score(double x, const MarginalSpec& m);

/// Correlation matrix with its Cholesky factor computed once at construction.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd entries);

  static CorrelationMatrix identity(int dim);
  static CorrelationMatrix equicorrelated(int dim, double c);
  /// Unit diagonal, c on the first off-diagonals, zero elsewhere.
  static CorrelationMatrix tridiagonal(int dim, double c);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  double log_det() const { return log_det_; }
  bool is_identity() const { return identity_; }

  /// z' R^{-1} z.
  double inverse_quadratic_form(std::span<const double> z) const;

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  bool identity_ = false;
};

class DistributionSpec {
 public:
  DistributionSpec(std::vector<MarginalSpec> marginals, CorrelationMatrix correlation);

  int dim() const { return correlation_.dim(); }
  const std::vector<MarginalSpec>& marginals() const { return marginals_; }
  const CorrelationMatrix& correlation() const { return correlation_; }

 private:
  std::vector<MarginalSpec> marginals_;
  CorrelationMatrix correlation_;
};

double copula_log_density(std::span<const double> u, const CorrelationMatrix& c);
/// Copula log-density evaluated directly from normal scores z = Phi^{-1}(u).
double copula_log_density_from_scores(std::span<const double> z, const CorrelationMatrix& c);

double joint_log_density(std::span<const double> x, const DistributionSpec& spec);

/// n i.i.d. rows: W ~ N(0, I), V = chol * W, X_i = F_i^{-1}(Phi(V_i)).
SampleMatrix sample_X(std::int64_t n, const DistributionSpec& spec, std::uint64_t seed);

}  // namespace bbis
