#include "bbis/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "bbis/errors.hpp"
#include "bbis/normal.hpp"

namespace bbis {

MarginalSpec::MarginalSpec(double a) : alpha(a) {
  if (!(a > 0.0) || !std::isfinite(a)) fail(ErrorCode::Invalid, "marginal alpha must be positive and finite");
}

double marginal_cdf(double x, const MarginalSpec& m) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-std::pow(x, m.alpha));
}

double marginal_log_survival(double x, const MarginalSpec& m) {
  if (x <= 0.0) return 0.0;
  return -std::pow(x, m.alpha);
}

double marginal_quantile(double u, const MarginalSpec& m) {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorCode::Domain, "marginal_quantile: u must lie in (0,1), got " + std::to_string(u));
  return std::pow(-std::log1p(-u), 1.0 / m.alpha);
}

double marginal_quantile_from_log_survival(double log_s, const MarginalSpec& m) {
  if (!(log_s < 0.0)) fail(ErrorCode::Domain, "marginal_quantile_from_log_survival: log survival must be negative");
  return std::pow(-log_s, 1.0 / m.alpha);
}

double marginal_log_density(double x, const MarginalSpec& m) {
  if (!(x > 0.0)) fail(ErrorCode::Domain, "marginal_log_density: x must be positive, got " + std::to_string(x));
  return std::log(m.alpha) + (m.alpha - 1.0) * std::log(x) - std::pow(x, m.alpha);
}

double marginal_normal_score(double x, const MarginalSpec& m) {
  if (!(x > 0.0)) fail(ErrorCode::Domain, "marginal_normal_score: x must be positive, got " + std::to_string(x));
  const double log_surv = -std::pow(x, m.alpha);
  const double cdf = -std::expm1(log_surv);
  if (cdf <= 0.5) return std_normal_quantile(cdf);
  return -std_normal_quantile_from_log(log_surv);
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const auto d = entries_.rows();
  if (d < 1 || entries_.cols() != d) fail(ErrorCode::Dimension, "correlation matrix must be square and nonempty");
  if (!entries_.allFinite()) fail(ErrorCode::Invalid, "correlation matrix has non-finite entries");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(entries_(i, i) - 1.0) > 1e-12) fail(ErrorCode::Invalid, "correlation matrix must have unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(entries_(i, j) - entries_(j, i)) > 1e-12) fail(ErrorCode::Invalid, "correlation matrix must be symmetric");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success) fail(ErrorCode::Invalid, "correlation matrix is not positive definite");
  chol_ = llt.matrixL();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(chol_(i, i) > 0.0)) fail(ErrorCode::Invalid, "correlation matrix is not positive definite");
    log_det_ += 2.0 * std::log(chol_(i, i));
  }
  identity_ = entries_.isIdentity(0.0);
}

CorrelationMatrix CorrelationMatrix::identity(int dim) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

CorrelationMatrix CorrelationMatrix::equicorrelated(int dim, double c) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(dim, dim, c);
  r.diagonal().setOnes();
  return CorrelationMatrix(std::move(r));
}

CorrelationMatrix CorrelationMatrix::tridiagonal(int dim, double c) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) r(i, i + 1) = r(i + 1, i) = c;
  return CorrelationMatrix(std::move(r));
}

double CorrelationMatrix::inverse_quadratic_form(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim()) fail(ErrorCode::Dimension, "inverse_quadratic_form: dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), dim());
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(zv);
  return w.squaredNorm();
}

DistributionSpec::DistributionSpec(std::vector<MarginalSpec> marginals, CorrelationMatrix correlation)
    : marginals_(std::move(marginals)), correlation_(std::move(correlation)) {
  if (static_cast<int>(marginals_.size()) != correlation_.dim()) {
    fail(ErrorCode::Dimension, "number of marginals (" + std::to_string(marginals_.size()) +
                                   ") does not match correlation dimension (" + std::to_string(correlation_.dim()) + ")");
  }
}

double copula_log_density_from_scores(std::span<const double> z, const CorrelationMatrix& c) {
  if (static_cast<int>(z.size()) != c.dim()) fail(ErrorCode::Dimension, "copula_log_density: dimension mismatch");
  if (c.is_identity()) return 0.0;
  double zz = 0.0;
  for (double v : z) zz += v * v;
  return -0.5 * c.log_det() - 0.5 * (c.inverse_quadratic_form(z) - zz);
}

double copula_log_density(std::span<const double> u, const CorrelationMatrix& c) {
  if (static_cast<int>(u.size()) != c.dim()) fail(ErrorCode::Dimension, "copula_log_density: dimension mismatch");
  std::vector<double> z(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) z[i] = std_normal_quantile(u[i]);
  return copula_log_density_from_scores(z, c);
}

double joint_log_density(std::span<const double> x, const DistributionSpec& spec) {
  const int d = spec.dim();
  if (static_cast<int>(x.size()) != d) fail(ErrorCode::Dimension, "joint_log_density: dimension mismatch");
  double marginal_sum = 0.0;
  for (int i = 0; i < d; ++i) marginal_sum += marginal_log_density(x[i], spec.marginals()[i]);
  if (spec.correlation().is_identity()) return marginal_sum;

  // Small fixed-size scratch keeps the hot path allocation-free for typical d.
  constexpr int kInline = 32;
  double inline_scores[kInline];
  std::vector<double> heap_scores;
  std::span<double> z;
  if (d <= kInline) {
    z = std::span<double>(inline_scores, d);
  } else {
    heap_scores.resize(d);
    z = heap_scores;
  }
  for (int i = 0; i < d; ++i) z[i] = marginal_normal_score(x[i], spec.marginals()[i]);
  return copula_log_density_from_scores(z, spec.correlation()) + marginal_sum;
}

SampleMatrix sample_X(std::int64_t n, const DistributionSpec& spec, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::Invalid, "sample_X: n must be at least 1");
  const int d = spec.dim();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SampleMatrix out(n, d);
  Eigen::VectorXd w(d);
  Eigen::VectorXd v(d);
  const auto& chol = spec.correlation().chol();
  for (std::int64_t row = 0; row < n; ++row) {
    for (int j = 0; j < d; ++j) w[j] = normal(gen);
    v.noalias() = chol.triangularView<Eigen::Lower>() * w;
    for (int j = 0; j < d; ++j) {
      // F^{-1}(Phi(v)) = (-log(1 - Phi(v)))^{1/alpha} with 1 - Phi(v) = Phi(-v).
      // log(1 - Phi(v)) = log Phi(-v); clamped away from 0 for v below about -38.
      const double log_s = std::min(log_std_normal_cdf(-v[j]), -std::numeric_limits<double>::denorm_min());
      out(row, j) = marginal_quantile_from_log_survival(log_s, spec.marginals()[j]);
    }
  }
  return out;
}

}  // namespace bbis
