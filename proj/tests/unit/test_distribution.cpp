#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/LU>

#include "bbis/distribution.hpp"
#include "bbis/errors.hpp"
#include "bbis/normal.hpp"

using namespace bbis;

namespace {

DistributionSpec independent(std::vector<double> alphas) {
  std::vector<MarginalSpec> m;
  for (double a : alphas) m.emplace_back(a);
  const int d = static_cast<int>(m.size());
  return DistributionSpec(std::move(m), CorrelationMatrix::identity(d));
}

DistributionSpec bivariate(double a1, double a2, double rho) {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, rho, rho, 1.0;
  return DistributionSpec({MarginalSpec(a1), MarginalSpec(a2)}, CorrelationMatrix(r));
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                               0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeights[] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

struct Node {
  double x;
  double w;
};

// Composite Gauss-Legendre nodes on the panels between consecutive breaks.
std::vector<Node> composite_nodes(const std::vector<double>& breaks) {
  std::vector<Node> out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
    const double half = 0.5 * (breaks[k + 1] - breaks[k]);
    for (int i = 0; i < 8; ++i) out.push_back({mid + half * kGlNodes[i], half * kGlWeights[i]});
  }
  return out;
}

// Bivariate normal CDF by one-dimensional quadrature of
//   int_{-inf}^{a} phi(t) Phi((b - rho t) / sqrt(1 - rho^2)) dt.
double bivariate_normal_cdf(double a, double b, double rho) {
  std::vector<double> breaks;
  const double lo = -12.0;
  for (int k = 0; k <= 400; ++k) breaks.push_back(lo + (a - lo) * k / 400.0);
  const double s = std::sqrt(1.0 - rho * rho);
  double sum = 0.0;
  for (const auto& [t, w] : composite_nodes(breaks)) {
    const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    sum += w * phi * 0.5 * std::erfc(-(b - rho * t) / s / std::sqrt(2.0));
  }
  return sum;
}

}  // namespace

TEST(MarginalQuantile, Examples) {
  EXPECT_NEAR(marginal_quantile(1.0 - std::exp(-1.0), MarginalSpec(0.5)), 1.0, 1e-14);
  EXPECT_NEAR(marginal_quantile(1.0 - std::exp(-2.0), MarginalSpec(0.5)), 4.0, 1e-13);
  // mpmath, 40 digits: (ln 2)^(1/1.1)
  EXPECT_NEAR(marginal_quantile(0.5, MarginalSpec(1.1)), 0.71663146655824216971, 1e-15);
}

TEST(MarginalQuantile, DomainErrors) {
  for (double u : {0.0, 1.0, -0.5, 2.0}) {
    EXPECT_THROW(marginal_quantile(u, MarginalSpec(1.0)), Error);
  }
  EXPECT_THROW(MarginalSpec(0.0), Error);
  EXPECT_THROW(MarginalSpec(-1.0), Error);
}

TEST(MarginalLogDensity, Examples) {
  EXPECT_DOUBLE_EQ(marginal_log_density(2.0, MarginalSpec(1.0)), -2.0);
  EXPECT_NEAR(marginal_log_density(4.0, MarginalSpec(0.5)), -3.386294361119890618834, 1e-14);
  EXPECT_NEAR(marginal_log_density(1.0, MarginalSpec(0.9)), std::log(0.9) - 1.0, 1e-15);
  EXPECT_THROW(marginal_log_density(0.0, MarginalSpec(1.0)), Error);
  EXPECT_THROW(marginal_log_density(-1.0, MarginalSpec(1.0)), Error);
}

TEST(MarginalQuantile, RoundTripThroughCdf) {
  // F(x) carries the information about x only while 1 - F(x) is well above
  // double resolution; beyond that the survival-space pair below takes over.
  for (double alpha : {0.5, 0.6, 0.9, 1.0, 1.1}) {
    const MarginalSpec m(alpha);
    for (double x = 1e-6; x <= 50.0; x *= 1.07) {
      if (std::pow(x, alpha) > std::log(1e6)) continue;
      EXPECT_NEAR(marginal_quantile(marginal_cdf(x, m), m), x, 1e-8 * x) << "alpha=" << alpha << " x=" << x;
    }
  }
}

TEST(MarginalQuantile, RoundTripThroughLogSurvivalOnFullRange) {
  for (double alpha : {0.5, 0.6, 0.9, 1.0, 1.1}) {
    const MarginalSpec m(alpha);
    for (double x = 1e-6; x <= 50.0; x *= 1.07) {
      EXPECT_NEAR(marginal_quantile_from_log_survival(marginal_log_survival(x, m), m), x, 1e-12 * x);
    }
  }
}

TEST(CorrelationMatrix, CholeskyReproducesEntries) {
  for (const auto& r : {CorrelationMatrix::tridiagonal(7, 0.1), CorrelationMatrix::equicorrelated(10, 0.1),
                        CorrelationMatrix::equicorrelated(4, -0.2)}) {
    const Eigen::MatrixXd back = r.chol() * r.chol().transpose();
    EXPECT_LE((back - r.entries()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.log_det(), std::log(r.entries().determinant()), 1e-12);
  }
}

TEST(CorrelationMatrix, RejectsInvalidMatrices) {
  Eigen::MatrixXd not_pd(2, 2);
  not_pd << 1.0, 1.5, 1.5, 1.0;
  EXPECT_THROW(CorrelationMatrix{not_pd}, Error);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.2, 0.1, 1.0;
  EXPECT_THROW(CorrelationMatrix{asym}, Error);
  Eigen::MatrixXd diag(2, 2);
  diag << 2.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(CorrelationMatrix{diag}, Error);
  EXPECT_THROW(DistributionSpec({MarginalSpec(1.0)}, CorrelationMatrix::identity(2)), Error);
}

TEST(CopulaLogDensity, Examples) {
  const std::vector<double> half{0.5, 0.5};
  EXPECT_EQ(copula_log_density(half, CorrelationMatrix::identity(2)), 0.0);
  EXPECT_NEAR(copula_log_density(half, CorrelationMatrix::equicorrelated(2, 0.1)), 0.0050251679267507205918, 1e-15);
  const std::vector<double> u{0.01, 0.3, 0.97, 0.5, 0.999};
  EXPECT_EQ(copula_log_density(u, CorrelationMatrix::identity(5)), 0.0);
  EXPECT_THROW(copula_log_density(std::vector<double>{0.0, 0.5}, CorrelationMatrix::identity(2)), Error);
}

TEST(JointLogDensity, Examples) {
  EXPECT_DOUBLE_EQ(joint_log_density(std::vector<double>{2.0}, independent({1.0})), -2.0);
  EXPECT_DOUBLE_EQ(joint_log_density(std::vector<double>{1.0, 2.0}, independent({1.0, 1.0})), -3.0);
  EXPECT_THROW(joint_log_density(std::vector<double>{1.0, 0.0}, independent({1.0, 1.0})), Error);
  EXPECT_THROW(joint_log_density(std::vector<double>{1.0}, independent({1.0, 1.0})), Error);
}

TEST(JointLogDensity, BivariateMatchesCdfQuadratureOracle) {
  // Density as the mixed second difference of the copula CDF, itself computed
  // by quadrature of the bivariate normal. Frozen mpmath value: -1.9846212546943720.
  const double rho = 0.1;
  const auto cdf = [&](double x1, double x2) {
    const double z1 = std_normal_quantile(1.0 - std::exp(-x1));
    const double z2 = std_normal_quantile(1.0 - std::exp(-x2));
    return bivariate_normal_cdf(z1, z2, rho);
  };
  const double h = 1e-3;
  const double mixed =
      (cdf(1 + h, 1 + h) - cdf(1 + h, 1 - h) - cdf(1 - h, 1 + h) + cdf(1 - h, 1 - h)) / (4.0 * h * h);
  const double value = joint_log_density(std::vector<double>{1.0, 1.0}, bivariate(1.0, 1.0, rho));
  EXPECT_NEAR(value, std::log(mixed), 1e-5);
  EXPECT_NEAR(value, -1.984621254694372028479, 1e-12);
}

TEST(JointLogDensity, IdentityCorrelationIsSumOfMarginals) {
  const auto spec = independent({0.5, 0.9, 1.1});
  for (double a : {0.01, 0.7, 3.0, 40.0}) {
    const std::vector<double> x{a, 2.0 * a, 0.5 * a};
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += marginal_log_density(x[i], spec.marginals()[i]);
    EXPECT_EQ(joint_log_density(x, spec), sum);
  }
}

TEST(JointLogDensity, IntegratesToOne) {
  // 1 - F(U) < 1e-8 for both marginals.
  for (double rho : {0.1, 0.5}) {
    const auto spec = bivariate(1.0, 1.1, rho);
    const double upper = 19.0;
    std::vector<double> breaks{0.0};
    for (double b = 1e-6; b < upper; b *= 1.5) breaks.push_back(b);
    breaks.push_back(upper);
    const auto nodes = composite_nodes(breaks);
    double total = 0.0;
    for (const auto& a : nodes)
      for (const auto& b : nodes) total += a.w * b.w * std::exp(joint_log_density(std::vector<double>{a.x, b.x}, spec));
    EXPECT_NEAR(total, 1.0, 1e-3) << "rho=" << rho;
  }
}

TEST(JointLogDensity, FiniteDeepInTheTail) {
  const auto spec = DistributionSpec({MarginalSpec(1.0), MarginalSpec(0.9), MarginalSpec(1.1)},
                                     CorrelationMatrix::equicorrelated(3, 0.1));
  const double v = joint_log_density(std::vector<double>{900.0, 2.0, 3000.0}, spec);
  EXPECT_TRUE(std::isfinite(v));
}

TEST(SampleX, DeterministicForFixedSeed) {
  const auto spec = DistributionSpec({MarginalSpec(0.5), MarginalSpec(1.1)}, CorrelationMatrix::equicorrelated(2, 0.1));
  const SampleMatrix a = sample_X(500, spec, 77);
  const SampleMatrix b = sample_X(500, spec, 77);
  EXPECT_TRUE((a.array() == b.array()).all());
  const SampleMatrix c = sample_X(500, spec, 78);
  EXPECT_FALSE((a.array() == c.array()).all());
  EXPECT_THROW(sample_X(0, spec, 1), Error);
}

TEST(SampleX, ExponentialMean) {
  const SampleMatrix x = sample_X(1'000'000, independent({1.0}), 12345);
  EXPECT_NEAR(x.mean(), 1.0, 0.01);
  EXPECT_GT(x.minCoeff(), 0.0);
}

TEST(SampleX, CopulaCorrelationOfNormalScores) {
  const auto spec = bivariate(1.0, 1.0, 0.1);
  const SampleMatrix x = sample_X(1'000'000, spec, 999);
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  const auto n = static_cast<double>(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z1 = marginal_normal_score(x(i, 0), spec.marginals()[0]);
    const double z2 = marginal_normal_score(x(i, 1), spec.marginals()[1]);
    s1 += z1;
    s2 += z2;
    s11 += z1 * z1;
    s22 += z2 * z2;
    s12 += z1 * z2;
  }
  const double cov = s12 / n - (s1 / n) * (s2 / n);
  const double corr = cov / std::sqrt((s11 / n - s1 * s1 / n / n) * (s22 / n - s2 * s2 / n / n));
  EXPECT_NEAR(corr, 0.1, 0.02);
}

TEST(SampleX, MarginalKolmogorovSmirnov) {
  const std::vector<double> alphas{0.5, 0.6, 0.9, 1.0, 1.1};
  std::vector<MarginalSpec> m;
  for (double a : alphas) m.emplace_back(a);
  const DistributionSpec spec(m, CorrelationMatrix::tridiagonal(5, 0.1));
  const int n = 100'000;
  const SampleMatrix x = sample_X(n, spec, 4242);
  const double critical = 1.6276 / std::sqrt(static_cast<double>(n));  // 1% level
  for (int j = 0; j < 5; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = x(i, j);
    std::sort(col.begin(), col.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = 1.0 - std::exp(-std::pow(col[i], alphas[j]));
      ks = std::max({ks, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    EXPECT_LT(ks, critical) << "alpha=" << alphas[j];
  }
}
