#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bbis/errors.hpp"
#include "bbis/estimators.hpp"

using namespace bbis;

namespace {

std::vector<WeightedLossSample> weighted(const std::vector<double>& losses, const std::vector<double>& weights) {
  std::vector<WeightedLossSample> out;
  for (std::size_t i = 0; i < losses.size(); ++i) out.push_back({losses[i], std::log(weights[i])});
  return out;
}

std::vector<WeightedLossSample> unit(const std::vector<double>& losses) {
  return weighted(losses, std::vector<double>(losses.size(), 1.0));
}

std::vector<double> one_to_ten() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }

// Exhaustive scan of the step function G over every sample value.
double brute_force_var(const std::vector<double>& losses, const std::vector<double>& w, double beta) {
  const double n = static_cast<double>(losses.size());
  double best = std::numeric_limits<double>::infinity();
  for (double candidate : losses) {
    double g = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i)
      if (losses[i] > candidate) g += w[i];
    if (g / n <= beta) best = std::min(best, candidate);
  }
  return best;
}

DistributionSpec exponential_1d() { return DistributionSpec({MarginalSpec(1.0)}, CorrelationMatrix::identity(1)); }

}  // namespace

TEST(IsCdfTail, Examples) {
  EXPECT_DOUBLE_EQ(is_cdf_tail(unit(one_to_ten()), 7.5), 0.3);
  EXPECT_EQ(is_cdf_tail(unit(one_to_ten()), 10.0), 0.0);
  EXPECT_EQ(is_cdf_tail(unit(one_to_ten()), 11.0), 0.0);
  EXPECT_NEAR(is_cdf_tail(weighted({5, 3, 1}, {0.12, 0.5, 1.0}), 4.0), 0.04, 1e-15);
  // Ties with u are not exceedances.
  EXPECT_DOUBLE_EQ(is_cdf_tail(unit(one_to_ten()), 8.0), 0.2);
}

TEST(IsVar, Examples) {
  EXPECT_EQ(is_var(weighted({5, 3, 1}, {0.12, 0.5, 1.0}), 0.1), 3.0);
  EXPECT_EQ(is_var(unit(one_to_ten()), 0.2), 8.0);
  EXPECT_EQ(is_var(unit({4.25}), 0.5), 4.25);
}

TEST(IsVar, MergesTiedLosses) {
  // G(2) = 0.25, G(1) = 0.75: the tie group at 2 moves as one unit.
  EXPECT_EQ(is_var(unit({1, 2, 2, 3}), 0.3), 2.0);
  EXPECT_EQ(is_var(unit({1, 2, 2, 3}), 0.2), 3.0);
  EXPECT_EQ(is_var(unit({2, 2, 2, 2}), 0.1), 2.0);
}

TEST(IsVar, RejectsInsufficientTailMass) {
  // (1/n) sum w = (0.01 + 0.02) / 2 = 0.015
  try {
    is_var(weighted({1, 2}, {0.01, 0.02}), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Estimation);
    EXPECT_NE(std::string(e.what()).find("beta too large"), std::string::npos);
  }
  EXPECT_THROW(is_var(unit({1.0}), 0.0), Error);
  EXPECT_THROW(is_var(unit({1.0}), 1.0), Error);
}

TEST(IsCvar, Examples) {
  EXPECT_NEAR(is_cvar(weighted({5, 3, 1}, {0.12, 0.5, 1.0}), 0.1, 3.0), 3.8, 1e-14);
  EXPECT_EQ(is_cvar(unit({1, 2, 3}), 0.1, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(is_cvar(unit(one_to_ten()), 0.2, 8.0), 9.5);
}

TEST(NaiveVarCvar, Examples) {
  const auto [v1, c1] = naive_var_cvar(one_to_ten(), 0.2);
  EXPECT_EQ(v1, 8.0);
  EXPECT_DOUBLE_EQ(c1, 9.5);
  const auto [v2, c2] = naive_var_cvar(std::vector<double>(7, 2.5), 0.05);
  EXPECT_EQ(v2, 2.5);
  EXPECT_EQ(c2, 2.5);
  const auto [v3, c3] = naive_var_cvar(std::vector<double>{1, 2}, 0.5);
  EXPECT_EQ(v3, 1.0);
  EXPECT_EQ(c3, 2.0);
}

TEST(CvarStandardError, Examples) {
  EXPECT_EQ(cvar_standard_error(unit({1, 2, 3}), 0.1, 5.0), 0.0);
  // Terms {0, 2}: sample variance 2, sqrt(2/2)/0.5.
  EXPECT_DOUBLE_EQ(cvar_standard_error(unit({4.0, 6.0}), 0.5, 4.0), 2.0);
  const auto base = weighted({5, 3, 1, 7}, {0.12, 0.5, 1.0, 0.3});
  auto scaled = base;
  for (auto& s : scaled) s.log_weight += std::log(3.0);
  EXPECT_NEAR(cvar_standard_error(scaled, 0.1, 2.0), 3.0 * cvar_standard_error(base, 0.1, 2.0), 1e-12);
  EXPECT_THROW(cvar_standard_error(unit({1.0}), 0.1, 0.0), Error);
}

TEST(WeightedSampleSet, RejectsNonFiniteLogWeights) {
  std::vector<WeightedLossSample> s{{1.0, 0.0}, {2.0, std::numeric_limits<double>::infinity()}};
  EXPECT_THROW(WeightedSampleSet{s}, Error);
}

TEST(WeightedSampleSet, ExtremeLogWeights) {
  // exp(800) overflows and exp(-800) underflows as raw doubles.
  const std::vector<WeightedLossSample> huge{{3.0, 800.0}, {2.0, 0.0}, {1.0, 0.0}};
  EXPECT_EQ(is_var(huge, 0.1), 3.0);
  EXPECT_EQ(is_cvar(huge, 0.1, 3.0), 3.0);

  const std::vector<WeightedLossSample> mixed{{3.0, -800.0}, {2.0, 0.0}, {1.0, 0.0}};
  EXPECT_EQ(is_var(mixed, 0.2), 2.0);
  EXPECT_EQ(is_cvar(mixed, 0.2, 2.0), 2.0);
  EXPECT_TRUE(std::isfinite(cvar_standard_error(mixed, 0.2, 2.0)));

  const std::vector<WeightedLossSample> tiny{{1.0, -800.0}, {2.0, -801.0}, {3.0, -802.0}};
  EXPECT_THROW(is_var(tiny, 1e-6), Error);
  const WeightedSampleSet set(tiny);
  EXPECT_EQ(set.log_scale(), -800.0);
  EXPECT_EQ(set.scaled_weights()[0], 1.0);
  EXPECT_NEAR(set.scaled_weights()[2], std::exp(-2.0), 1e-16);
}

TEST(IsVar, BruteForceEquivalence) {
  std::mt19937_64 gen(20240611);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(gen);
    std::vector<double> losses(n), w(n);
    for (int i = 0; i < n; ++i) {
      losses[i] = trial % 2 ? static_cast<double>(small(gen)) : 10.0 * unit01(gen);
      w[i] = std::exp(4.0 * unit01(gen) - 3.0);
    }
    double total = 0.0;
    for (double v : w) total += v;
    total /= n;
    const double beta = std::min(0.99, total * (0.02 + 0.96 * unit01(gen)));
    const auto samples = weighted(losses, w);
    EXPECT_EQ(is_var(samples, beta), brute_force_var(losses, w, beta)) << "trial " << trial;
  }
}

TEST(Estimators, InvariantsOnRandomSampleSets) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::uniform_int_distribution<int> dyadic(0, 400);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 5 + trial % 60;
    std::vector<double> losses(n), w(n);
    for (int i = 0; i < n; ++i) {
      losses[i] = dyadic(gen) / 8.0;  // dyadic, so shifts below are exact
      w[i] = std::exp(3.0 * unit01(gen) - 2.0);
    }
    std::vector<double> lw(n);
    for (int i = 0; i < n; ++i) lw[i] = std::log(w[i]);
    const WeightedSampleSet set(losses, lw);
    double total = 0.0;
    for (double v : w) total += v;
    total /= n;
    const double beta = std::min(0.9, total * (0.05 + 0.9 * unit01(gen)));

    const double v = is_var(set, beta);
    const double c = is_cvar(set, beta, v);
    // Self-consistency at the returned point and just below it.
    EXPECT_LE(is_cdf_tail(set, v), beta * (1.0 + 1e-12));
    EXPECT_GT(is_cdf_tail(set, std::nextafter(v, -1e300)), beta * (1.0 - 1e-12));
    EXPECT_GE(c, v);

    // Translation equivariance.
    std::vector<double> shifted(losses);
    for (auto& l : shifted) l += 16.0;
    const WeightedSampleSet shifted_set(shifted, lw);
    EXPECT_EQ(is_var(shifted_set, beta), v + 16.0);
    EXPECT_NEAR(is_cvar(shifted_set, beta, v + 16.0), c + 16.0, 1e-12 * (c + 16.0));

    // Nonincreasing in beta.
    const double beta2 = beta * 0.5;
    const double v2 = is_var(set, beta2);
    EXPECT_GE(v2, v);
    EXPECT_GE(is_cvar(set, beta2, v2), c * (1.0 - 1e-14));
  }
}

TEST(Estimators, UnitWeightsReduceToNaive) {
  std::mt19937_64 gen(123);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> losses(500);
  for (auto& l : losses) l = ex(gen);
  for (double beta : {0.3, 0.05, 0.01}) {
    const auto [v, c] = naive_var_cvar(losses, beta);
    const auto samples = unit(losses);
    EXPECT_EQ(is_var(samples, beta), v);
    EXPECT_EQ(is_cvar(samples, beta, v), c);
  }
}

TEST(Estimate, ExponentialTailOracle) {
  const double beta = 1e-6;
  const double analytic_cvar = std::log(1.0 / beta) + 1.0;
  const auto spec = exponential_1d();
  const auto loss = LossModel::linear(1);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto rep = estimate(spec, loss, ISConfig{.beta = beta, .h = 2.6, .n = 1000, .seed = seed});
    EXPECT_EQ(rep.method, Method::Importance);
    EXPECT_GE(rep.cvar_hat, rep.var_hat);
    if (std::abs(rep.cvar_hat - analytic_cvar) <= 0.05 * analytic_cvar) ++within;
  }
  EXPECT_GE(within, 45);
}

TEST(Estimate, NaiveFailsFarBeyondSampleSize) {
  const ISConfig cfg{.beta = 1e-6, .h = 2.6, .n = 1000, .seed = 5, .method = Method::Naive};
  try {
    estimate(exponential_1d(), LossModel::linear(1), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Estimation);
  }
}

TEST(Estimate, IdentityTransformReproducesNaive) {
  const auto spec = DistributionSpec({MarginalSpec(0.5), MarginalSpec(0.9), MarginalSpec(1.1)},
                                     CorrelationMatrix::equicorrelated(3, 0.1));
  const auto loss = LossModel::linear(3);
  const ISConfig naive{.beta = 0.01, .h = 2.6, .n = 2000, .seed = 9, .method = Method::Naive};
  ISConfig identity = naive;
  identity.method = Method::Importance;
  identity.forced_r = 1.0;
  const auto a = estimate(spec, loss, naive);
  const auto b = estimate(spec, loss, identity);
  EXPECT_EQ(a.var_hat, b.var_hat);
  EXPECT_EQ(a.cvar_hat, b.cvar_hat);
  EXPECT_EQ(a.cvar_se, b.cvar_se);
}

TEST(Estimate, RejectsMismatchedDimensions) {
  EXPECT_THROW(estimate(exponential_1d(), LossModel::pert(), ISConfig{}), Error);
}
