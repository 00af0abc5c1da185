#include <gtest/gtest.h>

#include <cmath>

#include "bbis/errors.hpp"
#include "bbis/normal.hpp"

using namespace bbis;

namespace {

struct QuantilePoint {
  double p;
  double x;
};

// 50-digit bisection on Phi with mpmath, rounded to 20 significant digits.
// Upper-tail entries are solved for 1 - p with p the exact double, since the
// decimal and its nearest double give quantiles that differ by up to 3e-6.
constexpr QuantilePoint kQuantiles[] = {
    {1e-300, -37.047096299361199237},   {1e-250, -33.799586172694837471},  {1e-200, -30.205594179579643063},
    {1e-150, -26.122961190593983509},   {1e-100, -21.273453560965324295},  {1e-50, -14.933337534788488981},
    {1e-30, -11.464024688443615727},    {1e-20, -9.2623400897984075737},   {1e-15, -7.941345326170996781},
    {1e-10, -6.3613409024040562047},    {1e-8, -5.6120012441747887315},    {1e-6, -4.7534243088228989482},
    {1e-4, -3.7190164854556805644},     {0.001, -3.0902323061678135415},   {0.01, -2.3263478740408411009},
    {0.02425, -1.9729610513118848503},  {0.05, -1.6448536269514727149},    {0.1, -1.281551565544600467},
    {0.25, -0.6744897501960817432},     {0.4, -0.2533471031357997988},     {0.5, 0.0},
    {0.6, 0.2533471031357997988},       {0.75, 0.6744897501960817432},     {0.9, 1.281551565544600467},
    {0.975, 1.9599639845400542355},     {0.99, 2.3263478740408411009},     {0.999, 3.0902323061678135415},
    {0.999999, 4.7534243088170877657},  {0.9999999999, 6.3613408896974218642},
    {0.999999999999, 7.0344869100478352057},
};

}  // namespace

TEST(StdNormalQuantile, MatchesHighPrecisionTable) {
  for (const auto& [p, x] : kQuantiles) {
    EXPECT_NEAR(std_normal_quantile(p), x, 1e-9) << "p = " << p;
  }
}

TEST(StdNormalQuantile, NamedExamples) {
  EXPECT_EQ(std_normal_quantile(0.5), 0.0);
  EXPECT_NEAR(std_normal_quantile(0.975), 1.959964, 1e-6);
  EXPECT_NEAR(std_normal_quantile(1e-6), -4.753424, 1e-6);
}

TEST(StdNormalQuantile, DenseSweepInvertsCdf) {
  // Central region: Phi is well conditioned, so the round trip is a fair check
  // between table points.
  for (double p = 0.001; p < 0.999; p += 0.0007) {
    const double x = std_normal_quantile(p);
    EXPECT_NEAR(std_normal_cdf(x), p, 1e-14 + 1e-12 * p);
  }
}

TEST(StdNormalQuantile, RejectsOutsideUnitInterval) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    try {
      std_normal_quantile(p);
      FAIL() << "expected a domain error for p = " << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Domain);
    }
  }
}

TEST(StdNormalQuantileFromLog, AgreesWithDirectRouteInOverlap) {
  for (double lp : {-0.1, -2.0, -30.0, -300.0, -690.0}) {
    EXPECT_NEAR(std_normal_quantile_from_log(lp), std_normal_quantile(std::exp(lp)), 1e-9);
  }
}

TEST(StdNormalQuantileFromLog, FarBeyondDoubleRange) {
  // Bisection on log Phi with mpmath.
  EXPECT_NEAR(std_normal_quantile_from_log(-700.0), -37.295079632647416957, 1e-9);
  EXPECT_NEAR(std_normal_quantile_from_log(-1000.0), -44.61574773196940302, 1e-9);
  EXPECT_NEAR(std_normal_quantile_from_log(-5000.0), -99.944748174841092478, 1e-9);
  EXPECT_NEAR(std_normal_quantile_from_log(-50000.0), -316.20665601941754992, 1e-8);
}

TEST(LogStdNormalCdf, ContinuousAcrossBranchPoints) {
  for (double x : {-30.0, 0.0}) {
    const double left = log_std_normal_cdf(std::nextafter(x, -1e300));
    const double right = log_std_normal_cdf(std::nextafter(x, 1e300));
    EXPECT_NEAR(left, right, 1e-10 * std::max(1.0, std::abs(left)));
  }
  EXPECT_NEAR(log_std_normal_cdf(10.0), -7.6198530241605260704e-24, 1e-35);
}
