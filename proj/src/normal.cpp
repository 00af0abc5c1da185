#include "bbis/normal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bbis/errors.hpp"

namespace bbis {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Below this point exp(log_p) is no longer a comfortable double for the
// erfc-based refinement and the log-space solver takes over.
constexpr double kSmallestDirectP = 1e-300;

// Rational approximation of the lower half (p <= 0.5), about 1e-9 relative
// accuracy before refinement.
double rational_lower_quantile(double p, double log_p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * log_p);
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double log_std_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

// p <= 0.5 only; p is then resolved to full relative precision by erfc.
double lower_quantile(double p) {
  double x = rational_lower_quantile(p, std::log(p));
  // One Halley-corrected Newton step on Phi(x) - p.
  const double e = 0.5 * std::erfc(-x / kSqrt2) - p;
  const double u = e * std::exp(-log_std_normal_pdf(x));
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_std_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
  // Mills-ratio expansion; the truncation error is below 1e-12 for x <= -30.
  const double inv2 = 1.0 / (x * x);
  const double series = inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
  return log_std_normal_pdf(x) - std::log(-x) + std::log1p(series);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::Domain, "std_normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  if (p == 0.5) return 0.0;
  // 1 - p is exact for p >= 0.5, so the reflection costs nothing.
  if (p > 0.5) return -std_normal_quantile(1.0 - p);
  if (p < kSmallestDirectP) return std_normal_quantile_from_log(std::log(p));
  return lower_quantile(p);
}

double std_normal_quantile_from_log(double log_p) {
  if (!(log_p < 0.0)) fail(ErrorCode::Domain, "std_normal_quantile_from_log: log_p must be negative");
  static const double kLogSmallest = std::log(kSmallestDirectP);
  if (log_p > kLogSmallest) return std_normal_quantile(std::exp(log_p));

  // Newton on log Phi(x) = log_p; log Phi is concave so the iteration is
  // monotone from the tail start below.
  double x = -std::sqrt(-2.0 * log_p);
  for (int iter = 0; iter < 50; ++iter) {
    const double g = log_std_normal_cdf(x) - log_p;
    const double slope = std::exp(log_std_normal_pdf(x) - log_std_normal_cdf(x));
    const double step = g / slope;
    x -= step;
    if (std::abs(step) <= 1e-14 * std::abs(x)) break;
  }
  return x;
}

}  // namespace bbis
