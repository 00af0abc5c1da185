#include "bbis/transform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bbis/errors.hpp"

namespace bbis {

TransformParams::TransformParams(double r, double rho) : r_(r), rho_(rho) {
  if (!(r > 1.0) || !std::isfinite(r)) {
    fail(ErrorCode::Invalid, "no outward extrapolation: r must exceed 1 (increase h or decrease beta)");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::Invalid, "scaling exponent rho must be positive");
}

TransformParams TransformParams::permissive(double r, double rho) {
  if (!(r >= 1.0) || !std::isfinite(r)) fail(ErrorCode::Invalid, "r must be at least 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::Invalid, "scaling exponent rho must be positive");
  return TransformParams(Unchecked{}, r, rho);
}

double extrapolation_factor(double beta, double h) {
  if (!(beta > 0.0 && beta < std::exp(-1.0))) {
    std::ostringstream msg;
    msg << "extrapolation undefined: beta must lie in (0, 1/e), got " << beta;
    fail(ErrorCode::Domain, msg.str());
  }
  if (!(h > 0.0)) fail(ErrorCode::Domain, "extrapolation undefined: h must be positive");
  const double r = h * std::log(std::log(1.0 / beta));
  if (!(r > 1.0)) {
    std::ostringstream msg;
    msg << "no outward extrapolation: increase h or decrease beta (r = " << r << ")";
    fail(ErrorCode::Domain, msg.str());
  }
  return r;
}

int dominant_index(std::span<const double> x) {
  int best = -1;
  double best_abs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a > best_abs) {
      best_abs = a;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) fail(ErrorCode::Domain, "kappa undefined at x = 0");
  return best;
}

namespace {

// ln(1+|x_i|) for all i plus the (tie-broken) maximizer. log1p is monotone, so
// the maximizer of |x_i| is also the maximizer of ln(1+|x_i|).
struct LogMagnitudes {
  int argmax;
  double max_log;
};

LogMagnitudes log_magnitudes(std::span<const double> x, std::span<double> logs) {
  const int m = dominant_index(x);
  for (std::size_t i = 0; i < x.size(); ++i) logs[i] = std::log1p(std::abs(x[i]));
  return {m, logs[m]};
}

}  // namespace

std::vector<double> kappa(std::span<const double> x, double rho) {
  if (!(rho > 0.0)) fail(ErrorCode::Domain, "kappa: rho must be positive");
  std::vector<double> out(x.size());
  const auto lm = log_magnitudes(x, out);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= (rho * lm.max_log);
  out[lm.argmax] = 1.0 / rho;
  return out;
}

void transform_T(std::span<const double> x, const TransformParams& p, std::span<double> out) {
  if (out.size() != x.size()) fail(ErrorCode::Dimension, "transform_T: output size mismatch");
  const auto lm = log_magnitudes(x, out);
  const double log_r = std::log(p.r());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = static_cast<int>(i) == lm.argmax ? 1.0 / p.rho() : out[i] / (p.rho() * lm.max_log);
    out[i] = x[i] * std::exp(k * log_r);
  }
}

std::vector<double> transform_T(std::span<const double> x, const TransformParams& p) {
  std::vector<double> out(x.size());
  transform_T(x, p, out);
  return out;
}

double log_jacobian(std::span<const double> x, const TransformParams& p) {
  constexpr std::size_t kInline = 64;
  double inline_logs[kInline];
  std::vector<double> heap_logs;
  std::span<double> logs;
  if (x.size() <= kInline) {
    logs = std::span<double>(inline_logs, x.size());
  } else {
    heap_logs.resize(x.size());
    logs = heap_logs;
  }
  const auto lm = log_magnitudes(x, logs);
  const double log_r = std::log(p.r());
  const double slope = log_r / (p.rho() * lm.max_log);

  // log J = sum_{i != m} log Jtilde_i + log(r) * sum_i kappa_i; the dominant
  // component carries the largest Jtilde and is divided out.
  double sum_log_jtilde = 0.0;
  double sum_kappa = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(i) == lm.argmax) {
      sum_kappa += 1.0 / p.rho();
      continue;
    }
    const double a = std::abs(x[i]);
    sum_log_jtilde += std::log1p(slope * a / (1.0 + a));
    sum_kappa += logs[i] / (p.rho() * lm.max_log);
  }
  return sum_log_jtilde + log_r * sum_kappa;
}

double log_likelihood_ratio(std::span<const double> x, const DistributionSpec& spec, const TransformParams& p) {
  const std::vector<double> z = transform_T(x, p);
  return joint_log_density(z, spec) - joint_log_density(x, spec) + log_jacobian(x, p);
}

TransformedSamples apply_change_of_measure(const SampleMatrix& x, const DistributionSpec& spec,
                                           const TransformParams& p) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (d != spec.dim()) fail(ErrorCode::Dimension, "apply_change_of_measure: sample dimension mismatch");
  TransformedSamples out{SampleMatrix(n, d), std::vector<double>(static_cast<std::size_t>(n))};
  for (Eigen::Index row = 0; row < n; ++row) {
    std::span<const double> xi(x.row(row).data(), static_cast<std::size_t>(d));
    std::span<double> zi(out.z.row(row).data(), static_cast<std::size_t>(d));
    transform_T(xi, p, zi);
    out.log_lr[static_cast<std::size_t>(row)] =
        joint_log_density(zi, spec) - joint_log_density(xi, spec) + log_jacobian(xi, p);
  }
  return out;
}

}  // namespace bbis
