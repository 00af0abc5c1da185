#include "bbis/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bbis/errors.hpp"
#include "bbis/simd/kernels.hpp"
#include "bbis/transform.hpp"

namespace bbis {

WeightedSampleSet::WeightedSampleSet(std::vector<double> losses, std::span<const double> log_weights)
    : losses_(std::move(losses)) {
  if (losses_.size() != log_weights.size()) fail(ErrorCode::Dimension, "losses and log weights differ in length");
  if (losses_.empty()) fail(ErrorCode::Estimation, "no samples");
  log_scale_ = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (!std::isfinite(lw)) fail(ErrorCode::Estimation, "non-finite log likelihood ratio in sample set");
    log_scale_ = std::max(log_scale_, lw);
  }
  for (double loss : losses_) {
    if (std::isnan(loss)) fail(ErrorCode::Estimation, "loss evaluated to NaN");
  }
  scaled_.resize(log_weights.size());
  for (std::size_t i = 0; i < scaled_.size(); ++i) scaled_[i] = std::exp(log_weights[i] - log_scale_);
}

WeightedSampleSet::WeightedSampleSet(std::span<const WeightedLossSample> samples) {
  std::vector<double> losses(samples.size());
  std::vector<double> log_weights(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    losses[i] = samples[i].loss;
    log_weights[i] = samples[i].log_weight;
  }
  *this = WeightedSampleSet(std::move(losses), log_weights);
}

WeightedSampleSet WeightedSampleSet::unit_weights(std::vector<double> losses) {
  if (losses.empty()) fail(ErrorCode::Estimation, "no samples");
  WeightedSampleSet s;
  s.scaled_.assign(losses.size(), 1.0);
  s.losses_ = std::move(losses);
  s.log_scale_ = 0.0;
  return s;
}

namespace {

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    std::ostringstream msg;
    msg << "beta must lie in (0,1), got " << beta;
    fail(ErrorCode::Domain, msg.str());
  }
}

// Multiplies a sum of scaled weights back to the natural scale and divides by
// denom without forming exp(log_scale) on its own.
double rescale(double scaled_sum, double log_scale, double denom) {
  if (scaled_sum == 0.0) return 0.0;
  return std::exp(std::log(scaled_sum) + log_scale - std::log(denom));
}

}  // namespace

double is_cdf_tail(const WeightedSampleSet& s, double u) {
  const double tail = simd::tail_weight_sum(s.losses(), s.scaled_weights(), u);
  return rescale(tail, s.log_scale(), static_cast<double>(s.size()));
}

double is_var(const WeightedSampleSet& s, double beta) {
  check_beta(beta);
  const std::size_t n = s.size();
  const auto losses = s.losses();
  const auto w = s.scaled_weights();

  // G(u) <= beta  <=>  sum_{loss > u} scaled_w <= beta * n * exp(-log_scale).
  const double log_threshold = std::log(beta) + std::log(static_cast<double>(n)) - s.log_scale();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(std::log(total) > log_threshold)) {
    fail(ErrorCode::Estimation, "beta too large for sampled tail mass");
  }
  const double threshold = std::exp(log_threshold);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });

  // Walk tie groups from the top. `above` is the weight strictly above the
  // current group's value, i.e. n G(value) in scaled units.
  double above = 0.0;
  double answer = losses[order[n - 1]];
  std::size_t hi = n;
  while (hi > 0) {
    const double value = losses[order[hi - 1]];
    if (above > threshold) break;
    answer = value;
    std::size_t lo = hi;
    while (lo > 0 && losses[order[lo - 1]] == value) {
      above += w[order[lo - 1]];
      --lo;
    }
    hi = lo;
  }
  return answer;
}

double is_cvar(const WeightedSampleSet& s, double beta, double v) {
  check_beta(beta);
  const double excess = simd::excess_weighted_sum(s.losses(), s.scaled_weights(), v);
  return v + rescale(excess, s.log_scale(), static_cast<double>(s.size()) * beta);
}

double cvar_standard_error(const WeightedSampleSet& s, double beta, double v) {
  check_beta(beta);
  const std::size_t n = s.size();
  if (n < 2) fail(ErrorCode::Estimation, "cvar_standard_error needs at least 2 samples");
  const double mean = simd::excess_weighted_sum(s.losses(), s.scaled_weights(), v) / static_cast<double>(n);
  const double sq = simd::excess_centered_sq_sum(s.losses(), s.scaled_weights(), v, mean);
  const double var_scaled = sq / static_cast<double>(n - 1);
  if (var_scaled == 0.0) return 0.0;
  return std::exp(0.5 * std::log(var_scaled / static_cast<double>(n)) + s.log_scale()) / beta;
}

double is_cdf_tail(std::span<const WeightedLossSample> samples, double u) {
  return is_cdf_tail(WeightedSampleSet(samples), u);
}
double is_var(std::span<const WeightedLossSample> samples, double beta) {
  return is_var(WeightedSampleSet(samples), beta);
}
double is_cvar(std::span<const WeightedLossSample> samples, double beta, double v) {
  return is_cvar(WeightedSampleSet(samples), beta, v);
}
double cvar_standard_error(std::span<const WeightedLossSample> samples, double beta, double v) {
  return cvar_standard_error(WeightedSampleSet(samples), beta, v);
}

std::pair<double, double> naive_var_cvar(std::span<const double> losses, double beta) {
  check_beta(beta);
  const auto set = WeightedSampleSet::unit_weights(std::vector<double>(losses.begin(), losses.end()));
  const double v = is_var(set, beta);
  return {v, is_cvar(set, beta, v)};
}

std::string_view to_string(Method m) { return m == Method::Naive ? "naive" : "is"; }

void ISConfig::validate() const {
  check_beta(beta);
  if (n < 2) fail(ErrorCode::Invalid, "sample count n must be at least 2");
  if (method == Method::Importance && !forced_r && !(h > 0.0)) fail(ErrorCode::Invalid, "h must be positive");
}

WeightedSampleSet draw_weighted_losses(const DistributionSpec& dist, const LossModel& loss, const ISConfig& cfg) {
  cfg.validate();
  if (loss.dim() != dist.dim()) {
    fail(ErrorCode::Dimension, "loss dimension " + std::to_string(loss.dim()) + " does not match distribution dimension " +
                                   std::to_string(dist.dim()));
  }
  const SampleMatrix x = sample_X(cfg.n, dist, cfg.seed);
  std::vector<double> losses(static_cast<std::size_t>(cfg.n));
  if (cfg.method == Method::Naive) {
    loss.evaluate_rows(x, losses);
    return WeightedSampleSet::unit_weights(std::move(losses));
  }
  const TransformParams params = cfg.forced_r ? TransformParams::permissive(*cfg.forced_r, loss.rho())
                                              : TransformParams(extrapolation_factor(cfg.beta, cfg.h), loss.rho());
  TransformedSamples moved = apply_change_of_measure(x, dist, params);
  loss.evaluate_rows(moved.z, losses);
  return WeightedSampleSet(std::move(losses), moved.log_lr);
}

EstimateReport estimate(const DistributionSpec& dist, const LossModel& loss, const ISConfig& cfg) {
  if (cfg.method == Method::Naive && static_cast<double>(cfg.n) * cfg.beta < 1.0) {
    // The order statistic would be the sample maximum with nothing beyond it.
    fail(ErrorCode::Estimation, "no samples beyond VaR: naive estimation needs n*beta >= 1");
  }
  const WeightedSampleSet samples = draw_weighted_losses(dist, loss, cfg);
  EstimateReport report;
  report.method = cfg.method;
  report.beta = cfg.beta;
  if (cfg.method == Method::Importance) report.h = cfg.h;
  report.n = cfg.n;
  report.seed = cfg.seed;
  report.var_hat = is_var(samples, cfg.beta);
  report.cvar_hat = is_cvar(samples, cfg.beta, report.var_hat);
  report.cvar_se = cvar_standard_error(samples, cfg.beta, report.var_hat);
  return report;
}

}  // namespace bbis
