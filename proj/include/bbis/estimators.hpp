#pragma once

// VaR / CVaR estimators built on the weighted tail estimate
//   G(u) = (1/n) sum_i L_i I(loss_i > u),
// with L_i = 1 for plain Monte Carlo and the likelihood ratio for importance
// sampling. Weights are stored as exp(log_weight - max_log_weight) so that
// extreme likelihood ratios neither overflow nor underflow.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "bbis/distribution.hpp"
#include "bbis/losses.hpp"

namespace bbis {

struct WeightedLossSample {
  double loss;
  double log_weight;
};

class WeightedSampleSet {
 public:
  /// Throws ErrorCode::Estimation if any log weight is not finite.
  WeightedSampleSet(std::vector<double> losses, std::span<const double> log_weights);
  explicit WeightedSampleSet(std::span<const WeightedLossSample> samples);
  static WeightedSampleSet unit_weights(std::vector<double> losses);

  std::size_t size() const { return losses_.size(); }
  std::span<const double> losses() const { return losses_; }
  /// exp(log_weight - log_scale()).
  std::span<const double> scaled_weights() const { return scaled_; }
  double log_scale() const { return log_scale_; }

 private:
  WeightedSampleSet() = default;
  std::vector<double> losses_;
  std::vector<double> scaled_;
  double log_scale_ = 0.0;
};

double is_cdf_tail(const WeightedSampleSet& samples, double u);
double is_cdf_tail(std::span<const WeightedLossSample> samples, double u);

/// Smallest sample loss v with G(v) <= beta. Throws ErrorCode::Estimation when
/// the total weighted mass (1/n) sum L_i does not exceed beta.
double is_var(const WeightedSampleSet& samples, double beta);
double is_var(std::span<const WeightedLossSample> samples, double beta);

/// v + (1/(n beta)) sum_i L_i (loss_i - v)^+
double is_cvar(const WeightedSampleSet& samples, double beta, double v);
double is_cvar(std::span<const WeightedLossSample> samples, double beta, double v);

/// sqrt(s^2 / n) / beta where s^2 is the (n-1)-divisor sample variance of the
/// terms L_i (loss_i - v)^+. Needs n >= 2.
double cvar_standard_error(const WeightedSampleSet& samples, double beta, double v);
double cvar_standard_error(std::span<const WeightedLossSample> samples, double beta, double v);

/// Order-statistic VaR and sample-average CVaR (unit weights).
std::pair<double, double> naive_var_cvar(std::span<const double> losses, double beta);

enum class Method { Naive, Importance };

std::string_view to_string(Method m);

struct ISConfig {
  double beta = 1e-3;
  double h = 2.6;
  std::int64_t n = 1000;
  std::uint64_t seed = 0;
  Method method = Method::Importance;
  /// Test hook: bypasses extrapolation_factor and uses this r (>= 1) directly.
  std::optional<double> forced_r;

  void validate() const;
};

struct EstimateReport {
  double var_hat = 0.0;
  double cvar_hat = 0.0;
  double cvar_se = 0.0;
  Method method = Method::Importance;
  double beta = 0.0;
  std::optional<double> h;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

/// Draws X, applies the change of measure (importance) or not (naive), and
/// reports VaR, CVaR and the CVaR standard error.
EstimateReport estimate(const DistributionSpec& dist, const LossModel& loss, const ISConfig& cfg);

/// Sampled losses and weights behind an estimate, for diagnostics and tests.
WeightedSampleSet draw_weighted_losses(const DistributionSpec& dist, const LossModel& loss, const ISConfig& cfg);

}  // namespace bbis
