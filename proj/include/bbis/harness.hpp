#pragma once

// Replication experiments: repeated estimation with derived seeds, relative
// RMSE summaries, cross-validation of h, and naive-vs-IS comparisons.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bbis/distribution.hpp"
#include "bbis/estimators.hpp"
#include "bbis/losses.hpp"

namespace bbis {

struct FixedH {
  double h;
};
struct GridH {
  std::vector<double> grid;
};
/// h(beta) = a + b ln(1/beta)
struct AffineH {
  double a;
  double b;
};
using HRule = std::variant<FixedH, GridH, AffineH>;

/// 2 - 0.6 ln(beta), the schedule used for the PERT network.
double pert_h_rule(double beta);

struct ExperimentConfig {
  DistributionSpec dist;
  LossModel loss;
  std::vector<double> betas;
  std::int64_t n = 1000;
  int reps = 50;
  HRule h_rule = FixedH{2.6};
  std::uint64_t base_seed = 0;
  int cv_reps = 20;
  /// Worker threads for replications; 0 picks the hardware concurrency.
  int threads = 0;
  /// Naive runs need n * beta at least this large.
  double naive_min_expected_exceedances = 5.0;
  /// Largest n tried when searching for the naive sample count that matches IS.
  std::int64_t naive_budget = 1 << 20;

  /// Throws ErrorCode::Invalid naming the offending field.
  void validate() const;
};

enum class RowStatus { Ok, Failed, Infeasible };
std::string_view to_string(RowStatus s);

struct ReplicationRow {
  Method method = Method::Importance;
  double beta = 0.0;
  std::optional<double> h;
  std::int64_t n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double var_hat = 0.0;
  double cvar_hat = 0.0;
  double cvar_se = 0.0;
  RowStatus status = RowStatus::Ok;
  std::string message;
};

struct ReplicationTable {
  std::vector<ReplicationRow> rows;
  /// Beta levels where more than half of the replications failed.
  std::vector<double> flagged_betas;

  std::vector<double> cvar_values(double beta) const;
  std::vector<double> var_values(double beta) const;
  std::size_t failures(double beta) const;
};

/// Resolved h for one beta: fixed, affine, or cross-validated over the grid.
double resolve_h(const ExperimentConfig& cfg, std::size_t beta_index);

/// One row per (beta, replication), in that order regardless of thread count.
/// Estimation failures are recorded, not thrown. Naive runs with
/// n * beta below the feasibility guard are marked Infeasible without running.
ReplicationTable run_replications(const ExperimentConfig& cfg, Method method);

/// Same, with h pinned for every beta and the sample count overridden.
ReplicationTable run_replications(const ExperimentConfig& cfg, Method method, std::optional<double> h,
                                  std::int64_t n);

/// With a reference: sqrt(mean((v - ref)^2)) / mean(v). Without: sample
/// standard deviation over mean(v), i.e. the coefficient of variation.
double relative_rmse(std::span<const double> values, std::optional<double> reference = std::nullopt);

struct CrossValidationPoint {
  double h;
  std::optional<double> cv;  // empty when the point was skipped or failed
  std::string note;
};

struct CrossValidationResult {
  std::vector<CrossValidationPoint> points;
  double selected_h;
};

CrossValidationResult cross_validate(const ExperimentConfig& cfg, std::span<const double> grid, double beta,
                                     int reps_cv);
/// The h minimizing the CVaR coefficient of variation; ties go to the smaller h.
double cross_validate_h(const ExperimentConfig& cfg, std::span<const double> grid, double beta, int reps_cv);

struct SummaryRow {
  Method method;
  double beta;
  std::optional<double> h;
  std::int64_t n;
  int reps;         // successful replications
  std::optional<double> rel_rmse_var;
  std::optional<double> rel_rmse_cvar;
  std::optional<double> mean_cvar;
};

std::vector<SummaryRow> summarize(const ReplicationTable& table, const ExperimentConfig& cfg);

struct VarianceRatioRow {
  double beta;
  double h;
  std::optional<double> cv_is;
  std::optional<double> cv_naive;  // empty when infeasible
  bool naive_infeasible = false;
};

std::vector<VarianceRatioRow> variance_ratio_study(const ExperimentConfig& cfg);

struct NaiveMatch {
  double beta;
  double target_rel_rmse;
  std::optional<std::int64_t> matched_n;
  std::optional<double> achieved_rel_rmse;
  bool budget_exhausted = false;
};

struct BenchmarkResult {
  std::vector<SummaryRow> summary;  // IS rows for every beta, naive rows where feasible
  ReplicationTable is_table;
  ReplicationTable naive_table;
  NaiveMatch naive_match;           // at the largest beta
};

/// Doubles the naive sample count from cfg.n until its CVaR relative RMSE is
/// no worse than the IS value at the largest beta, or the budget runs out.
BenchmarkResult benchmark(const ExperimentConfig& cfg);

}  // namespace bbis
