#include "bbis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "bbis/errors.hpp"
#include "bbis/seeds.hpp"
#include "bbis/transform.hpp"

namespace bbis {
namespace {

// Stream tags keep cross-validation seeds apart from the main replications.
constexpr std::uint64_t kMainStream = 0;
constexpr std::uint64_t kCrossValidationStream = 1;

std::uint64_t method_tag(Method m) { return m == Method::Naive ? 0 : 1; }

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next.store(count);
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

bool naive_feasible(const ExperimentConfig& cfg, double beta, std::int64_t n) {
  return static_cast<double>(n) * beta >= cfg.naive_min_expected_exceedances;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double pert_h_rule(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorCode::Domain, "pert_h_rule: beta must lie in (0,1]");
  return 2.0 - 0.6 * std::log(beta);
}

void ExperimentConfig::validate() const {
  if (loss.dim() != dist.dim()) {
    fail(ErrorCode::Invalid, "loss: dimension " + std::to_string(loss.dim()) + " does not match distribution dimension " +
                                 std::to_string(dist.dim()));
  }
  if (betas.empty()) fail(ErrorCode::Invalid, "betas: at least one level required");
  for (double b : betas) {
    if (!(b > 0.0 && b < std::exp(-1.0))) {
      std::ostringstream msg;
      msg << "betas: beta must be < 1/e and positive, got " << b;
      fail(ErrorCode::Invalid, msg.str());
    }
  }
  if (n < 2) fail(ErrorCode::Invalid, "n: must be at least 2");
  if (reps < 2) fail(ErrorCode::Invalid, "reps: must be at least 2");
  if (cv_reps < 2) fail(ErrorCode::Invalid, "cv_reps: must be at least 2");
  if (threads < 0) fail(ErrorCode::Invalid, "threads: must be nonnegative");
  if (naive_budget < n) fail(ErrorCode::Invalid, "naive_budget: must be at least n");
  if (const auto* f = std::get_if<FixedH>(&h_rule); f && !(f->h > 0.0)) fail(ErrorCode::Invalid, "h: must be positive");
  if (const auto* g = std::get_if<GridH>(&h_rule); g && g->grid.empty()) fail(ErrorCode::Invalid, "h.grid: must be nonempty");
}

std::string_view to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::Failed: return "failed";
    case RowStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::vector<double> ReplicationTable::cvar_values(double beta) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.beta == beta && r.status == RowStatus::Ok) out.push_back(r.cvar_hat);
  return out;
}

std::vector<double> ReplicationTable::var_values(double beta) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.beta == beta && r.status == RowStatus::Ok) out.push_back(r.var_hat);
  return out;
}

std::size_t ReplicationTable::failures(double beta) const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const ReplicationRow& r) {
    return r.beta == beta && r.status != RowStatus::Ok;
  }));
}

double resolve_h(const ExperimentConfig& cfg, std::size_t beta_index) {
  const double beta = cfg.betas.at(beta_index);
  return std::visit(
      [&](const auto& rule) -> double {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, FixedH>) {
          return rule.h;
        } else if constexpr (std::is_same_v<Rule, AffineH>) {
          return rule.a + rule.b * std::log(1.0 / beta);
        } else {
          return cross_validate_h(cfg, rule.grid, beta, cfg.cv_reps);
        }
      },
      cfg.h_rule);
}

namespace {

ReplicationTable run_table(const ExperimentConfig& cfg, Method method, const std::vector<std::optional<double>>& hs,
                           std::int64_t n, std::uint64_t stream) {
  const std::size_t nb = cfg.betas.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  ReplicationTable table;
  table.rows.resize(nb * reps);

  parallel_for(nb * reps, cfg.threads, [&](std::size_t idx) {
    const std::size_t bi = idx / reps;
    const int rep = static_cast<int>(idx % reps);
    ReplicationRow& row = table.rows[idx];
    row.method = method;
    row.beta = cfg.betas[bi];
    row.h = hs[bi];
    row.n = n;
    row.rep = rep;
    row.seed = derive_seed(cfg.base_seed, {stream, bi, method_tag(method), static_cast<std::uint64_t>(rep)});
    if (method == Method::Naive && !naive_feasible(cfg, row.beta, n)) {
      row.status = RowStatus::Infeasible;
      row.message = "n*beta below feasibility guard";
      return;
    }
    ISConfig is_cfg{.beta = row.beta, .h = hs[bi].value_or(0.0), .n = n, .seed = row.seed, .method = method, .forced_r = std::nullopt};
    try {
      const EstimateReport rep_out = estimate(cfg.dist, cfg.loss, is_cfg);
      row.var_hat = rep_out.var_hat;
      row.cvar_hat = rep_out.cvar_hat;
      row.cvar_se = rep_out.cvar_se;
      if (!std::isfinite(row.var_hat) || !std::isfinite(row.cvar_hat)) {
        row.status = RowStatus::Failed;
        row.message = "non-finite estimate";
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Estimation) throw;
      row.status = RowStatus::Failed;
      row.message = e.what();
    }
  });

  for (double beta : cfg.betas) {
    if (2 * table.failures(beta) > reps) table.flagged_betas.push_back(beta);
  }
  return table;
}

}  // namespace

ReplicationTable run_replications(const ExperimentConfig& cfg, Method method, std::optional<double> h,
                                  std::int64_t n) {
  cfg.validate();
  std::vector<std::optional<double>> hs(cfg.betas.size());
  if (method == Method::Importance) {
    for (std::size_t i = 0; i < hs.size(); ++i) {
      hs[i] = h ? *h : resolve_h(cfg, i);
      extrapolation_factor(cfg.betas[i], *hs[i]);  // reject r <= 1 before launching work
    }
  }
  return run_table(cfg, method, hs, n, kMainStream);
}

ReplicationTable run_replications(const ExperimentConfig& cfg, Method method) {
  return run_replications(cfg, method, std::nullopt, cfg.n);
}

double relative_rmse(std::span<const double> values, std::optional<double> reference) {
  if (values.size() < 2) fail(ErrorCode::Invalid, "relative_rmse needs at least 2 values");
  const double mean = mean_of(values);
  if (mean == 0.0) fail(ErrorCode::Domain, "relative_rmse: mean is zero");
  double ss = 0.0;
  if (reference) {
    for (double v : values) ss += (v - *reference) * (v - *reference);
    return std::sqrt(ss / static_cast<double>(values.size())) / std::abs(mean);
  }
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::abs(mean);
}

CrossValidationResult cross_validate(const ExperimentConfig& cfg, std::span<const double> grid, double beta,
                                     int reps_cv) {
  if (grid.empty()) fail(ErrorCode::Invalid, "cross-validation grid is empty");
  if (reps_cv < 2) fail(ErrorCode::Invalid, "cross-validation needs at least 2 replications");

  ExperimentConfig sub = cfg;
  sub.betas = {beta};
  sub.reps = reps_cv;
  sub.h_rule = FixedH{1.0};

  CrossValidationResult result{{}, 0.0};
  std::optional<double> best_cv;
  for (double h : grid) {
    CrossValidationPoint point{h, std::nullopt, ""};
    try {
      extrapolation_factor(beta, h);
    } catch (const Error& e) {
      point.note = e.what();
      result.points.push_back(point);
      continue;
    }
    // Common random numbers: every h sees the same seeds.
    const ReplicationTable t = run_table(sub, Method::Importance, {h}, cfg.n, kCrossValidationStream);
    const auto values = t.cvar_values(beta);
    if (values.size() < 2 || 2 * t.failures(beta) > static_cast<std::size_t>(reps_cv)) {
      point.note = "too many failed replications";
    } else {
      point.cv = relative_rmse(values);
      if (!best_cv || *point.cv < *best_cv || (*point.cv == *best_cv && h < result.selected_h)) {
        best_cv = point.cv;
        result.selected_h = h;
      }
    }
    result.points.push_back(point);
  }
  if (!best_cv) fail(ErrorCode::Invalid, "cross-validation: no usable h in the grid");
  return result;
}

double cross_validate_h(const ExperimentConfig& cfg, std::span<const double> grid, double beta, int reps_cv) {
  return cross_validate(cfg, grid, beta, reps_cv).selected_h;
}

std::vector<SummaryRow> summarize(const ReplicationTable& table, const ExperimentConfig& cfg) {
  std::vector<SummaryRow> out;
  for (double beta : cfg.betas) {
    const auto first = std::find_if(table.rows.begin(), table.rows.end(),
                                    [&](const ReplicationRow& r) { return r.beta == beta; });
    if (first == table.rows.end()) continue;
    SummaryRow s{first->method, beta, first->h, first->n, 0, std::nullopt, std::nullopt, std::nullopt};
    const auto cvars = table.cvar_values(beta);
    const auto vars = table.var_values(beta);
    s.reps = static_cast<int>(cvars.size());
    if (cvars.size() >= 2) {
      s.rel_rmse_cvar = relative_rmse(cvars);
      s.rel_rmse_var = relative_rmse(vars);
      s.mean_cvar = mean_of(cvars);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<VarianceRatioRow> variance_ratio_study(const ExperimentConfig& cfg) {
  const ReplicationTable is_table = run_replications(cfg, Method::Importance);
  const ReplicationTable naive_table = run_replications(cfg, Method::Naive);
  std::vector<VarianceRatioRow> out;
  for (std::size_t i = 0; i < cfg.betas.size(); ++i) {
    const double beta = cfg.betas[i];
    VarianceRatioRow row{beta, 0.0, std::nullopt, std::nullopt, false};
    for (const auto& r : is_table.rows) {
      if (r.beta == beta) {
        row.h = r.h.value_or(0.0);
        break;
      }
    }
    if (const auto v = is_table.cvar_values(beta); v.size() >= 2) row.cv_is = relative_rmse(v);
    if (!naive_feasible(cfg, beta, cfg.n)) {
      row.naive_infeasible = true;
    } else if (const auto v = naive_table.cvar_values(beta); v.size() >= 2) {
      row.cv_naive = relative_rmse(v);
    }
    out.push_back(row);
  }
  return out;
}

BenchmarkResult benchmark(const ExperimentConfig& cfg) {
  BenchmarkResult result;
  result.is_table = run_replications(cfg, Method::Importance);
  result.naive_table = run_replications(cfg, Method::Naive);
  result.summary = summarize(result.is_table, cfg);
  for (const auto& row : summarize(result.naive_table, cfg)) {
    if (row.reps >= 2) result.summary.push_back(row);
  }

  const std::size_t top = static_cast<std::size_t>(
      std::max_element(cfg.betas.begin(), cfg.betas.end()) - cfg.betas.begin());
  const double beta = cfg.betas[top];
  NaiveMatch match{beta, 0.0, std::nullopt, std::nullopt, false};
  const auto is_cvars = result.is_table.cvar_values(beta);
  if (is_cvars.size() < 2) {
    match.budget_exhausted = true;
    result.naive_match = match;
    return result;
  }
  match.target_rel_rmse = relative_rmse(is_cvars);

  ExperimentConfig sub = cfg;
  sub.betas = {beta};
  for (std::int64_t n = cfg.n; n <= cfg.naive_budget; n *= 2) {
    if (!naive_feasible(cfg, beta, n)) continue;
    const auto values = run_replications(sub, Method::Naive, std::nullopt, n).cvar_values(beta);
    if (values.size() < 2) continue;
    const double err = relative_rmse(values);
    match.achieved_rel_rmse = err;
    if (err <= match.target_rel_rmse) {
      match.matched_n = n;
      break;
    }
  }
  match.budget_exhausted = !match.matched_n.has_value();
  result.naive_match = match;
  return result;
}

}  // namespace bbis
