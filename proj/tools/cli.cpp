#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bbis/config.hpp"
#include "bbis/errors.hpp"
#include "bbis/harness.hpp"
#include "bbis/seeds.hpp"
#include "bbis/simd/kernels.hpp"

namespace bbis::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.3.0";

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

// Writes through a temporary file so a failed run never leaves a partial CSV.
void write_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) fail(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

const char* kReplicationHeader = "method,beta,h,n,rep,seed,var_hat,cvar_hat,cvar_se,status\n";
const char* kSummaryHeader = "method,beta,h,n,reps,rel_rmse_var,rel_rmse_cvar,mean_cvar\n";

void append_row(std::ostringstream& csv, const ReplicationRow& r) {
  csv << to_string(r.method) << ',' << fmt_double(r.beta) << ',' << fmt_opt(r.h) << ',' << r.n << ',' << r.rep << ','
      << r.seed << ',';
  if (r.status == RowStatus::Ok) {
    csv << fmt_double(r.var_hat) << ',' << fmt_double(r.cvar_hat) << ',' << fmt_double(r.cvar_se);
  } else {
    csv << ",,";
  }
  csv << ',' << to_string(r.status) << '\n';
}

void append_summary(std::ostringstream& csv, const SummaryRow& s) {
  csv << to_string(s.method) << ',' << fmt_double(s.beta) << ',' << fmt_opt(s.h) << ',' << s.n << ',' << s.reps << ','
      << fmt_opt(s.rel_rmse_var) << ',' << fmt_opt(s.rel_rmse_cvar) << ',' << fmt_opt(s.mean_cvar) << '\n';
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
  std::optional<std::string> method;
  std::vector<double> betas;
  std::optional<double> h;
};

struct Outputs {
  std::vector<std::pair<fs::path, std::string>> files;
};

void write_outputs(const Outputs& outputs, const std::string& command, const Options& opt, const RunConfig& cfg,
                   double seconds) {
  for (const auto& [path, contents] : outputs.files) write_atomically(path, contents);
  json manifest;
  manifest["artifact_version"] = kVersion;
  manifest["command"] = command;
  manifest["config_path"] = fs::absolute(opt.config).lexically_normal().string();
  manifest["resolved_config"] = cfg.resolved;
  manifest["simd"] = std::string(simd::to_string(simd::active().isa));
  manifest["wall_clock_seconds"] = seconds;
  json paths = json::array();
  for (const auto& f : outputs.files) paths.push_back(fs::absolute(f.first).lexically_normal().string());
  manifest["outputs"] = paths;
  write_atomically(fs::path(opt.out) / (command + ".manifest.json"), manifest.dump(2) + "\n");
}

int cmd_estimate(const RunConfig& cfg, const Options& opt, Outputs& outputs) {
  const ExperimentConfig& ex = cfg.experiment;
  std::ostringstream csv;
  csv << kReplicationHeader;
  bool any_failure = false;
  for (Method method : methods_of(cfg.methods)) {
    for (std::size_t bi = 0; bi < ex.betas.size(); ++bi) {
      ReplicationRow row;
      row.method = method;
      row.beta = ex.betas[bi];
      row.n = ex.n;
      row.rep = 0;
      row.seed = derive_seed(ex.base_seed, {0, bi, method == Method::Naive ? 0u : 1u, 0});
      try {
        if (method == Method::Importance) row.h = resolve_h(ex, bi);
        const EstimateReport rep = estimate(
            ex.dist, ex.loss,
            ISConfig{.beta = row.beta, .h = row.h.value_or(0.0), .n = ex.n, .seed = row.seed, .method = method});
        row.var_hat = rep.var_hat;
        row.cvar_hat = rep.cvar_hat;
        row.cvar_se = rep.cvar_se;
        std::cout << to_string(method) << "  beta=" << row.beta << "  VaR=" << rep.var_hat << "  CVaR=" << rep.cvar_hat
                  << " (se " << rep.cvar_se << ")\n";
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Estimation && e.code() != ErrorCode::Domain) throw;
        row.status = RowStatus::Failed;
        any_failure = true;
        std::cerr << to_string(method) << "  beta=" << row.beta << "  FAILED: " << e.what() << '\n';
      }
      append_row(csv, row);
    }
  }
  outputs.files.emplace_back(fs::path(opt.out) / "estimate.csv", csv.str());
  return any_failure ? kEstimationFailure : kOk;
}

int cmd_crossval(const RunConfig& cfg, const Options& opt, Outputs& outputs) {
  if (!cfg.crossval || cfg.crossval->grid.empty()) {
    std::cerr << "crossval: config has no h grid (set h.grid or crossval.grid)\n";
    return kUsage;
  }
  const auto result = cross_validate(cfg.experiment, cfg.crossval->grid, cfg.crossval->beta, cfg.experiment.cv_reps);
  std::ostringstream csv;
  csv << "beta,h,reps,cv_cvar,selected,note\n";
  for (const auto& p : result.points) {
    csv << fmt_double(cfg.crossval->beta) << ',' << fmt_double(p.h) << ',' << cfg.experiment.cv_reps << ','
        << fmt_opt(p.cv) << ',' << (p.cv && p.h == result.selected_h ? 1 : 0) << ',' << p.note << '\n';
    std::cout << "h=" << p.h << "  cv=" << (p.cv ? fmt_double(*p.cv) : std::string("-")) << "  " << p.note << '\n';
  }
  std::cout << "selected h = " << result.selected_h << '\n';
  outputs.files.emplace_back(fs::path(opt.out) / "crossval.csv", csv.str());
  return kOk;
}

int cmd_benchmark(const RunConfig& cfg, const Options& opt, Outputs& outputs) {
  const BenchmarkResult result = benchmark(cfg.experiment);
  std::ostringstream reps;
  reps << kReplicationHeader;
  for (const auto& r : result.is_table.rows) append_row(reps, r);
  for (const auto& r : result.naive_table.rows) append_row(reps, r);
  std::ostringstream summary;
  summary << kSummaryHeader;
  for (const auto& s : result.summary) {
    append_summary(summary, s);
    std::cout << to_string(s.method) << "  beta=" << s.beta << "  rel_rmse_cvar=" << fmt_opt(s.rel_rmse_cvar) << '\n';
  }
  const NaiveMatch& m = result.naive_match;
  std::ostringstream match;
  match << "beta,target_rel_rmse,matched_n,achieved_rel_rmse,status\n"
        << fmt_double(m.beta) << ',' << fmt_double(m.target_rel_rmse) << ','
        << (m.matched_n ? std::to_string(*m.matched_n) : std::string()) << ',' << fmt_opt(m.achieved_rel_rmse) << ','
        << (m.budget_exhausted ? "budget_exhausted" : "matched") << '\n';
  if (m.matched_n) {
    std::cout << "naive needs n = " << *m.matched_n << " to match IS at beta=" << m.beta << '\n';
  } else {
    std::cout << "naive did not match IS within the budget at beta=" << m.beta << '\n';
  }
  outputs.files.emplace_back(fs::path(opt.out) / "benchmark_replications.csv", reps.str());
  outputs.files.emplace_back(fs::path(opt.out) / "benchmark_summary.csv", summary.str());
  outputs.files.emplace_back(fs::path(opt.out) / "benchmark_naive_match.csv", match.str());
  return result.is_table.flagged_betas.empty() ? kOk : kEstimationFailure;
}

int cmd_varratio(const RunConfig& cfg, const Options& opt, Outputs& outputs) {
  const auto rows = variance_ratio_study(cfg.experiment);
  std::ostringstream csv;
  csv << "beta,h,cv_is,cv_naive,naive_status\n";
  for (const auto& r : rows) {
    csv << fmt_double(r.beta) << ',' << fmt_double(r.h) << ',' << fmt_opt(r.cv_is) << ',' << fmt_opt(r.cv_naive) << ','
        << (r.naive_infeasible ? "infeasible" : (r.cv_naive ? "ok" : "failed")) << '\n';
    std::cout << "beta=" << r.beta << "  cv_is=" << fmt_opt(r.cv_is)
              << "  cv_naive=" << (r.naive_infeasible ? std::string("infeasible") : fmt_opt(r.cv_naive)) << '\n';
  }
  outputs.files.emplace_back(fs::path(opt.out) / "varratio.csv", csv.str());
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Black-box importance sampling for VaR and CVaR"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string method;
  double h = 0.0;

  app.set_help_flag("--help", "Print this help message and exit");
  const auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--config", opt.config, "Experiment config (JSON) or a run manifest")->required();
    sub->add_option("--seed", seed, "Base seed; overrides the config");
    sub->add_option("--threads", threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--method", method, "is, naive or both")->check(CLI::IsMember({"is", "naive", "both"}));
    sub->add_option("--beta", opt.betas, "Tail level; repeatable, replaces the config list");
    sub->add_option("--h", h, "Fixed hyper-parameter h; replaces the config rule")->check(CLI::PositiveNumber);
  };
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "VaR/CVaR estimate per beta");
  CLI::App* crossval_cmd = app.add_subcommand("crossval", "Cross-validate h over a grid");
  CLI::App* benchmark_cmd = app.add_subcommand("benchmark", "Relative RMSE vs beta for IS and naive");
  CLI::App* varratio_cmd = app.add_subcommand("varratio", "Coefficient of variation, IS vs naive");
  for (CLI::App* sub : {estimate_cmd, crossval_cmd, benchmark_cmd, varratio_cmd}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) opt.seed = seed;
  if (chosen->count("--threads")) opt.threads = threads;
  if (chosen->count("--method")) opt.method = method;
  if (chosen->count("--h")) opt.h = h;

  ConfigOverrides overrides;
  overrides.seed = opt.seed;
  overrides.threads = opt.threads;
  if (opt.method) overrides.methods = parse_method_selection(*opt.method);
  overrides.betas = opt.betas;
  overrides.h = opt.h;

  std::optional<RunConfig> cfg;
  try {
    cfg.emplace(parse_config(opt.config, overrides));
  } catch (const Error& e) {
    std::cerr << "config error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kUsage;
  }

  const std::string command = chosen->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (!fs::is_directory(opt.out)) {
      std::cerr << "cannot create output directory '" << opt.out << "'\n";
      return kUsage;
    }
    Outputs outputs;
    int code = kOk;
    if (command == "estimate") {
      code = cmd_estimate(*cfg, opt, outputs);
    } else if (command == "crossval") {
      code = cmd_crossval(*cfg, opt, outputs);
    } else if (command == "benchmark") {
      code = cmd_benchmark(*cfg, opt, outputs);
    } else {
      code = cmd_varratio(*cfg, opt, outputs);
    }
    if (outputs.files.empty()) return code;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(outputs, command, opt, *cfg, seconds);
    return code;
  } catch (const Error& e) {
    std::cerr << command << " failed (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == ErrorCode::Estimation ? kEstimationFailure : kUsage;
  }
}

}  // namespace bbis::cli
