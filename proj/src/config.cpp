#include "bbis/config.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "bbis/errors.hpp"

namespace bbis {

using nlohmann::json;

std::vector<Method> methods_of(MethodSelection sel) {
  switch (sel) {
    case MethodSelection::Importance: return {Method::Importance};
    case MethodSelection::Naive: return {Method::Naive};
    case MethodSelection::Both: return {Method::Importance, Method::Naive};
  }
  return {};
}

std::optional<MethodSelection> parse_method_selection(std::string_view s) {
  if (s == "is" || s == "importance") return MethodSelection::Importance;
  if (s == "naive") return MethodSelection::Naive;
  if (s == "both") return MethodSelection::Both;
  return std::nullopt;
}

namespace {

std::string method_selection_name(MethodSelection m) {
  switch (m) {
    case MethodSelection::Importance: return "is";
    case MethodSelection::Naive: return "naive";
    case MethodSelection::Both: return "both";
  }
  return "is";
}

[[noreturn]] void schema(const std::string& field, const std::string& what) {
  fail(ErrorCode::Schema, field + ": " + what);
}

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  fail(ErrorCode::Invalid, field + ": " + what);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) schema(field, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) schema(field, "expected an integer");
  return v.get<std::int64_t>();
}

std::vector<double> number_list(const json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) schema(field, "expected a number or an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

const json& required(const json& obj, const char* key, const std::string& prefix) {
  if (!obj.contains(key)) schema(prefix + key, "missing required field");
  return obj.at(key);
}

}  // namespace

CorrelationMatrix correlation_from_pattern(const std::string& pattern, int dim) {
  static const std::regex named(R"(^\s*(tridiagonal|equicorrelated)\s*\(\s*([-+0-9.eE]+)\s*\)\s*$)");
  if (pattern == "identity") return CorrelationMatrix::identity(dim);
  std::smatch m;
  if (!std::regex_match(pattern, m, named)) {
    fail(ErrorCode::Schema, "unknown correlation pattern '" + pattern + "'");
  }
  double c = 0.0;
  try {
    std::size_t used = 0;
    c = std::stod(m[2].str(), &used);
    if (used != m[2].str().size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    fail(ErrorCode::Schema, "bad coefficient in correlation pattern '" + pattern + "'");
  }
  return m[1] == "tridiagonal" ? CorrelationMatrix::tridiagonal(dim, c) : CorrelationMatrix::equicorrelated(dim, c);
}

RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, "config '" + path.string() + "': " + e.what());
  }
  return parse_config_json(doc, path.parent_path(), overrides);
}

RunConfig parse_config_json(const json& input, const std::filesystem::path& base_dir, const ConfigOverrides& overrides) {
  const json& doc = input.is_object() && input.contains("resolved_config") ? input.at("resolved_config") : input;
  if (!doc.is_object()) schema("config", "top level must be an object");
  json resolved;

  // distribution
  const json& dist_doc = required(doc, "distribution", "");
  if (!dist_doc.is_object()) schema("distribution", "expected an object");
  std::vector<double> alphas = number_list(required(dist_doc, "alpha", "distribution."), "distribution.alpha");
  int dim = static_cast<int>(alphas.size());
  if (dist_doc.contains("dim")) {
    const auto d = integer(dist_doc.at("dim"), "distribution.dim");
    if (d < 1) invalid("distribution.dim", "must be at least 1");
    if (alphas.size() == 1) {
      alphas.assign(static_cast<std::size_t>(d), alphas.front());
    } else if (static_cast<std::int64_t>(alphas.size()) != d) {
      invalid("distribution.alpha", "has " + std::to_string(alphas.size()) + " entries but dim is " + std::to_string(d));
    }
    dim = static_cast<int>(d);
  }
  std::vector<MarginalSpec> marginals;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) invalid("distribution.alpha[" + std::to_string(i) + "]", "must be positive");
    marginals.emplace_back(alphas[i]);
  }

  json corr_doc = dist_doc.contains("correlation") ? dist_doc.at("correlation") : json("identity");
  std::optional<CorrelationMatrix> corr;
  try {
    if (corr_doc.is_string()) {
      corr = correlation_from_pattern(corr_doc.get<std::string>(), dim);
    } else if (corr_doc.is_array()) {
      Eigen::MatrixXd r(dim, dim);
      if (static_cast<int>(corr_doc.size()) != dim) invalid("distribution.correlation", "must be a dim x dim matrix");
      for (int i = 0; i < dim; ++i) {
        const json& row = corr_doc[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) invalid("distribution.correlation", "must be a dim x dim matrix");
        for (int j = 0; j < dim; ++j) r(i, j) = number(row[static_cast<std::size_t>(j)], "distribution.correlation");
      }
      corr.emplace(std::move(r));
    } else {
      schema("distribution.correlation", "expected a pattern string or a matrix");
    }
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind("distribution.", 0) == 0) throw;
    fail(e.code(), "distribution.correlation: " + msg);
  }
  resolved["distribution"] = {{"alpha", alphas}, {"correlation", corr_doc}};

  // loss
  const json& loss_doc = required(doc, "loss", "");
  if (!loss_doc.is_object()) schema("loss", "expected an object");
  const json& kind_doc = required(loss_doc, "kind", "loss.");
  if (!kind_doc.is_string()) schema("loss.kind", "expected a string");
  const std::string kind = kind_doc.get<std::string>();
  const double rho = loss_doc.contains("rho") ? number(loss_doc.at("rho"), "loss.rho") : 1.0;
  if (!(rho > 0.0)) invalid("loss.rho", "must be positive");
  json loss_resolved = {{"kind", kind}, {"rho", rho}};
  std::optional<LossModel> loss;
  if (kind == "pert") {
    if (dim != 7) invalid("loss.kind", "pert needs a 7-dimensional distribution, got " + std::to_string(dim));
    loss = LossModel::pert(rho);
  } else if (kind == "linear") {
    loss = LossModel::linear(dim, rho);
  } else if (kind == "relu_net") {
    ReluNetParams params;
    if (loss_doc.contains("weights")) {
      if (!loss_doc.at("weights").is_string()) schema("loss.weights", "expected a file path");
      std::filesystem::path wp = loss_doc.at("weights").get<std::string>();
      if (wp.is_relative()) wp = base_dir / wp;
      params = load_relu_params(wp);
      loss_resolved["weights"] = std::filesystem::absolute(wp).lexically_normal().string();
    } else if (loss_doc.contains("random")) {
      const json& rnd = loss_doc.at("random");
      if (!rnd.is_object()) schema("loss.random", "expected an object");
      const auto seed = static_cast<std::uint64_t>(integer(required(rnd, "seed", "loss.random."), "loss.random.seed"));
      const auto hidden = integer(required(rnd, "hidden", "loss.random."), "loss.random.hidden");
      if (hidden < 1) invalid("loss.random.hidden", "must be at least 1");
      params = random_relu_params(dim, static_cast<int>(hidden), seed);
      loss_resolved["random"] = {{"seed", seed}, {"hidden", hidden}};
    } else {
      schema("loss", "relu_net needs either 'weights' or 'random'");
    }
    if (params.d != dim) invalid("loss.weights", "network input dimension " + std::to_string(params.d) + " differs from distribution dim " + std::to_string(dim));
    loss = LossModel::relu_net(std::move(params), rho);
  } else {
    invalid("loss.kind", "unknown loss '" + kind + "' (expected pert, linear or relu_net)");
  }
  resolved["loss"] = loss_resolved;

  // method
  MethodSelection methods = MethodSelection::Importance;
  if (doc.contains("method")) {
    if (!doc.at("method").is_string()) schema("method", "expected a string");
    const auto m = parse_method_selection(doc.at("method").get<std::string>());
    if (!m) invalid("method", "expected is, naive or both");
    methods = *m;
  }
  if (overrides.methods) methods = *overrides.methods;
  resolved["method"] = method_selection_name(methods);

  // betas
  std::vector<double> betas =
      overrides.betas.empty() ? number_list(required(doc, "betas", ""), "betas") : overrides.betas;
  if (betas.empty()) invalid("betas", "at least one level required");
  for (double b : betas) {
    if (!(b > 0.0)) invalid("betas", "beta must be positive");
    if (!(b < std::exp(-1.0))) {
      std::ostringstream msg;
      msg << "beta must be < 1/e, got " << b;
      invalid("betas", msg.str());
    }
  }
  resolved["betas"] = betas;

  // h rule
  HRule h_rule = FixedH{2.6};
  json h_resolved = 2.6;
  if (overrides.h) {
    h_rule = FixedH{*overrides.h};
    h_resolved = *overrides.h;
  } else if (doc.contains("h")) {
    const json& h = doc.at("h");
    if (h.is_number()) {
      h_rule = FixedH{h.get<double>()};
      h_resolved = h;
    } else if (h.is_string() && h.get<std::string>() == "pert") {
      h_rule = AffineH{2.0, 0.6};
      h_resolved = {{"affine", {{"a", 2.0}, {"b", 0.6}}}};
    } else if (h.is_object() && h.contains("grid")) {
      h_rule = GridH{number_list(h.at("grid"), "h.grid")};
      h_resolved = {{"grid", std::get<GridH>(h_rule).grid}};
    } else if (h.is_object() && h.contains("affine")) {
      const json& a = h.at("affine");
      h_rule = AffineH{number(required(a, "a", "h.affine."), "h.affine.a"), number(required(a, "b", "h.affine."), "h.affine.b")};
      h_resolved = {{"affine", {{"a", std::get<AffineH>(h_rule).a}, {"b", std::get<AffineH>(h_rule).b}}}};
    } else {
      schema("h", "expected a number, \"pert\", {\"grid\": [...]} or {\"affine\": {\"a\", \"b\"}}");
    }
  }
  if (const auto* f = std::get_if<FixedH>(&h_rule); f && !(f->h > 0.0)) invalid("h", "must be positive");
  if (const auto* g = std::get_if<GridH>(&h_rule); g && g->grid.empty()) invalid("h.grid", "must be nonempty");
  resolved["h"] = h_resolved;

  const auto n = doc.contains("n") ? integer(doc.at("n"), "n") : 1000;
  if (n < 2) invalid("n", "must be at least 2");
  const auto reps = doc.contains("reps") ? integer(doc.at("reps"), "reps") : 50;
  if (reps < 2) invalid("reps", "must be at least 2");
  const auto cv_reps = doc.contains("cv_reps") ? integer(doc.at("cv_reps"), "cv_reps") : 20;
  if (cv_reps < 2) invalid("cv_reps", "must be at least 2");
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) schema("seed", "expected a nonnegative integer");
    seed = doc.at("seed").get<std::uint64_t>();
  }
  if (overrides.seed) seed = *overrides.seed;
  const auto budget = doc.contains("naive_budget") ? integer(doc.at("naive_budget"), "naive_budget") : std::int64_t{1} << 20;
  if (budget < n) invalid("naive_budget", "must be at least n");
  resolved["n"] = n;
  resolved["reps"] = reps;
  resolved["cv_reps"] = cv_reps;
  resolved["seed"] = seed;
  resolved["naive_budget"] = budget;

  std::optional<CrossvalSettings> crossval;
  if (doc.contains("crossval") || std::holds_alternative<GridH>(h_rule)) {
    CrossvalSettings cv{betas.front(), {}};
    if (const auto* g = std::get_if<GridH>(&h_rule)) cv.grid = g->grid;
    if (doc.contains("crossval")) {
      const json& c = doc.at("crossval");
      if (!c.is_object()) schema("crossval", "expected an object");
      if (c.contains("beta")) cv.beta = number(c.at("beta"), "crossval.beta");
      if (c.contains("grid")) cv.grid = number_list(c.at("grid"), "crossval.grid");
    }
    if (!overrides.betas.empty()) cv.beta = overrides.betas.front();
    if (!(cv.beta > 0.0 && cv.beta < std::exp(-1.0))) invalid("crossval.beta", "beta must be < 1/e and positive");
    resolved["crossval"] = {{"beta", cv.beta}, {"grid", cv.grid}};
    crossval = std::move(cv);
  }

  RunConfig out{ExperimentConfig{.dist = DistributionSpec(std::move(marginals), std::move(*corr)),
                                 .loss = std::move(*loss),
                                 .betas = std::move(betas),
                                 .n = n,
                                 .reps = static_cast<int>(reps),
                                 .h_rule = std::move(h_rule),
                                 .base_seed = seed,
                                 .cv_reps = static_cast<int>(cv_reps),
                                 .threads = overrides.threads.value_or(0),
                                 .naive_min_expected_exceedances = 5.0,
                                 .naive_budget = budget},
                methods, std::move(crossval), std::move(resolved)};
  out.experiment.validate();
  return out;
}

}  // namespace bbis
