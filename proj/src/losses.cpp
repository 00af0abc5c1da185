#include "bbis/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bbis/errors.hpp"
#include "bbis/simd/kernels.hpp"

namespace bbis {

using nlohmann::json;

void ReluNetParams::validate() const {
  if (d < 1 || hidden < 1) fail(ErrorCode::Dimension, "relu net: d and h must be at least 1");
  const auto expect = [](std::size_t got, std::size_t want, const char* field) {
    if (got != want) {
      std::ostringstream msg;
      msg << "relu net: " << field << " has " << got << " entries, expected " << want;
      fail(ErrorCode::Dimension, msg.str());
    }
  };
  expect(w1.size(), static_cast<std::size_t>(d) * hidden, "W1");
  expect(b1.size(), static_cast<std::size_t>(hidden), "b1");
  expect(w2.size(), static_cast<std::size_t>(hidden), "w2");
}

double eval_pert(std::span<const double> x) {
  if (x.size() != 7) fail(ErrorCode::Dimension, "PERT loss needs a 7-vector, got " + std::to_string(x.size()));
  return x[0] + x[6] + std::max(x[4] + std::max(x[1], x[2]), x[5] + std::max(x[3], x[2]));
}

double eval_linear(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double eval_relu_net(std::span<const double> x, const ReluNetParams& p) {
  if (static_cast<int>(x.size()) != p.d) {
    fail(ErrorCode::Dimension, "relu net expects dimension " + std::to_string(p.d) + ", got " + std::to_string(x.size()));
  }
  double out = p.b2;
  for (int j = 0; j < p.hidden; ++j) {
    double pre = p.b1[j];
    for (int k = 0; k < p.d; ++k) pre += p.w1[static_cast<std::size_t>(j) * p.d + k] * x[k];
    out += p.w2[j] * std::max(pre, 0.0);
  }
  return out;
}

namespace {

std::vector<double> number_array(const json& doc, const char* field) {
  if (!doc.contains(field)) fail(ErrorCode::Schema, std::string("relu weights: missing field '") + field + "'");
  const json& arr = doc.at(field);
  if (!arr.is_array()) fail(ErrorCode::Schema, std::string("relu weights: field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) fail(ErrorCode::Schema, std::string("relu weights: field '") + field + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

int positive_int(const json& dims, const char* field) {
  if (!dims.contains(field) || !dims.at(field).is_number_integer()) {
    fail(ErrorCode::Schema, std::string("relu weights: dims.") + field + " must be an integer");
  }
  return dims.at(field).get<int>();
}

}  // namespace

ReluNetParams load_relu_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open relu weights file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, "relu weights '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Schema, "relu weights: top level must be an object");
  if (!doc.contains("dims") || !doc.at("dims").is_object()) fail(ErrorCode::Schema, "relu weights: missing object 'dims'");

  ReluNetParams p;
  p.d = positive_int(doc.at("dims"), "d");
  p.hidden = positive_int(doc.at("dims"), "h");
  p.w1 = number_array(doc, "W1");
  p.b1 = number_array(doc, "b1");
  p.w2 = number_array(doc, "w2");
  if (!doc.contains("b2") || !doc.at("b2").is_number()) fail(ErrorCode::Schema, "relu weights: 'b2' must be a number");
  p.b2 = doc.at("b2").get<double>();
  p.validate();
  return p;
}

void save_relu_params(const ReluNetParams& p, const std::filesystem::path& path) {
  p.validate();
  json doc;
  doc["dims"] = {{"d", p.d}, {"h", p.hidden}};
  doc["W1"] = p.w1;
  doc["b1"] = p.b1;
  doc["w2"] = p.w2;
  doc["b2"] = p.b2;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write relu weights file '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

ReluNetParams random_relu_params(int d, int hidden, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ReluNetParams p;
  p.d = d;
  p.hidden = hidden;
  p.w1.resize(static_cast<std::size_t>(d) * hidden);
  for (auto& w : p.w1) w = uniform(gen);
  p.b1.resize(hidden);
  for (auto& b : p.b1) b = uniform(gen);
  p.w2.resize(hidden);
  for (auto& w : p.w2) w = std::abs(normal(gen));
  p.b2 = 0.0;
  p.validate();
  return p;
}

LossModel::LossModel(Kind kind, int dim, double rho, std::string name)
    : kind_(kind), dim_(dim), rho_(rho), name_(std::move(name)) {
  if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::Invalid, "loss scaling exponent rho must be positive");
  if (dim < 1) fail(ErrorCode::Invalid, "loss dimension must be at least 1");
}

LossModel LossModel::pert(double rho) { return LossModel(Kind::Pert7, 7, rho, "pert"); }

LossModel LossModel::linear(int dim, double rho) { return LossModel(Kind::Linear, dim, rho, "linear"); }

LossModel LossModel::relu_net(ReluNetParams params, double rho) {
  params.validate();
  LossModel m(Kind::ReluNet, params.d, rho, "relu_net");
  auto w1t = std::make_shared<std::vector<double>>(params.w1.size());
  for (int j = 0; j < params.hidden; ++j)
    for (int k = 0; k < params.d; ++k)
      (*w1t)[static_cast<std::size_t>(k) * params.hidden + j] = params.w1[static_cast<std::size_t>(j) * params.d + k];
  m.relu_w1t_ = std::move(w1t);
  m.relu_ = std::make_shared<const ReluNetParams>(std::move(params));
  return m;
}

LossModel LossModel::external(BlackBox fn, int dim, double rho, std::string name) {
  if (!fn) fail(ErrorCode::Invalid, "external loss needs a callable");
  LossModel m(Kind::External, dim, rho, std::move(name));
  m.external_ = std::make_shared<const BlackBox>(std::move(fn));
  return m;
}

double LossModel::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    fail(ErrorCode::Dimension, name_ + " loss expects dimension " + std::to_string(dim_) + ", got " + std::to_string(x.size()));
  }
  switch (kind_) {
    case Kind::Pert7: return eval_pert(x);
    case Kind::Linear: return eval_linear(x);
    case Kind::ReluNet: return eval_relu_net(x, *relu_);
    case Kind::External: return (*external_)(x);
  }
  return 0.0;
}

void LossModel::evaluate_rows(const SampleMatrix& x, std::span<double> out) const {
  if (x.cols() != dim_) fail(ErrorCode::Dimension, name_ + " loss: sample dimension mismatch");
  if (static_cast<std::size_t>(x.rows()) != out.size()) fail(ErrorCode::Dimension, "evaluate_rows: output size mismatch");
  const auto rows = static_cast<std::size_t>(x.rows());
  const auto cols = static_cast<std::size_t>(x.cols());
  switch (kind_) {
    case Kind::Linear:
      simd::active().row_sums(x.data(), rows, cols, out.data());
      return;
    case Kind::ReluNet:
      simd::active().relu_forward(x.data(), rows, cols, relu_w1t_->data(), relu_->b1.data(), relu_->w2.data(),
                                  static_cast<std::size_t>(relu_->hidden), relu_->b2, out.data());
      return;
    case Kind::Pert7:
    case Kind::External:
      for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(std::span<const double>(x.row(r).data(), cols));
      return;
  }
}

std::string_view to_string(LossModel::Kind kind) {
  switch (kind) {
    case LossModel::Kind::Pert7: return "pert";
    case LossModel::Kind::Linear: return "linear";
    case LossModel::Kind::ReluNet: return "relu_net";
    case LossModel::Kind::External: return "external";
  }
  return "unknown";
}

}  // namespace bbis
