#pragma once

// Loss models L(x) evaluated as black boxes by the estimators. Each carries
// the scaling exponent rho with which it grows along rays.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bbis/distribution.hpp"

namespace bbis {

struct ReluNetParams {
  int d = 0;
  int hidden = 0;
  std::vector<double> w1;  // hidden x d, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  /// Throws ErrorCode::Dimension on inconsistent shapes.
  void validate() const;
};

/// x1 + x7 + max{x5 + max{x2, x3}, x6 + max{x4, x3}}
double eval_pert(std::span<const double> x);
double eval_linear(std::span<const double> x);
double eval_relu_net(std::span<const double> x, const ReluNetParams& p);

/// Reads the JSON weights file {"dims": {"d", "h"}, "W1", "b1", "w2", "b2"}.
/// Errors: Io (missing/unreadable), Parse (not JSON), Schema (missing or
/// mistyped field), Dimension (shapes disagree).
ReluNetParams load_relu_params(const std::filesystem::path& path);
void save_relu_params(const ReluNetParams& p, const std::filesystem::path& path);

/// Seeded synthetic network: first-layer weights and biases uniform on
/// (-1, 1), nonnegative output weights |N(0,1)|, zero output bias.
ReluNetParams random_relu_params(int d, int hidden, std::uint64_t seed);

class LossModel {
 public:
  enum class Kind { Pert7, Linear, ReluNet, External };
  using BlackBox = std::function<double(std::span<const double>)>;

  static LossModel pert(double rho = 1.0);
  static LossModel linear(int dim, double rho = 1.0);
  static LossModel relu_net(ReluNetParams params, double rho = 1.0);
  /// Deterministic user-supplied loss; rho must be given explicitly.
  static LossModel external(BlackBox fn, int dim, double rho, std::string name = "external");

  Kind kind() const { return kind_; }
  double rho() const { return rho_; }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const ReluNetParams* relu_params() const { return relu_.get(); }

  double operator()(std::span<const double> x) const;

  /// out[i] = L(row i); batched through the SIMD kernels where the loss allows.
  void evaluate_rows(const SampleMatrix& x, std::span<double> out) const;

 private:
  struct ReluState;
  LossModel(Kind kind, int dim, double rho, std::string name);

  Kind kind_;
  int dim_;
  double rho_;
  std::string name_;
  std::shared_ptr<const ReluNetParams> relu_;
  std::shared_ptr<const std::vector<double>> relu_w1t_;
  std::shared_ptr<const BlackBox> external_;
};

std::string_view to_string(LossModel::Kind kind);

}  // namespace bbis
