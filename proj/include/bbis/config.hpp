#pragma once

// Experiment configuration files. A config is a JSON document:
//
//   {
//     "distribution": {"alpha": 0.5 | [..], "dim": 7,
//                      "correlation": "tridiagonal(0.1)" | "equicorrelated(0.1)" | "identity" | [[..]]},
//     "loss": {"kind": "pert" | "linear" | "relu_net", "rho": 1.0,
//              "weights": "net.json" | "random": {"seed": 7, "hidden": 12}},
//     "betas": [1e-6], "n": 1000, "reps": 50, "seed": 42,
//     "h": 2.6 | {"grid": [..]} | {"affine": {"a": 2, "b": 0.6}} | "pert",
//     "method": "is" | "naive" | "both",
//     "cv_reps": 20, "naive_budget": 1048576,
//     "crossval": {"beta": 1e-6, "grid": [..]}
//   }
//
// A run manifest (which embeds "resolved_config") is accepted as a config too.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbis/harness.hpp"

namespace bbis {

enum class MethodSelection { Importance, Naive, Both };

std::vector<Method> methods_of(MethodSelection sel);

struct CrossvalSettings {
  double beta;
  std::vector<double> grid;
};

struct RunConfig {
  ExperimentConfig experiment;
  MethodSelection methods = MethodSelection::Importance;
  std::optional<CrossvalSettings> crossval;
  /// Fully resolved document (defaults filled, overrides applied). Parsing it
  /// again yields the same experiment.
  nlohmann::json resolved;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<MethodSelection> methods;
  std::vector<double> betas;
  std::optional<double> h;
};

/// Errors: Io (missing file), Parse (not JSON), Schema (missing or mistyped
/// field), Invalid (value breaks an invariant). Messages name the field.
RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
RunConfig parse_config_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides = {});

/// "tridiagonal(0.1)", "equicorrelated(0.1)", "identity".
CorrelationMatrix correlation_from_pattern(const std::string& pattern, int dim);

std::optional<MethodSelection> parse_method_selection(std::string_view s);

}  // namespace bbis
