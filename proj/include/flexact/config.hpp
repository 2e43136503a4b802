#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "flexact/activation.hpp"
#include "flexact/incidents.hpp"

namespace flexact {

/// Solver and limit parameters of a run. Every section is optional; keys
/// not listed here are rejected.
///
/// {
///   "limits":      {"v_min", "v_max", "dv_perm_lo", "dv_perm_hi", "dt_perm", "curt_price_p", "curt_price_g"},
///   "powerflow":   {"tolerance", "max_iterations", "fallback_damping"},
///   "sensitivity": {"levels", "tolerance", "snapshot"},
///   "fas":         {"kappa_v", "kappa_t", "imb_sign_normalized", "weighted_current", "degenerate_current_ratio"},
///   "activation":  {"g_v", "trust_fraction", "max_iterations", "objective_tol", "voltage_margin",
///                   "thermal_margin", "slack_penalty_factor", "angle_limit_deg", "curtailment_last"},
///   "flex":        {"p_fraction", "q_fraction"},
///   "pareto":      {"grid", "knee_fraction"},
///   "incidents":   {"scope": "all" | "load"}
/// }
struct RunConfig {
  OperatingLimits limits;
  PowerFlowOptions powerflow;
  SensitivityOptions sensitivity;
  /// "mean" (horizon-mean injections) or a step index.
  std::string snapshot = "mean";
  FasOptions fas;
  ActivationOptions activation;
  FlexRule flex;
  std::vector<double> gv_grid{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  double knee_fraction = 0.8;
  IncidentScope scope = IncidentScope::AllNodes;

  static RunConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  /// Throws InputError on out-of-range parameters.
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);

/// Parses "0,0.01,0.05" into a list of numbers. Throws InputError.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace flexact
