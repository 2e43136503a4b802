#pragma once

#include <string>
#include <vector>

#include "flexact/fas.hpp"
#include "flexact/incidents.hpp"
#include "flexact/lp.hpp"

namespace flexact {

/// Raw flexibility bounds kept only where the matching FAS channel is
/// nonzero, channel by channel.
FlexLimits gate_limits(const FasField& fas, const FlexLimits& raw);

struct PriceViolation {
  std::size_t t = 0;
  std::size_t node_phase = 0;
  double lambda = 0.0;  // max(λ⁺, |λ⁻|) over P and Q
  double price = 0.0;   // the smaller curtailment price
};

/// Every (t, node_phase) whose signal is not strictly below both
/// curtailment prices. Throws InputError when a price is unset.
std::vector<PriceViolation> price_check(const FasField& fas, const OperatingLimits& limits);

/// 1.2 times the larger of the highest saturation level and the largest
/// realized |λ|.
double default_curtailment_price(const FasField& fas);

/// Copy of `limits` with unset curtailment prices filled by the default.
OperatingLimits with_default_prices(const OperatingLimits& limits, const FasField& fas);

struct ActivationOptions {
  double g_v = 0.0;
  /// Per-iteration move limit as a fraction of each variable's range.
  double trust_fraction = 0.2;
  int max_iterations = 15;
  double objective_tol = 1e-6;
  double voltage_margin = 5e-4;  // pu, inside v_min / v_max
  double thermal_margin = 0.1;   // percent, below 100 %
  /// Elastic violation penalty as a multiple of the largest curtailment price.
  double slack_penalty_factor = 1000.0;
  double angle_limit_deg = 30.0;
  /// Try a flexibility-only dispatch first and add curtailment only when it
  /// leaves residual violations.
  bool curtailment_last = false;
  /// Offer load and generation curtailment to the dispatch at all.
  bool allow_curtailment = true;
  PowerFlowOptions powerflow;
  std::string backend = "dense-simplex";
};

struct ActivationInputs {
  const NetworkModel& model;
  const ProfileSet& profiles;
  const FasField& fas;
  const FlexLimits& gated;
  const OperatingLimits& limits;  // curtailment prices set
  const SensitivityTable& nvs;
  const ThermalSensitivityTable& thermal;
};

struct IterationRecord {
  int iteration = 0;
  double lp_objective = 0.0;
  double max_slack = 0.0;
  std::size_t hard_incidents = 0;
  int lp_pivots = 0;
  bool flex_only = false;
};

/// Dispatch of one step. Quantities are per-unit magnitudes indexed by
/// node_phase: dp_up/dq_up relieve load, dp_dn/dq_dn add load.
struct StepActivation {
  std::vector<double> dp_up, dp_dn, dq_up, dq_dn, p_curt, g_curt;
  std::vector<double> theta;  // imbalance auxiliaries at the final LP, per node_phase
  /// Largest |θ − |V − V̄|| of the final LP, in the linearized model.
  double theta_gap = 0.0;
  double objective = 0.0;   // step cost with θ taken from the certified state
  double flex_cost = 0.0;
  double curtailment_cost = 0.0;
  double imbalance_cost = 0.0;
  StepState state;          // exact power flow of the dispatched injections
  std::size_t hard_incidents = 0;
  double max_angle_deviation_deg = 0.0;
  bool angle_ok = true;
  bool feasible = false;
  bool converged = false;
  std::vector<IterationRecord> log;

  bool empty() const;
  double total_curtailment() const;
};

struct ActivationResult {
  std::vector<StepActivation> steps;
  double total_objective = 0.0;
  std::vector<std::string> failures;

  bool feasible() const { return failures.empty(); }
  GridState grid_state() const;
};

/// Successive linear programming around the exact power flow of step `t`.
StepActivation solve_step(const ActivationInputs& in, std::size_t t, const ActivationOptions& options = {});

/// Independent solves for every step; failures are collected, not thrown.
ActivationResult solve_horizon(const ActivationInputs& in, const ActivationOptions& options = {});

/// Per-phase nodal power after applying a dispatch to the base injections.
NodalPower dispatched_power(const NetworkModel& model, const NodalPower& base, const StepActivation& act);

/// Σ |V_φ − V̄| over three-phase, non-slack buses.
double imbalance_deviation(const NetworkModel& model, const StepState& state);

}  // namespace flexact
