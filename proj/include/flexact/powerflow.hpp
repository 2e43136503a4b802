#pragma once

#include <vector>

#include "flexact/limits.hpp"

namespace flexact {

struct PowerFlowOptions {
  double tolerance = 1e-8;  // max nodal complex-power mismatch, pu
  int max_iterations = 100;
  /// Relaxation factor of the current-injection fallback.
  double fallback_damping = 0.5;
};

/// Converged phasors of one time step, per-unit.
struct StepState {
  std::vector<PhaseComplex> voltage;        // [bus]
  std::vector<PhaseComplex> current;        // [branch], from upstream to downstream bus
  std::vector<PhaseComplex> branch_power;   // [branch], sending-end complex power
  std::vector<PhaseReal> loading;           // [branch], signed percent of s_max
  int iterations = 0;
  double mismatch = 0.0;
  bool converged = false;
  bool used_fallback = false;

  double v_mag(std::size_t bus, Phase p) const { return std::abs(voltage[bus][idx(p)]); }
  double v_angle(std::size_t bus, Phase p) const { return std::arg(voltage[bus][idx(p)]); }
};

/// Per-step solutions over a horizon.
struct GridState {
  std::vector<StepState> steps;

  std::size_t horizon() const { return steps.size(); }
  bool all_converged() const;
};

class PowerFlowError : public SolverError {
 public:
  PowerFlowError(const std::string& what, std::size_t step, double worst_mismatch)
      : SolverError(what), step_(step), worst_mismatch_(worst_mismatch) {}
  std::size_t step() const { return step_; }
  double worst_mismatch() const { return worst_mismatch_; }

 private:
  std::size_t step_;
  double worst_mismatch_;
};

/// Flow convention of a branch from voltage magnitudes: +1 when the upstream
/// voltage is at least the downstream voltage, otherwise -1.
int flow_direction(double v_from, double v_to);

/// Fills branch_power and the signed loading from voltage and current.
void derive_branch_quantities(const NetworkModel& model, StepState& state);

/// Backward/forward sweep on the radial tree with full 3x3 coupled branch
/// impedances and constant-power loads, flat start. Falls back to a damped
/// fixed-point current injection when the plain sweep does not converge.
/// `step` only labels diagnostics. Throws PowerFlowError.
StepState solve_timestep(const NetworkModel& model, const NodalPower& load, const PowerFlowOptions& options = {},
                         std::size_t step = 0);

/// Solves every step of the horizon independently.
GridState solve_horizon(const NetworkModel& model, const ProfileSet& profiles, const PowerFlowOptions& options = {});

/// Complex power imported from the slack bus, summed over phases.
Complex slack_import(const NetworkModel& model, const NodalPower& load, const StepState& state);
/// Series losses summed over branches and phases.
Complex total_losses(const NetworkModel& model, const StepState& state);
/// |slack import - total load - losses|.
double kirchhoff_residual(const NetworkModel& model, const NodalPower& load, const StepState& state);
/// Largest |V_i * conj(I_drawn,i) - S_i| over buses and phases.
double max_power_mismatch(const NetworkModel& model, const NodalPower& load, const StepState& state);

}  // namespace flexact
