#pragma once

#include <span>
#include <vector>

#include "flexact/powerflow.hpp"

namespace flexact {

/// One branch as seen from a node it touches.
struct IncidentFlow {
  double magnitude = 0.0;  // loading percent or current pu, unsigned
  int direction = 1;       // flow convention ζ ∈ {-1, +1}
  double rating = 0.0;     // branch rating (any consistent unit)
};

/// Rating-weighted signed average of incident branch loadings:
/// Σ(loading·ζ·rating) / Σ rating. Throws InputError when Σ rating is zero.
double project_loading(std::span<const IncidentFlow> branches);

/// Signed sum Σ ζ·|I| of incident branch currents. With `weighted` the
/// rating-weighted average is used instead (same form as project_loading).
double project_current(std::span<const IncidentFlow> branches, bool weighted = false);

/// Branch quantities projected onto every (bus, phase) of one time step.
struct StepProjection {
  std::vector<double> loading;                 // [node_phase], signed percent
  std::vector<double> current;                 // [node_phase], signed pu
  std::vector<std::array<int, 3>> direction;   // [branch], ζ per phase
};

StepProjection project_step(const NetworkModel& model, const StepState& state, bool weighted_current = false);

}  // namespace flexact
