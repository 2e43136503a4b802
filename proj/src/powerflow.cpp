#include "flexact/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flexact {

bool GridState::all_converged() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepState& s) { return s.converged; });
}

int flow_direction(double v_from, double v_to) { return v_from >= v_to ? 1 : -1; }

void derive_branch_quantities(const NetworkModel& model, StepState& state) {
  const std::size_t nbr = model.num_branches();
  state.branch_power.assign(nbr, PhaseComplex{});
  state.loading.assign(nbr, PhaseReal{});
  for (std::size_t br = 0; br < nbr; ++br) {
    const auto& vf = state.voltage[model.branch_from(br)];
    const auto& vt = state.voltage[model.branch_to(br)];
    const double s_max = model.s_max_pu(br);
    for (Phase p : kPhases) {
      if (!model.branch_phases(br).contains(p)) continue;
      const std::size_t k = idx(p);
      const Complex s = vf[k] * std::conj(state.current[br][k]);
      state.branch_power[br][k] = s;
      state.loading[br][k] = flow_direction(std::abs(vf[k]), std::abs(vt[k])) * 100.0 * std::abs(s) / s_max;
    }
  }
}

namespace {

struct SweepResult {
  std::vector<PhaseComplex> voltage;
  std::vector<PhaseComplex> current;
  int iterations = 0;
  double mismatch = 0.0;
  bool converged = false;
};

SweepResult sweep(const NetworkModel& model, const NodalPower& load, double tolerance, int max_iterations,
                  double damping) {
  const std::size_t nb = model.num_buses();
  const auto& order = model.sweep_order();
  const PhaseComplex flat = nominal_phasors();

  SweepResult r;
  r.voltage.assign(nb, PhaseComplex{});
  r.current.assign(model.num_branches(), PhaseComplex{});
  std::vector<PhaseComplex> drawn(nb, PhaseComplex{});
  for (std::size_t b = 0; b < nb; ++b) {
    for (Phase p : kPhases) {
      if (model.buses()[b].phases.contains(p)) r.voltage[b][idx(p)] = flat[idx(p)];
    }
  }
  auto load_current = [&](std::size_t b, std::size_t k) { return std::conj(load[b][k] / r.voltage[b][k]); };
  for (std::size_t b = 0; b < nb; ++b) {
    for (Phase p : kPhases) {
      if (model.buses()[b].phases.contains(p)) drawn[b][idx(p)] = load_current(b, idx(p));
    }
  }

  r.mismatch = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    r.iterations = it;
    // Backward: accumulate branch currents from the leaves.
    for (auto pos = order.rbegin(); pos != order.rend(); ++pos) {
      const std::size_t b = *pos;
      const std::size_t br = model.parent_branch(b);
      if (br == NetworkModel::npos) continue;
      PhaseComplex i = drawn[b];
      for (std::size_t child : model.child_branches(b)) {
        for (std::size_t k = 0; k < 3; ++k) i[k] += r.current[child][k];
      }
      r.current[br] = i;
    }
    // Forward: Ohm's law with the coupled impedance.
    bool finite = true;
    for (std::size_t b : order) {
      const std::size_t br = model.parent_branch(b);
      if (br == NetworkModel::npos) continue;
      const auto& z = model.z_pu(br);
      const auto& up = r.voltage[model.branch_from(br)];
      for (Phase p : kPhases) {
        if (!model.buses()[b].phases.contains(p)) continue;
        const std::size_t k = idx(p);
        Complex drop{};
        for (std::size_t m = 0; m < 3; ++m) drop += z[k][m] * r.current[br][m];
        r.voltage[b][k] = up[k] - drop;
        const double mag = std::abs(r.voltage[b][k]);
        if (!std::isfinite(mag) || mag < 0.05) finite = false;
      }
    }
    if (!finite) return r;

    double mismatch = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      for (Phase p : kPhases) {
        if (!model.buses()[b].phases.contains(p)) continue;
        const std::size_t k = idx(p);
        mismatch = std::max(mismatch, std::abs(r.voltage[b][k] * std::conj(drawn[b][k]) - load[b][k]));
      }
    }
    r.mismatch = mismatch;
    if (mismatch < tolerance) {
      r.converged = true;
      return r;
    }
    if (!std::isfinite(mismatch) || mismatch > 1e6) return r;
    for (std::size_t b = 0; b < nb; ++b) {
      for (Phase p : kPhases) {
        if (!model.buses()[b].phases.contains(p)) continue;
        const std::size_t k = idx(p);
        drawn[b][k] = damping * load_current(b, k) + (1.0 - damping) * drawn[b][k];
      }
    }
  }
  return r;
}

}  // namespace

StepState solve_timestep(const NetworkModel& model, const NodalPower& load, const PowerFlowOptions& options,
                         std::size_t step) {
  if (load.size() != model.num_buses()) throw InputError("nodal power vector does not match the network");
  for (std::size_t b = 0; b < load.size(); ++b) {
    for (Phase p : kPhases) {
      const Complex s = load[b][idx(p)];
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
        throw InputError("non-finite power at bus '" + model.buses()[b].id + "' step " + std::to_string(step));
      }
      if (s != Complex{} && !model.buses()[b].phases.contains(p)) {
        throw InputError("power on absent phase at bus '" + model.buses()[b].id + "'");
      }
    }
  }

  SweepResult r = sweep(model, load, options.tolerance, options.max_iterations, 1.0);
  bool fallback = false;
  if (!r.converged) {
    fallback = true;
    SweepResult damped =
        sweep(model, load, options.tolerance, 4 * options.max_iterations, options.fallback_damping);
    if (!damped.converged) {
      std::ostringstream msg;
      msg << "power flow did not converge at step " << step << " (worst mismatch "
          << std::min(r.mismatch, damped.mismatch) << " pu after " << r.iterations << "+" << damped.iterations
          << " iterations)";
      throw PowerFlowError(msg.str(), step, std::min(r.mismatch, damped.mismatch));
    }
    r = std::move(damped);
  }

  StepState state;
  state.voltage = std::move(r.voltage);
  state.current = std::move(r.current);
  state.iterations = r.iterations;
  state.mismatch = r.mismatch;
  state.converged = true;
  state.used_fallback = fallback;
  derive_branch_quantities(model, state);
  return state;
}

GridState solve_horizon(const NetworkModel& model, const ProfileSet& profiles, const PowerFlowOptions& options) {
  GridState grid;
  grid.steps.reserve(profiles.horizon());
  for (std::size_t t = 0; t < profiles.horizon(); ++t) {
    grid.steps.push_back(solve_timestep(model, profiles.nodal_power(model, t), options, t));
  }
  return grid;
}

Complex slack_import(const NetworkModel& model, const NodalPower& load, const StepState& state) {
  const std::size_t s = model.slack();
  Complex total{};
  for (std::size_t k = 0; k < 3; ++k) {
    total += load[s][k];
    for (std::size_t br : model.child_branches(s)) total += state.voltage[s][k] * std::conj(state.current[br][k]);
  }
  return total;
}

Complex total_losses(const NetworkModel& model, const StepState& state) {
  Complex total{};
  for (std::size_t br = 0; br < model.num_branches(); ++br) {
    const auto& vf = state.voltage[model.branch_from(br)];
    const auto& vt = state.voltage[model.branch_to(br)];
    for (std::size_t k = 0; k < 3; ++k) {
      if (model.branch_phases(br).contains(kPhases[k])) total += (vf[k] - vt[k]) * std::conj(state.current[br][k]);
    }
  }
  return total;
}

double kirchhoff_residual(const NetworkModel& model, const NodalPower& load, const StepState& state) {
  Complex demand{};
  for (const auto& s : load) demand += s[0] + s[1] + s[2];
  return std::abs(slack_import(model, load, state) - demand - total_losses(model, state));
}

double max_power_mismatch(const NetworkModel& model, const NodalPower& load, const StepState& state) {
  double worst = 0.0;
  for (std::size_t b = 0; b < model.num_buses(); ++b) {
    for (Phase p : kPhases) {
      if (!model.buses()[b].phases.contains(p)) continue;
      const std::size_t k = idx(p);
      Complex drawn = model.parent_branch(b) == NetworkModel::npos ? Complex{} : state.current[model.parent_branch(b)][k];
      for (std::size_t br : model.child_branches(b)) drawn -= state.current[br][k];
      if (b == model.slack()) continue;  // slack balances by definition
      worst = std::max(worst, std::abs(state.voltage[b][k] * std::conj(drawn) - load[b][k]));
    }
  }
  return worst;
}

}  // namespace flexact
