#include "flexact/projection.hpp"

#include <cmath>

namespace flexact {

double project_loading(std::span<const IncidentFlow> branches) {
  double num = 0.0, den = 0.0;
  for (const auto& b : branches) {
    num += b.magnitude * b.direction * b.rating;
    den += b.rating;
  }
  if (!(den > 0.0)) throw InputError("cannot project loading: total incident rating is zero");
  return num / den;
}

double project_current(std::span<const IncidentFlow> branches, bool weighted) {
  if (weighted) return project_loading(branches);
  double sum = 0.0;
  for (const auto& b : branches) sum += b.direction * b.magnitude;
  return sum;
}

StepProjection project_step(const NetworkModel& model, const StepState& state, bool weighted_current) {
  StepProjection out;
  out.direction.assign(model.num_branches(), {1, 1, 1});
  for (std::size_t br = 0; br < model.num_branches(); ++br) {
    const auto& vf = state.voltage[model.branch_from(br)];
    const auto& vt = state.voltage[model.branch_to(br)];
    for (std::size_t k = 0; k < 3; ++k) out.direction[br][k] = flow_direction(std::abs(vf[k]), std::abs(vt[k]));
  }

  const auto& nps = model.node_phases();
  out.loading.assign(nps.size(), 0.0);
  out.current.assign(nps.size(), 0.0);
  std::vector<IncidentFlow> loads, currents;
  for (std::size_t n = 0; n < nps.size(); ++n) {
    const auto [bus, phase] = nps[n];
    const std::size_t k = idx(phase);
    loads.clear();
    currents.clear();
    for (std::size_t br : model.incident_branches(bus)) {
      if (!model.branch_phases(br).contains(phase)) continue;
      const double rating = model.s_max_pu(br);
      const int zeta = out.direction[br][k];
      loads.push_back({std::abs(state.loading[br][k]), zeta, rating});
      currents.push_back({std::abs(state.current[br][k]), zeta, rating});
    }
    if (loads.empty()) continue;  // isolated single-bus network
    out.loading[n] = project_loading(loads);
    out.current[n] = project_current(currents, weighted_current);
  }
  return out;
}

}  // namespace flexact
