#include "flexact/incidents.hpp"

#include <cmath>
#include <cstdio>

namespace flexact {

namespace {

std::string format_pu(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::vector<IncidentRow> IncidentReport::rows(const OperatingLimits& limits) const {
  return {
      {"Under voltage", under_voltage, percent(under_voltage), true},
      {"Voltage below " + format_pu(limits.deadband_lo()) + " pu", below_deadband, percent(below_deadband), false},
      {"Over voltage", over_voltage, percent(over_voltage), true},
      {"Voltage above " + format_pu(limits.deadband_hi()) + " pu", above_deadband, percent(above_deadband), false},
      {"Thermal overload", thermal_overload, percent(thermal_overload), true},
  };
}

namespace {

void scan_step(const StepState& step, const OperatingLimits& limits, const NetworkModel& model, IncidentScope scope,
               IncidentReport& report) {
  for (const NodePhase& np : model.node_phases()) {
    if (scope == IncidentScope::LoadNodes && !model.hosts_device(np)) continue;
    ++report.denominator;
    const double v = step.v_mag(np.bus, np.phase);
    if (v < limits.v_min) ++report.under_voltage;
    if (v < limits.deadband_lo()) ++report.below_deadband;
    if (v > limits.v_max) ++report.over_voltage;
    if (v > limits.deadband_hi()) ++report.above_deadband;
  }
  for (std::size_t br = 0; br < model.num_branches(); ++br) {
    for (Phase p : kPhases) {
      if (model.branch_phases(br).contains(p) && std::abs(step.loading[br][idx(p)]) > 100.0) ++report.thermal_overload;
    }
  }
}

}  // namespace

IncidentReport scan_incidents(const GridState& state, const OperatingLimits& limits, const NetworkModel& model,
                              IncidentScope scope) {
  IncidentReport report;
  for (const StepState& step : state.steps) scan_step(step, limits, model, scope, report);
  return report;
}

std::size_t hard_incidents(const StepState& state, const OperatingLimits& limits, const NetworkModel& model) {
  IncidentReport report;
  scan_step(state, limits, model, IncidentScope::AllNodes, report);
  return report.hard_total();
}

}  // namespace flexact
