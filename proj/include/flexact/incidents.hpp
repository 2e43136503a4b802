#pragma once

#include <string>
#include <vector>

#include "flexact/powerflow.hpp"

namespace flexact {

/// Which (phase, node) instances the voltage counters scan.
enum class IncidentScope {
  AllNodes,   // every (phase, node) present; denominator = Σ_bus |phases| × T
  LoadNodes,  // only (phase, node) pairs hosting a device
};

struct IncidentRow {
  std::string label;
  std::size_t count = 0;
  double percent = 0.0;
  bool hard = false;  // hard DSO limit; must be zero after dispatch
};

struct IncidentReport {
  std::size_t under_voltage = 0;    // V < v_min
  std::size_t below_deadband = 0;   // V < 1 - dv_perm_lo
  std::size_t over_voltage = 0;     // V > v_max
  std::size_t above_deadband = 0;   // V > 1 + dv_perm_hi
  std::size_t thermal_overload = 0; // |loading| > 100 %
  std::size_t denominator = 0;

  std::size_t hard_total() const { return under_voltage + over_voltage + thermal_overload; }
  double percent(std::size_t count) const {
    return denominator == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(denominator);
  }
  /// Rows in display order, labelled from the limits used for the scan.
  std::vector<IncidentRow> rows(const OperatingLimits& limits) const;
};

IncidentReport scan_incidents(const GridState& state, const OperatingLimits& limits, const NetworkModel& model,
                              IncidentScope scope = IncidentScope::AllNodes);

/// Hard incidents of a single step (voltage at every node, thermal at every branch).
std::size_t hard_incidents(const StepState& state, const OperatingLimits& limits, const NetworkModel& model);

}  // namespace flexact
