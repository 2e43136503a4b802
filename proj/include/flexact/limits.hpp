#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "flexact/profiles.hpp"

namespace flexact {

/// Voltage/thermal limits and deadbands, per-unit and percent.
struct OperatingLimits {
  double v_min = 0.90;
  double v_max = 1.10;
  double dv_perm_lo = 0.04;  // deadband half-width below 1 pu
  double dv_perm_hi = 0.03;  // deadband half-width above 1 pu
  double dt_perm = 80.0;     // thermal deadband, percent loading
  /// Curtailment prices. When unset they default to 1.2 times the largest
  /// FAS magnitude (see default_curtailment_price).
  std::optional<double> curt_price_p;
  std::optional<double> curt_price_g;

  double deadband_lo() const { return 1.0 - dv_perm_lo; }
  double deadband_hi() const { return 1.0 + dv_perm_hi; }

  /// Throws InputError unless 0 < v_min < 1-dv_lo < 1 < 1+dv_hi < v_max,
  /// 0 < dt_perm < 100 and any explicit price is positive.
  void validate() const;
};

/// Raw flexibility range at one (bus, phase, step), per-unit.
struct FlexBounds {
  double p_max = 0.0;  // >= 0, ramp down (injection)
  double p_min = 0.0;  // <= 0, ramp up (consumption)
  double q_max = 0.0;  // >= 0, capacitive
  double q_min = 0.0;  // <= 0, inductive

  friend bool operator==(const FlexBounds&, const FlexBounds&) = default;
};

/// Flexibility ranges indexed [t][node_phase_index]; zero where no device attaches.
class FlexLimits {
 public:
  FlexLimits() = default;
  FlexLimits(std::size_t horizon, std::size_t num_node_phases)
      : bounds_(horizon, std::vector<FlexBounds>(num_node_phases)) {}

  std::size_t horizon() const { return bounds_.size(); }
  const FlexBounds& at(std::size_t t, std::size_t np) const { return bounds_[t][np]; }
  FlexBounds& at(std::size_t t, std::size_t np) { return bounds_[t][np]; }
  const std::vector<FlexBounds>& step(std::size_t t) const { return bounds_[t]; }

  /// Multiplies every bound by `factor` (>= 0).
  FlexLimits scaled(double factor) const;

  /// Throws InputError on sign violations or nonzero bounds at device-free locations.
  void validate(const NetworkModel& model) const;

 private:
  std::vector<std::vector<FlexBounds>> bounds_;
};

/// Default rule: each device offers a symmetric P range of `p_fraction` of
/// its peak |P| over the horizon (and `q_fraction` of its peak |Q| for Q),
/// split equally across its phases, constant in time.
struct FlexRule {
  double p_fraction = 0.5;
  double q_fraction = 0.0;
};

FlexLimits default_flex_limits(const NetworkModel& model, const ProfileSet& profiles, const FlexRule& rule);

/// Reads `device_id,t,p_max_kw,p_min_kw,q_max_kvar,q_min_kvar`. Devices
/// without rows offer no flexibility.
FlexLimits load_flex_limits(const std::filesystem::path& path, const NetworkModel& model, const ProfileSet& profiles);

}  // namespace flexact
