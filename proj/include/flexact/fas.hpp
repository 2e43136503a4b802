#pragma once

#include <vector>

#include "flexact/projection.hpp"
#include "flexact/sensitivity.hpp"

namespace flexact {

/// The four activation channels of one (bus, phase, step):
/// p_up = λ^flexP+ (ramp down, paid when load reduction helps),
/// p_dn = λ^flexP− (ramp up), q_up = λ^flexQ+ (capacitive), q_dn = λ^flexQ− (inductive).
struct FasChannels {
  double p_up = 0.0;
  double p_dn = 0.0;
  double q_up = 0.0;
  double q_dn = 0.0;

  FasChannels& operator+=(const FasChannels& o) {
    p_up += o.p_up;
    p_dn += o.p_dn;
    q_up += o.q_up;
    q_dn += o.q_dn;
    return *this;
  }
  bool is_zero() const { return p_up == 0.0 && p_dn == 0.0 && q_up == 0.0 && q_dn == 0.0; }
  double max_abs() const;

  friend bool operator==(const FasChannels&, const FasChannels&) = default;
};

/// Combined signal with its breakdown.
struct FasPoint {
  FasChannels total;
  FasChannels voltage;
  FasChannels thermal;
  FasChannels imbalance;
};

/// Saturation levels of one (bus, phase).
struct Saturation {
  double vc_p = 0.0;
  double tc_p = 0.0;
  double vc_q = 0.0;
  double tc_q = 0.0;
};

struct FasGains {
  double kappa_v = 1.0;
  double kappa_t = 1.0;
};

/// Saturation per (bus, phase) of the model, zero where no device attaches.
struct SaturationLevels {
  std::vector<Saturation> by_node_phase;
  /// Largest single saturation level over all locations and channels.
  double max_level() const;
};

/// VC^max = κ_V·|NVS_own| / max|NVS_own| (TC^max likewise with κ_T), for P
/// with NVS^P and for Q with NVS^Q. Own-location sensitivities are used.
/// Throws InputError when every P sensitivity is zero.
SaturationLevels saturation_levels(const NetworkModel& model, const SensitivityTable& nvs, const FasGains& gains);

/// Ramp pair (λ⁺, λ⁻) of a droop component.
struct DroopPair {
  double up = 0.0;
  double down = 0.0;
};

/// Piecewise-linear volt-watt style droop: zero inside the deadband, λ⁺
/// rising to `vc_max` at v_min (saturated below), λ⁻ falling to −vc_max at
/// v_max (saturated above).
DroopPair voltage_component(double v, const OperatingLimits& limits, double vc_max);

/// Thermal droop on projected signed loading (percent): zero for
/// |t| <= dt_perm; forward loading gives (+r·tc_max, −r·tc_max) with
/// r = (t − dt_perm)/(100 − dt_perm) clipped to 1; reverse loading mirrors
/// with the signs flipped.
DroopPair thermal_component(double t_proj, const OperatingLimits& limits, double tc_max);

/// Magnitude-based imbalance of one node.
struct ImbalancePoint {
  double pvur = 1.0;
  double u_v = 0.0;
  double npcur = 1.0;
  double u_i = 0.0;
  bool degenerate_v = false;
  bool degenerate_i = false;
};

struct ImbalanceOptions {
  /// Projected-current mean treated as zero when |Ī| < ratio·mean|I_φ|
  /// (or when every current is below 1e-9 pu).
  double degenerate_current_ratio = 0.1;
  /// |U| at or below this is rounding noise and reported as exactly zero.
  double balance_tolerance = 1e-12;
  /// Flip the sign of the current terms so λ⁺ >= 0 and λ⁻ <= 0 hold.
  bool sign_normalized = false;
};

/// PVUR/U_V from phase voltage magnitudes and NPCUR/U_I from projected
/// currents of a three-phase node.
std::array<ImbalancePoint, 3> node_imbalance(const PhaseReal& v_mag, const PhaseReal& i_proj,
                                             const ImbalanceOptions& options = {});

/// Imbalance metrics indexed [t][node_phase]; zero at nodes lacking a phase.
using ImbalanceField = std::vector<std::vector<ImbalancePoint>>;

ImbalanceField imbalance_metrics(const NetworkModel& model, const GridState& state,
                                 const std::vector<StepProjection>& projections, const ImbalanceOptions& options = {});

/// λ⁺_P = U_V·1(U_V>0) + U_I·1(U_I<0); λ⁻_P = U_V·1(U_V<0) + U_I·1(U_I>0);
/// Q channels use only the voltage terms. With `sign_normalized` the current
/// terms enter as −U_I on λ⁺ and −U_I on λ⁻.
FasChannels imbalance_component(const ImbalancePoint& point, bool sign_normalized = false);

/// Flexibility activation signals indexed [t][node_phase].
class FasField {
 public:
  FasField() = default;
  FasField(std::size_t horizon, std::size_t num_node_phases)
      : points_(horizon, std::vector<FasPoint>(num_node_phases)) {}

  std::size_t horizon() const { return points_.size(); }
  std::size_t num_node_phases() const { return points_.empty() ? 0 : points_.front().size(); }
  const FasPoint& at(std::size_t t, std::size_t np) const { return points_[t][np]; }
  FasPoint& at(std::size_t t, std::size_t np) { return points_[t][np]; }
  const std::vector<FasPoint>& step(std::size_t t) const { return points_[t]; }

  /// Largest |λ| over every channel, location and step.
  double max_abs() const;

  SaturationLevels saturation;

 private:
  std::vector<std::vector<FasPoint>> points_;
};

using ComponentField = std::vector<std::vector<FasChannels>>;  // [t][node_phase]

/// Elementwise sum of the three component fields, breakdown retained.
/// Throws InputError when the index sets differ.
FasField combine(const ComponentField& voltage, const ComponentField& thermal, const ComponentField& imbalance);

struct FasOptions {
  FasGains gains;
  ImbalanceOptions imbalance;
  bool weighted_current = false;
};

/// Full pipeline: projections, droop components at device locations,
/// imbalance components, combination.
FasField compute_fas(const NetworkModel& model, const GridState& state, const SensitivityTable& nvs,
                     const OperatingLimits& limits, const FasOptions& options = {});

}  // namespace flexact
