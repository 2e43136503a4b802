#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "flexact/network.hpp"

namespace flexact {

/// Complex power drawn at each bus, per phase, in per-unit (consumption
/// positive, injection negative). Indexed by bus.
using NodalPower = std::vector<PhaseComplex>;

struct ProfileSeries {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;
};

/// Time series for every profile id referenced by the devices of a model.
class ProfileSet {
 public:
  ProfileSet() = default;
  ProfileSet(std::size_t horizon, double step_minutes, std::map<std::string, ProfileSeries> series);

  std::size_t horizon() const { return horizon_; }
  double step_minutes() const { return step_minutes_; }
  const std::map<std::string, ProfileSeries>& series() const { return series_; }
  const ProfileSeries& profile(const std::string& id) const;

  /// Active/reactive power of one device at step t, kW / kvar (whole device, all phases).
  double device_p_kw(const Device& dev, std::size_t t) const { return profile(dev.p_profile).p_kw.at(t); }
  double device_q_kvar(const Device& dev, std::size_t t) const { return profile(dev.q_profile).q_kvar.at(t); }

  /// Per-phase complex power of every bus at step t, per-unit. Three-phase
  /// devices split their power equally across phases; devices sharing a
  /// bus are summed.
  NodalPower nodal_power(const NetworkModel& model, std::size_t t) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  /// Writes the long-format CSV accepted by load_profiles.
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t horizon_ = 0;
  double step_minutes_ = 60.0;
  std::map<std::string, ProfileSeries> series_;
  std::vector<std::string> warnings_;
};

/// Reads `device_id,t,p_kw,q_kvar` rows (t is 0-based). A comment line
/// `# step_minutes=<m>` sets the step duration (default 60).
ProfileSet load_profiles(const std::filesystem::path& path, const NetworkModel& model);
ProfileSet parse_profiles(std::istream& in, const NetworkModel& model, const std::string& origin = "profiles");

/// Load and generation available for curtailment at one (bus, phase) and step, per-unit.
struct CurtailmentBounds {
  double load = 0.0;        // P^d: positive part of device power
  double generation = 0.0;  // P^g: magnitude of the negative part
};

/// Curtailment bounds indexed [t][node_phase_index].
std::vector<std::vector<CurtailmentBounds>> curtailment_bounds(const NetworkModel& model, const ProfileSet& profiles);

}  // namespace flexact
