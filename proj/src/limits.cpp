#include "flexact/limits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace flexact {

void OperatingLimits::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(v_min) || !finite(v_max) || !finite(dv_perm_lo) || !finite(dv_perm_hi) || !finite(dt_perm)) {
    throw InputError("operating limits must be finite");
  }
  if (!(0.0 < v_min && v_min < deadband_lo() && deadband_lo() < 1.0 && 1.0 < deadband_hi() && deadband_hi() < v_max)) {
    throw InputError("operating limits must satisfy 0 < v_min < 1-dv_perm_lo < 1 < 1+dv_perm_hi < v_max");
  }
  if (!(0.0 < dt_perm && dt_perm < 100.0)) throw InputError("dt_perm must lie in (0, 100)");
  if (curt_price_p && !(*curt_price_p > 0.0)) throw InputError("load curtailment price must be positive");
  if (curt_price_g && !(*curt_price_g > 0.0)) throw InputError("generation curtailment price must be positive");
}

FlexLimits FlexLimits::scaled(double factor) const {
  FlexLimits out = *this;
  for (auto& step : out.bounds_) {
    for (auto& b : step) {
      b.p_max *= factor;
      b.p_min *= factor;
      b.q_max *= factor;
      b.q_min *= factor;
    }
  }
  return out;
}

void FlexLimits::validate(const NetworkModel& model) const {
  for (std::size_t t = 0; t < bounds_.size(); ++t) {
    if (bounds_[t].size() != model.node_phases().size()) throw InputError("flexibility limits do not match the network");
    for (std::size_t k = 0; k < bounds_[t].size(); ++k) {
      const FlexBounds& b = bounds_[t][k];
      if (!(b.p_max >= 0.0 && b.p_min <= 0.0 && b.q_max >= 0.0 && b.q_min <= 0.0)) {
        throw InputError("flexibility bounds violate sign conventions at step " + std::to_string(t));
      }
      bool nonzero = b.p_max != 0.0 || b.p_min != 0.0 || b.q_max != 0.0 || b.q_min != 0.0;
      if (nonzero && !model.hosts_device(model.node_phases()[k])) {
        throw InputError("nonzero flexibility at a location without devices");
      }
    }
  }
}

FlexLimits default_flex_limits(const NetworkModel& model, const ProfileSet& profiles, const FlexRule& rule) {
  if (!(rule.p_fraction >= 0.0) || !(rule.q_fraction >= 0.0)) throw InputError("flexibility fractions must be >= 0");
  FlexLimits flex(profiles.horizon(), model.node_phases().size());
  const double sb = model.s_base_kva();
  for (std::size_t d = 0; d < model.devices().size(); ++d) {
    const Device& dev = model.devices()[d];
    double p_peak = 0.0, q_peak = 0.0;
    for (std::size_t t = 0; t < profiles.horizon(); ++t) {
      p_peak = std::max(p_peak, std::abs(profiles.device_p_kw(dev, t)));
      q_peak = std::max(q_peak, std::abs(profiles.device_q_kvar(dev, t)));
    }
    const double n = static_cast<double>(dev.phases().size());
    const double p_cap = rule.p_fraction * p_peak / n / sb;
    const double q_cap = rule.q_fraction * q_peak / n / sb;
    for (Phase ph : kPhases) {
      if (!dev.phases().contains(ph)) continue;
      const std::size_t k = model.node_phase_index({model.device_bus(d), ph});
      for (std::size_t t = 0; t < profiles.horizon(); ++t) {
        FlexBounds& b = flex.at(t, k);
        b.p_max += p_cap;
        b.p_min -= p_cap;
        b.q_max += q_cap;
        b.q_min -= q_cap;
      }
    }
  }
  return flex;
}

FlexLimits load_flex_limits(const std::filesystem::path& path, const NetworkModel& model, const ProfileSet& profiles) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open flexibility file '" + path.string() + "'");
  std::map<std::string, std::size_t> device_index;
  for (std::size_t d = 0; d < model.devices().size(); ++d) device_index[model.devices()[d].id] = d;

  FlexLimits flex(profiles.horizon(), model.node_phases().size());
  const double sb = model.s_base_kva();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("device_id", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    if (cells.size() != 6) throw InputError(where + ": expected 6 columns");
    auto it = device_index.find(cells[0]);
    if (it == device_index.end()) throw InputError(where + ": unknown device '" + cells[0] + "'");
    double vals[5];
    try {
      for (int i = 0; i < 5; ++i) vals[i] = std::stod(cells[static_cast<std::size_t>(i) + 1]);
    } catch (const std::exception&) {
      throw InputError(where + ": invalid number");
    }
    const auto t = static_cast<std::size_t>(vals[0]);
    if (vals[0] < 0 || t >= profiles.horizon()) throw InputError(where + ": step out of range");
    const Device& dev = model.devices()[it->second];
    const double n = static_cast<double>(dev.phases().size());
    for (Phase ph : kPhases) {
      if (!dev.phases().contains(ph)) continue;
      FlexBounds& b = flex.at(t, model.node_phase_index({model.device_bus(it->second), ph}));
      b.p_max += vals[1] / n / sb;
      b.p_min += vals[2] / n / sb;
      b.q_max += vals[3] / n / sb;
      b.q_min += vals[4] / n / sb;
    }
  }
  flex.validate(model);
  return flex;
}

}  // namespace flexact
