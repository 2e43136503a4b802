#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flexact/network.hpp"
#include "flexact/profiles.hpp"

namespace testing {

using nlohmann::json;

inline json bus(const std::string& id, const std::string& phases = "ABC", bool slack = false, double v_base = 230.0) {
  return {{"id", id}, {"phases", phases}, {"slack", slack}, {"v_base", v_base}};
}

/// Coupled branch with equal self and mutual terms on every present phase.
inline json branch(const std::string& id, const std::string& from, const std::string& to, double r_self,
                   double x_self, double r_mut = 0.0, double x_mut = 0.0, double s_max_kva = 100.0) {
  json r = json::array(), x = json::array();
  for (int i = 0; i < 3; ++i) {
    json rr = json::array(), xr = json::array();
    for (int j = 0; j < 3; ++j) {
      rr.push_back(i == j ? r_self : r_mut);
      xr.push_back(i == j ? x_self : x_mut);
    }
    r.push_back(rr);
    x.push_back(xr);
  }
  return {{"id", id},     {"from", from}, {"to", to}, {"r_ohm", r}, {"x_ohm", x}, {"ampacity_a", 400.0},
          {"s_max_kva", s_max_kva}};
}

inline json device(const std::string& id, const std::string& bus_id, const std::string& conn) {
  return {{"id", id}, {"bus", bus_id}, {"connection", conn}, {"kind", "load"}, {"p_profile", id}, {"q_profile", id}};
}

inline json network_doc(json buses, json branches, json devices, double s_base_kva = 100.0) {
  return {{"name", "test"}, {"s_base_kva", s_base_kva}, {"buses", buses}, {"branches", branches}, {"devices", devices}};
}

/// Slack "1" feeding a chain 2..n of three-phase buses, one device per phase
/// at every non-slack bus (ids "<bus><phase>").
inline flexact::NetworkModel chain(int n, double r_ohm, double x_ohm, double r_mut = 0.0, double x_mut = 0.0,
                                   double s_max_kva = 100.0) {
  json buses = json::array(), branches = json::array(), devices = json::array();
  buses.push_back(bus("1", "ABC", true));
  for (int b = 2; b <= n; ++b) {
    buses.push_back(bus(std::to_string(b)));
    branches.push_back(branch("L" + std::to_string(b), std::to_string(b - 1), std::to_string(b), r_ohm, x_ohm, r_mut,
                              x_mut, s_max_kva));
    for (const char* ph : {"A", "B", "C"}) devices.push_back(device(std::to_string(b) + ph, std::to_string(b), ph));
  }
  return flexact::NetworkModel::from_json(network_doc(buses, branches, devices));
}

/// Constant profiles: id → (p_kw, q_kvar) at every step; missing ids draw nothing.
inline flexact::ProfileSet constant_profiles(const flexact::NetworkModel& model,
                                             const std::map<std::string, std::pair<double, double>>& power,
                                             std::size_t horizon = 1) {
  std::map<std::string, flexact::ProfileSeries> series;
  for (const auto& d : model.devices()) {
    double p = 0.0, q = 0.0;
    if (auto it = power.find(d.id); it != power.end()) std::tie(p, q) = it->second;
    series[d.id] = {std::vector<double>(horizon, p), std::vector<double>(horizon, q)};
  }
  return flexact::ProfileSet(horizon, 60.0, std::move(series));
}

/// Per-step profiles: id → list of (p_kw, q_kvar).
inline flexact::ProfileSet series_profiles(const flexact::NetworkModel& model,
                                           const std::map<std::string, std::vector<std::pair<double, double>>>& power,
                                           std::size_t horizon) {
  std::map<std::string, flexact::ProfileSeries> series;
  for (const auto& d : model.devices()) {
    flexact::ProfileSeries s{std::vector<double>(horizon, 0.0), std::vector<double>(horizon, 0.0)};
    if (auto it = power.find(d.id); it != power.end()) {
      for (std::size_t t = 0; t < horizon; ++t) std::tie(s.p_kw[t], s.q_kvar[t]) = it->second.at(t);
    }
    series[d.id] = std::move(s);
  }
  return flexact::ProfileSet(horizon, 60.0, std::move(series));
}

inline std::string data_path(const std::string& rel) { return std::string(FLEXACT_DATA_DIR) + "/" + rel; }

}  // namespace testing
