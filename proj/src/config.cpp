#include "flexact/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace flexact {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InputError("config section '" + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) throw InputError("unknown config key '" + section + "." + it.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("config key '" + section + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& into, const std::string& section) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, section);
  into = v;
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("config must be a JSON object");
  check_keys(doc, "config", {"limits", "powerflow", "sensitivity", "fas", "activation", "flex", "pareto", "incidents"});
  RunConfig c;

  if (doc.contains("limits")) {
    const json& s = doc["limits"];
    check_keys(s, "limits", {"v_min", "v_max", "dv_perm_lo", "dv_perm_hi", "dt_perm", "curt_price_p", "curt_price_g"});
    read(s, "v_min", c.limits.v_min, "limits");
    read(s, "v_max", c.limits.v_max, "limits");
    read(s, "dv_perm_lo", c.limits.dv_perm_lo, "limits");
    read(s, "dv_perm_hi", c.limits.dv_perm_hi, "limits");
    read(s, "dt_perm", c.limits.dt_perm, "limits");
    read_optional(s, "curt_price_p", c.limits.curt_price_p, "limits");
    read_optional(s, "curt_price_g", c.limits.curt_price_g, "limits");
  }
  if (doc.contains("powerflow")) {
    const json& s = doc["powerflow"];
    check_keys(s, "powerflow", {"tolerance", "max_iterations", "fallback_damping"});
    read(s, "tolerance", c.powerflow.tolerance, "powerflow");
    read(s, "max_iterations", c.powerflow.max_iterations, "powerflow");
    read(s, "fallback_damping", c.powerflow.fallback_damping, "powerflow");
    c.activation.powerflow = c.powerflow;
  }
  if (doc.contains("sensitivity")) {
    const json& s = doc["sensitivity"];
    check_keys(s, "sensitivity", {"levels", "tolerance", "snapshot"});
    read(s, "levels", c.sensitivity.levels, "sensitivity");
    read(s, "tolerance", c.sensitivity.powerflow.tolerance, "sensitivity");
    if (s.contains("snapshot")) {
      const json& v = s["snapshot"];
      if (v.is_number_unsigned()) {
        c.snapshot = std::to_string(v.get<std::size_t>());
      } else if (v.is_string()) {
        c.snapshot = v.get<std::string>();
      } else {
        throw InputError("config key 'sensitivity.snapshot' must be \"mean\" or a step index");
      }
    }
  }
  if (doc.contains("fas")) {
    const json& s = doc["fas"];
    check_keys(s, "fas", {"kappa_v", "kappa_t", "imb_sign_normalized", "weighted_current", "degenerate_current_ratio"});
    read(s, "kappa_v", c.fas.gains.kappa_v, "fas");
    read(s, "kappa_t", c.fas.gains.kappa_t, "fas");
    read(s, "imb_sign_normalized", c.fas.imbalance.sign_normalized, "fas");
    read(s, "weighted_current", c.fas.weighted_current, "fas");
    read(s, "degenerate_current_ratio", c.fas.imbalance.degenerate_current_ratio, "fas");
  }
  if (doc.contains("activation")) {
    const json& s = doc["activation"];
    check_keys(s, "activation",
               {"g_v", "trust_fraction", "max_iterations", "objective_tol", "voltage_margin", "thermal_margin",
                "slack_penalty_factor", "angle_limit_deg", "curtailment_last", "allow_curtailment"});
    read(s, "g_v", c.activation.g_v, "activation");
    read(s, "trust_fraction", c.activation.trust_fraction, "activation");
    read(s, "max_iterations", c.activation.max_iterations, "activation");
    read(s, "objective_tol", c.activation.objective_tol, "activation");
    read(s, "voltage_margin", c.activation.voltage_margin, "activation");
    read(s, "thermal_margin", c.activation.thermal_margin, "activation");
    read(s, "slack_penalty_factor", c.activation.slack_penalty_factor, "activation");
    read(s, "angle_limit_deg", c.activation.angle_limit_deg, "activation");
    read(s, "curtailment_last", c.activation.curtailment_last, "activation");
    read(s, "allow_curtailment", c.activation.allow_curtailment, "activation");
  }
  if (doc.contains("flex")) {
    const json& s = doc["flex"];
    check_keys(s, "flex", {"p_fraction", "q_fraction"});
    read(s, "p_fraction", c.flex.p_fraction, "flex");
    read(s, "q_fraction", c.flex.q_fraction, "flex");
  }
  if (doc.contains("pareto")) {
    const json& s = doc["pareto"];
    check_keys(s, "pareto", {"grid", "knee_fraction"});
    read(s, "grid", c.gv_grid, "pareto");
    read(s, "knee_fraction", c.knee_fraction, "pareto");
  }
  if (doc.contains("incidents")) {
    const json& s = doc["incidents"];
    check_keys(s, "incidents", {"scope"});
    std::string scope = "all";
    read(s, "scope", scope, "incidents");
    if (scope == "all") {
      c.scope = IncidentScope::AllNodes;
    } else if (scope == "load") {
      c.scope = IncidentScope::LoadNodes;
    } else {
      throw InputError("config key 'incidents.scope' must be \"all\" or \"load\"");
    }
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["limits"] = {{"v_min", limits.v_min},
                 {"v_max", limits.v_max},
                 {"dv_perm_lo", limits.dv_perm_lo},
                 {"dv_perm_hi", limits.dv_perm_hi},
                 {"dt_perm", limits.dt_perm}};
  if (limits.curt_price_p) j["limits"]["curt_price_p"] = *limits.curt_price_p;
  if (limits.curt_price_g) j["limits"]["curt_price_g"] = *limits.curt_price_g;
  j["powerflow"] = {{"tolerance", powerflow.tolerance},
                    {"max_iterations", powerflow.max_iterations},
                    {"fallback_damping", powerflow.fallback_damping}};
  j["sensitivity"] = {{"levels", sensitivity.levels},
                      {"tolerance", sensitivity.powerflow.tolerance},
                      {"snapshot", snapshot}};
  j["fas"] = {{"kappa_v", fas.gains.kappa_v},
              {"kappa_t", fas.gains.kappa_t},
              {"imb_sign_normalized", fas.imbalance.sign_normalized},
              {"weighted_current", fas.weighted_current},
              {"degenerate_current_ratio", fas.imbalance.degenerate_current_ratio}};
  j["activation"] = {{"g_v", activation.g_v},
                     {"trust_fraction", activation.trust_fraction},
                     {"max_iterations", activation.max_iterations},
                     {"objective_tol", activation.objective_tol},
                     {"voltage_margin", activation.voltage_margin},
                     {"thermal_margin", activation.thermal_margin},
                     {"slack_penalty_factor", activation.slack_penalty_factor},
                     {"angle_limit_deg", activation.angle_limit_deg},
                     {"curtailment_last", activation.curtailment_last},
                     {"allow_curtailment", activation.allow_curtailment}};
  j["flex"] = {{"p_fraction", flex.p_fraction}, {"q_fraction", flex.q_fraction}};
  j["pareto"] = {{"grid", gv_grid}, {"knee_fraction", knee_fraction}};
  j["incidents"] = {{"scope", scope == IncidentScope::AllNodes ? "all" : "load"}};
  return j;
}

void RunConfig::validate() const {
  limits.validate();
  if (!(powerflow.tolerance > 0.0)) throw InputError("powerflow.tolerance must be positive");
  if (powerflow.max_iterations < 1) throw InputError("powerflow.max_iterations must be at least 1");
  if (!(powerflow.fallback_damping > 0.0 && powerflow.fallback_damping <= 1.0)) {
    throw InputError("powerflow.fallback_damping must lie in (0, 1]");
  }
  if (sensitivity.levels.empty()) throw InputError("sensitivity.levels is empty");
  for (double l : sensitivity.levels) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("sensitivity.levels must be positive");
  }
  if (snapshot != "mean" && snapshot.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError("sensitivity.snapshot must be \"mean\" or a step index");
  }
  if (fas.gains.kappa_v < 0.0 || fas.gains.kappa_t < 0.0) throw InputError("fas gains must be non-negative");
  if (activation.g_v < 0.0) throw InputError("activation.g_v must be non-negative");
  if (!(activation.trust_fraction > 0.0 && activation.trust_fraction <= 1.0)) {
    throw InputError("activation.trust_fraction must lie in (0, 1]");
  }
  if (activation.max_iterations < 1) throw InputError("activation.max_iterations must be at least 1");
  if (flex.p_fraction < 0.0 || flex.q_fraction < 0.0) throw InputError("flex fractions must be non-negative");
  if (!(knee_fraction > 0.0 && knee_fraction <= 1.0)) throw InputError("pareto.knee_fraction must lie in (0, 1]");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(doc);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("empty number list");
  return out;
}

}  // namespace flexact
