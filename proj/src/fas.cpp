#include "flexact/fas.hpp"

#include <algorithm>
#include <cmath>

namespace flexact {

double FasChannels::max_abs() const {
  return std::max({std::abs(p_up), std::abs(p_dn), std::abs(q_up), std::abs(q_dn)});
}

double SaturationLevels::max_level() const {
  double m = 0.0;
  for (const auto& s : by_node_phase) m = std::max({m, s.vc_p, s.tc_p, s.vc_q, s.tc_q});
  return m;
}

SaturationLevels saturation_levels(const NetworkModel& model, const SensitivityTable& nvs, const FasGains& gains) {
  if (gains.kappa_v < 0.0 || gains.kappa_t < 0.0) throw InputError("saturation gains must be non-negative");
  const std::size_t np = nvs.perturbed.size();
  double max_p = 0.0, max_q = 0.0;
  for (std::size_t c = 0; c < np; ++c) {
    const double p = std::abs(nvs.own_p(c)), q = std::abs(nvs.own_q(c));
    if (!std::isfinite(p) || !std::isfinite(q)) throw InputError("sensitivity table contains non-finite entries");
    max_p = std::max(max_p, p);
    max_q = std::max(max_q, q);
  }
  if (!(max_p > 0.0)) throw InputError("sensitivity table is all zero: saturation levels undefined");

  SaturationLevels out;
  out.by_node_phase.assign(model.node_phases().size(), Saturation{});
  for (std::size_t c = 0; c < np; ++c) {
    const double rp = std::abs(nvs.own_p(c)) / max_p;
    const double rq = max_q > 0.0 ? std::abs(nvs.own_q(c)) / max_q : 0.0;
    Saturation& s = out.by_node_phase[model.node_phase_index(nvs.perturbed[c])];
    s.vc_p = gains.kappa_v * rp;
    s.tc_p = gains.kappa_t * rp;
    s.vc_q = gains.kappa_v * rq;
    s.tc_q = gains.kappa_t * rq;
  }
  return out;
}

DroopPair voltage_component(double v, const OperatingLimits& limits, double vc_max) {
  DroopPair out;
  const double lo = limits.deadband_lo(), hi = limits.deadband_hi();
  if (v <= limits.v_min) {
    out.up = vc_max;
  } else if (v < lo) {
    out.up = vc_max * (v - lo) / (limits.v_min - lo);
  } else if (v >= limits.v_max) {
    out.down = -vc_max;
  } else if (v > hi) {
    out.down = -vc_max * (v - hi) / (limits.v_max - hi);
  }
  return out;
}

DroopPair thermal_component(double t_proj, const OperatingLimits& limits, double tc_max) {
  const double mag = std::abs(t_proj);
  if (mag <= limits.dt_perm) return {};
  const double r = mag >= 100.0 ? 1.0 : (mag - limits.dt_perm) / (100.0 - limits.dt_perm);
  const double s = t_proj > 0.0 ? 1.0 : -1.0;
  return {s * r * tc_max, -s * r * tc_max};
}

std::array<ImbalancePoint, 3> node_imbalance(const PhaseReal& v_mag, const PhaseReal& i_proj,
                                             const ImbalanceOptions& options) {
  std::array<ImbalancePoint, 3> out{};
  const double v_bar = (v_mag[0] + v_mag[1] + v_mag[2]) / 3.0;
  const double i_bar = (i_proj[0] + i_proj[1] + i_proj[2]) / 3.0;
  const double i_abs = (std::abs(i_proj[0]) + std::abs(i_proj[1]) + std::abs(i_proj[2])) / 3.0;
  const bool deg_v = !(std::abs(v_bar) > 1e-9);
  const bool deg_i = !(i_abs > 1e-9) || std::abs(i_bar) < options.degenerate_current_ratio * i_abs;
  for (std::size_t k = 0; k < 3; ++k) {
    ImbalancePoint& p = out[k];
    p.degenerate_v = deg_v;
    p.degenerate_i = deg_i;
    if (!deg_v) {
      p.pvur = v_mag[k] / v_bar;
      p.u_v = 1.0 - p.pvur;
      if (std::abs(p.u_v) <= options.balance_tolerance) p.u_v = 0.0;
    }
    if (!deg_i) {
      p.npcur = i_proj[k] / i_bar;
      p.u_i = 1.0 - p.npcur;
      if (std::abs(p.u_i) <= options.balance_tolerance) p.u_i = 0.0;
    }
  }
  return out;
}

ImbalanceField imbalance_metrics(const NetworkModel& model, const GridState& state,
                                 const std::vector<StepProjection>& projections, const ImbalanceOptions& options) {
  if (projections.size() != state.horizon()) throw InputError("projection count does not match the horizon");
  const std::size_t nnp = model.node_phases().size();
  ImbalanceField out(state.horizon(), std::vector<ImbalancePoint>(nnp));
  for (std::size_t t = 0; t < state.horizon(); ++t) {
    const StepState& st = state.steps[t];
    for (std::size_t b = 0; b < model.num_buses(); ++b) {
      if (!model.buses()[b].phases.is_three_phase()) continue;
      PhaseReal v{}, i{};
      std::array<std::size_t, 3> np{};
      for (Phase ph : kPhases) {
        const std::size_t k = idx(ph);
        np[k] = model.node_phase_index({b, ph});
        v[k] = st.v_mag(b, ph);
        i[k] = projections[t].current[np[k]];
      }
      const auto pts = node_imbalance(v, i, options);
      for (std::size_t k = 0; k < 3; ++k) out[t][np[k]] = pts[k];
    }
  }
  return out;
}

FasChannels imbalance_component(const ImbalancePoint& point, bool sign_normalized) {
  FasChannels c;
  const double uv = point.u_v, ui = point.u_i;
  const double ui_term = sign_normalized ? -ui : ui;
  if (uv > 0.0) c.p_up += uv;
  if (uv < 0.0) c.p_dn += uv;
  if (ui < 0.0) c.p_up += ui_term;
  if (ui > 0.0) c.p_dn += ui_term;
  if (uv > 0.0) c.q_up = uv;
  if (uv < 0.0) c.q_dn = uv;
  return c;
}

double FasField::max_abs() const {
  double m = 0.0;
  for (const auto& step : points_) {
    for (const auto& p : step) m = std::max(m, p.total.max_abs());
  }
  return m;
}

FasField combine(const ComponentField& voltage, const ComponentField& thermal, const ComponentField& imbalance) {
  if (voltage.size() != thermal.size() || voltage.size() != imbalance.size()) {
    throw InputError("FAS components cover different horizons");
  }
  const std::size_t n = voltage.empty() ? 0 : voltage.front().size();
  FasField out(voltage.size(), n);
  for (std::size_t t = 0; t < voltage.size(); ++t) {
    if (voltage[t].size() != n || thermal[t].size() != n || imbalance[t].size() != n) {
      throw InputError("FAS components cover different locations");
    }
    for (std::size_t i = 0; i < n; ++i) {
      FasPoint& p = out.at(t, i);
      p.voltage = voltage[t][i];
      p.thermal = thermal[t][i];
      p.imbalance = imbalance[t][i];
      p.total = p.voltage;
      p.total += p.thermal;
      p.total += p.imbalance;
    }
  }
  return out;
}

FasField compute_fas(const NetworkModel& model, const GridState& state, const SensitivityTable& nvs,
                     const OperatingLimits& limits, const FasOptions& options) {
  limits.validate();
  const SaturationLevels sat = saturation_levels(model, nvs, options.gains);
  const std::size_t T = state.horizon(), nnp = model.node_phases().size();

  std::vector<StepProjection> projections;
  projections.reserve(T);
  for (const auto& st : state.steps) projections.push_back(project_step(model, st, options.weighted_current));
  const ImbalanceField imb = imbalance_metrics(model, state, projections, options.imbalance);

  ComponentField volt(T, std::vector<FasChannels>(nnp));
  ComponentField therm = volt, imbc = volt;
  for (std::size_t t = 0; t < T; ++t) {
    for (const NodePhase& np : model.device_node_phases()) {
      const std::size_t n = model.node_phase_index(np);
      const Saturation& s = sat.by_node_phase[n];
      const double v = state.steps[t].v_mag(np.bus, np.phase);
      const double tl = projections[t].loading[n];

      const DroopPair vp = voltage_component(v, limits, s.vc_p);
      const DroopPair vq = voltage_component(v, limits, s.vc_q);
      volt[t][n] = {vp.up, vp.down, vq.up, vq.down};

      const DroopPair tp = thermal_component(tl, limits, s.tc_p);
      const DroopPair tq = thermal_component(tl, limits, s.tc_q);
      therm[t][n] = {tp.up, tp.down, tq.up, tq.down};

      imbc[t][n] = imbalance_component(imb[t][n], options.imbalance.sign_normalized);
    }
  }
  FasField out = combine(volt, therm, imbc);
  out.saturation = sat;
  return out;
}

}  // namespace flexact
