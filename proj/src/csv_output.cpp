#include "flexact/csv_output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace flexact::csv {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void open_or_throw(std::ofstream& file, const std::filesystem::path& path) {
  file.open(path, std::ios::out | std::ios::trunc);
  if (!file) throw InputError("cannot write " + path.string());
}

namespace {

const std::string& bus_id(const NetworkModel& m, std::size_t b) { return m.buses()[b].id; }

}  // namespace

void write_voltages(std::ostream& out, const NetworkModel& model, const GridState& state) {
  out << "t,bus,phase,v_pu,theta_rad\n";
  for (std::size_t t = 0; t < state.horizon(); ++t) {
    for (const NodePhase& np : model.node_phases()) {
      const Complex v = state.steps[t].voltage[np.bus][idx(np.phase)];
      out << t << ',' << bus_id(model, np.bus) << ',' << phase_letter(np.phase) << ',' << num(std::abs(v)) << ','
          << num(std::arg(v)) << '\n';
    }
  }
}

void write_branches(std::ostream& out, const NetworkModel& model, const GridState& state) {
  out << "t,branch,phase,loading_pct,p_kw,q_kvar,i_amp\n";
  const double sb = model.s_base_kva(), ib = model.i_base_amp();
  for (std::size_t t = 0; t < state.horizon(); ++t) {
    const StepState& st = state.steps[t];
    for (std::size_t br = 0; br < model.num_branches(); ++br) {
      for (Phase ph : kPhases) {
        if (!model.branch_phases(br).contains(ph)) continue;
        const std::size_t k = idx(ph);
        out << t << ',' << model.branches()[br].id << ',' << phase_letter(ph) << ',' << num(st.loading[br][k]) << ','
            << num(st.branch_power[br][k].real() * sb) << ',' << num(st.branch_power[br][k].imag() * sb) << ','
            << num(std::abs(st.current[br][k]) * ib) << '\n';
      }
    }
  }
}

void write_incidents(std::ostream& out, const IncidentReport& report, const OperatingLimits& limits) {
  out << "incident,count,percent,hard\n";
  for (const auto& r : report.rows(limits)) {
    out << r.label << ',' << r.count << ',' << num(r.percent) << ',' << (r.hard ? 1 : 0) << '\n';
  }
}

void write_nvs(std::ostream& out, const SensitivityTable& table, const NetworkModel& model) {
  out << "obs_bus,obs_phase,pert_bus,pert_phase,nvs_p,nvs_q\n";
  for (std::size_t r = 0; r < table.observed.size(); ++r) {
    for (std::size_t c = 0; c < table.perturbed.size(); ++c) {
      out << bus_id(model, table.observed[r].bus) << ',' << phase_letter(table.observed[r].phase) << ','
          << bus_id(model, table.perturbed[c].bus) << ',' << phase_letter(table.perturbed[c].phase) << ','
          << num(table.nvs_p(r, c)) << ',' << num(table.nvs_q(r, c)) << '\n';
    }
  }
}

void write_fas(std::ostream& out, const FasField& fas, const NetworkModel& model) {
  out << "t,bus,phase,lam_p_up,lam_p_dn,lam_q_up,lam_q_dn,volt_comp,th_comp,imb_comp\n";
  for (std::size_t t = 0; t < fas.horizon(); ++t) {
    for (const NodePhase& np : model.device_node_phases()) {
      const FasPoint& p = fas.at(t, model.node_phase_index(np));
      out << t << ',' << bus_id(model, np.bus) << ',' << phase_letter(np.phase) << ',' << num(p.total.p_up) << ','
          << num(p.total.p_dn) << ',' << num(p.total.q_up) << ',' << num(p.total.q_dn) << ','
          << num(p.voltage.p_up + p.voltage.p_dn) << ',' << num(p.thermal.p_up) << ','
          << num(p.imbalance.p_up + p.imbalance.p_dn) << '\n';
    }
  }
}

void write_activation(std::ostream& out, const ActivationResult& result, const NetworkModel& model) {
  out << "t,bus,phase,dp_up,dp_dn,dq_up,dq_dn,p_curt,g_curt\n";
  const double sb = model.s_base_kva();
  const auto& nps = model.node_phases();
  for (std::size_t t = 0; t < result.steps.size(); ++t) {
    const StepActivation& a = result.steps[t];
    for (std::size_t n = 0; n < nps.size(); ++n) {
      const double v[6] = {a.dp_up[n], a.dp_dn[n], a.dq_up[n], a.dq_dn[n], a.p_curt[n], a.g_curt[n]};
      bool any = false;
      for (double x : v) any = any || x != 0.0;
      if (!any) continue;
      out << t << ',' << bus_id(model, nps[n].bus) << ',' << phase_letter(nps[n].phase);
      for (double x : v) out << ',' << num(x * sb);
      out << '\n';
    }
  }
}

void write_pareto(std::ostream& out, const std::vector<ParetoPoint>& points) {
  out << "gv,objective,mean_vuf,max_vuf,incidents\n";
  for (const auto& p : points) {
    out << num(p.g_v) << ',' << num(p.objective) << ',' << num(p.mean_vuf) << ',' << num(p.max_vuf) << ','
        << p.hard_incidents << '\n';
  }
}

void write_vuf_series(std::ostream& out, const VufSeries& before, const VufSeries& after) {
  out << "t,max_vuf_uncorrected,mean_vuf_uncorrected,max_vuf_corrected,mean_vuf_corrected\n";
  auto step_mean = [](const std::vector<double>& row) {
    double s = 0.0;
    std::size_t n = 0;
    for (double v : row) {
      if (std::isnan(v)) continue;
      s += v;
      ++n;
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
  };
  for (std::size_t t = 0; t < before.step_max.size(); ++t) {
    out << t << ',' << num(before.step_max[t]) << ',' << num(step_mean(before.by_node[t])) << ','
        << num(after.step_max[t]) << ',' << num(step_mean(after.by_node[t])) << '\n';
  }
}

}  // namespace flexact::csv
