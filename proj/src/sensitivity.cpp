#include "flexact/sensitivity.hpp"

#include <cmath>
#include <sstream>

#include "flexact/projection.hpp"

namespace flexact {

namespace {

struct LevelTables {
  SensitivityMatrix nvs_p, nvs_q, proj_p, proj_q, fpp, fqp, fpq, fqq;
};

void accumulate(SensitivityMatrix& into, const SensitivityMatrix& from) {
  for (std::size_t i = 0; i < into.data().size(); ++i) into.data()[i] += from.data()[i];
}

void divide(SensitivityMatrix& m, double n) {
  for (double& v : m.data()) v /= n;
}

}  // namespace

NodalPower mean_nodal_power(const NetworkModel& model, const ProfileSet& profiles) {
  NodalPower mean(model.num_buses(), PhaseComplex{});
  if (profiles.horizon() == 0) return mean;
  for (std::size_t t = 0; t < profiles.horizon(); ++t) {
    NodalPower s = profiles.nodal_power(model, t);
    for (std::size_t b = 0; b < s.size(); ++b) {
      for (std::size_t k = 0; k < 3; ++k) mean[b][k] += s[b][k];
    }
  }
  for (auto& row : mean) {
    for (auto& v : row) v /= static_cast<double>(profiles.horizon());
  }
  return mean;
}

std::pair<SensitivityTable, ThermalSensitivityTable> compute_sensitivities(const NetworkModel& model,
                                                                           const NodalPower& base_load,
                                                                           const SensitivityOptions& options,
                                                                           const std::string& snapshot) {
  if (options.levels.empty()) throw InputError("empty levels: no perturbation levels given");
  for (double l : options.levels) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("perturbation levels must be positive and finite");
  }

  const StepState ref = solve_timestep(model, base_load, options.powerflow);
  const StepProjection ref_proj = project_step(model, ref);

  const auto& obs = model.node_phases();
  const auto& pert = model.device_node_phases();
  const std::size_t no = obs.size(), np = pert.size(), nflow = model.num_branches() * 3;

  std::vector<std::string> warnings;
  LevelTables sum{SensitivityMatrix(no, np), SensitivityMatrix(no, np), SensitivityMatrix(no, np),
                  SensitivityMatrix(no, np), SensitivityMatrix(nflow, np), SensitivityMatrix(nflow, np),
                  SensitivityMatrix(nflow, np), SensitivityMatrix(nflow, np)};
  std::vector<double> used;

  for (double level : options.levels) {
    LevelTables lt = sum;
    for (auto* m : {&lt.nvs_p, &lt.nvs_q, &lt.proj_p, &lt.proj_q, &lt.fpp, &lt.fqp, &lt.fpq, &lt.fqq}) {
      std::fill(m->data().begin(), m->data().end(), 0.0);
    }
    bool ok = true;
    for (std::size_t c = 0; c < np && ok; ++c) {
      for (int quantity = 0; quantity < 2 && ok; ++quantity) {
        NodalPower load = base_load;
        load[pert[c].bus][idx(pert[c].phase)] += quantity == 0 ? Complex(level, 0.0) : Complex(0.0, level);
        StepState st;
        try {
          st = solve_timestep(model, load, options.powerflow);
        } catch (const PowerFlowError&) {
          ok = false;
          break;
        }
        const StepProjection proj = project_step(model, st);
        SensitivityMatrix& nvs = quantity == 0 ? lt.nvs_p : lt.nvs_q;
        SensitivityMatrix& prj = quantity == 0 ? lt.proj_p : lt.proj_q;
        SensitivityMatrix& fp = quantity == 0 ? lt.fpp : lt.fpq;
        SensitivityMatrix& fq = quantity == 0 ? lt.fqp : lt.fqq;
        for (std::size_t r = 0; r < no; ++r) {
          const auto [bus, ph] = obs[r];
          nvs(r, c) = (st.v_mag(bus, ph) - ref.v_mag(bus, ph)) / level;
          prj(r, c) = (proj.loading[r] - ref_proj.loading[r]) / level;
        }
        for (std::size_t br = 0; br < model.num_branches(); ++br) {
          for (std::size_t k = 0; k < 3; ++k) {
            const Complex d = st.branch_power[br][k] - ref.branch_power[br][k];
            fp(br * 3 + k, c) = d.real() / level;
            fq(br * 3 + k, c) = d.imag() / level;
          }
        }
      }
    }
    if (!ok) {
      std::ostringstream w;
      w << "perturbation level " << level << " pu dropped: perturbed power flow diverged";
      warnings.push_back(w.str());
      continue;
    }
    accumulate(sum.nvs_p, lt.nvs_p);
    accumulate(sum.nvs_q, lt.nvs_q);
    accumulate(sum.proj_p, lt.proj_p);
    accumulate(sum.proj_q, lt.proj_q);
    accumulate(sum.fpp, lt.fpp);
    accumulate(sum.fqp, lt.fqp);
    accumulate(sum.fpq, lt.fpq);
    accumulate(sum.fqq, lt.fqq);
    used.push_back(level);
  }
  if (used.empty()) throw SolverError("sensitivity computation failed: every perturbation level diverged");
  const double n = static_cast<double>(used.size());
  for (auto* m : {&sum.nvs_p, &sum.nvs_q, &sum.proj_p, &sum.proj_q, &sum.fpp, &sum.fqp, &sum.fpq, &sum.fqq}) divide(*m, n);

  SensitivityTable nvs;
  nvs.observed = obs;
  nvs.perturbed = pert;
  nvs.nvs_p = std::move(sum.nvs_p);
  nvs.nvs_q = std::move(sum.nvs_q);
  nvs.levels = used;
  nvs.snapshot = snapshot;
  nvs.warnings = warnings;
  nvs.own_row_.resize(np);
  for (std::size_t c = 0; c < np; ++c) nvs.own_row_[c] = model.node_phase_index(pert[c]);

  ThermalSensitivityTable th;
  th.observed = obs;
  th.perturbed = pert;
  th.projected_p = std::move(sum.proj_p);
  th.projected_q = std::move(sum.proj_q);
  th.flow_p_by_p = std::move(sum.fpp);
  th.flow_q_by_p = std::move(sum.fqp);
  th.flow_p_by_q = std::move(sum.fpq);
  th.flow_q_by_q = std::move(sum.fqq);
  th.levels = std::move(used);
  th.snapshot = snapshot;
  th.warnings = std::move(warnings);
  return {std::move(nvs), std::move(th)};
}

SensitivityTable compute_nvs(const NetworkModel& model, const NodalPower& base_load, const SensitivityOptions& options,
                             const std::string& snapshot) {
  return compute_sensitivities(model, base_load, options, snapshot).first;
}

ThermalSensitivityTable compute_thermal_sensitivity(const NetworkModel& model, const NodalPower& base_load,
                                                    const SensitivityOptions& options, const std::string& snapshot) {
  return compute_sensitivities(model, base_load, options, snapshot).second;
}

}  // namespace flexact
