#include "flexact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace flexact {

double vuf_percent(const PhaseComplex& v) {
  const Complex a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const Complex a2 = a * a;
  const Complex pos = (v[0] + a * v[1] + a2 * v[2]) / 3.0;
  const Complex neg = (v[0] + a2 * v[1] + a * v[2]) / 3.0;
  if (!(std::abs(pos) > 1e-9)) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * std::abs(neg) / std::abs(pos);
}

VufSeries compute_vuf(const NetworkModel& model, const GridState& state) {
  VufSeries out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const StepState& st : state.steps) {
    std::vector<double> row(model.num_buses(), nan);
    double step_max = 0.0;
    for (std::size_t b = 0; b < model.num_buses(); ++b) {
      if (!model.buses()[b].phases.is_three_phase()) continue;
      const double u = vuf_percent(st.voltage[b]);
      if (std::isnan(u)) {
        ++out.degenerate;
        continue;
      }
      row[b] = u;
      step_max = std::max(step_max, u);
      sum += u;
      ++out.samples;
    }
    out.by_node.push_back(std::move(row));
    out.step_max.push_back(step_max);
    out.max = std::max(out.max, step_max);
  }
  out.mean = out.samples == 0 ? 0.0 : sum / static_cast<double>(out.samples);
  return out;
}

std::vector<ParetoPoint> pareto_sweep(const ActivationInputs& in, const std::vector<double>& gv_grid,
                                      const ActivationOptions& options) {
  if (gv_grid.empty()) throw InputError("G_V grid is empty");
  for (std::size_t i = 0; i < gv_grid.size(); ++i) {
    if (!(gv_grid[i] >= 0.0) || !std::isfinite(gv_grid[i])) throw InputError("G_V grid values must be finite and >= 0");
    if (i > 0 && !(gv_grid[i] > gv_grid[i - 1])) throw InputError("G_V grid must be strictly ascending");
  }
  std::vector<ParetoPoint> out;
  for (double gv : gv_grid) {
    ParetoPoint pt;
    pt.g_v = gv;
    try {
      ActivationOptions opt = options;
      opt.g_v = gv;
      const ActivationResult res = solve_horizon(in, opt);
      const VufSeries vuf = compute_vuf(in.model, res.grid_state());
      pt.objective = res.total_objective;
      pt.mean_vuf = vuf.mean;
      pt.max_vuf = vuf.max;
      for (const auto& s : res.steps) pt.hard_incidents += s.hard_incidents;
      if (!res.feasible()) {
        pt.ok = false;
        pt.error = res.failures.front();
      }
    } catch (const FlexactError& e) {
      pt.ok = false;
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

KneeChoice select_knee(const std::vector<ParetoPoint>& points, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("knee fraction must lie in (0, 1]");
  std::vector<const ParetoPoint*> usable;
  for (const auto& p : points) {
    if (p.ok) usable.push_back(&p);
  }
  if (usable.size() < 3) throw InputError("knee selection needs at least three successful sweep points");

  KneeChoice out;
  const double ref = usable.front()->mean_vuf;
  for (const auto* p : usable) out.max_reduction = std::max(out.max_reduction, ref - p->mean_vuf);
  if (!(out.max_reduction > 0.0)) {
    out.g_v = usable.front()->g_v;
    out.warnings.push_back("no mean-VUF reduction over the sweep; smallest G_V chosen");
    return out;
  }
  const double target = fraction * out.max_reduction;
  std::size_t pick = usable.size() - 1;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    if (ref - usable[i]->mean_vuf >= target) {
      pick = i;
      break;
    }
  }
  out.g_v = usable[pick]->g_v;
  out.reduction = ref - usable[pick]->mean_vuf;
  if (pick + 1 == usable.size() && usable.size() >= 2 && usable[pick]->mean_vuf < usable[pick - 1]->mean_vuf) {
    out.knee_reached = false;
    out.warnings.push_back("knee not reached: mean VUF still improving at the largest G_V");
  }
  return out;
}

}  // namespace flexact
