#include "flexact/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flexact {

FlexLimits gate_limits(const FasField& fas, const FlexLimits& raw) {
  if (fas.horizon() != raw.horizon()) throw InputError("FAS and flexibility limits cover different horizons");
  FlexLimits out(raw.horizon(), fas.num_node_phases());
  for (std::size_t t = 0; t < raw.horizon(); ++t) {
    if (raw.step(t).size() != fas.num_node_phases()) throw InputError("FAS and flexibility limits cover different locations");
    for (std::size_t n = 0; n < fas.num_node_phases(); ++n) {
      const FasChannels& l = fas.at(t, n).total;
      const FlexBounds& r = raw.at(t, n);
      FlexBounds& g = out.at(t, n);
      g.p_max = l.p_up != 0.0 ? r.p_max : 0.0;
      g.p_min = l.p_dn != 0.0 ? r.p_min : 0.0;
      g.q_max = l.q_up != 0.0 ? r.q_max : 0.0;
      g.q_min = l.q_dn != 0.0 ? r.q_min : 0.0;
    }
  }
  return out;
}

std::vector<PriceViolation> price_check(const FasField& fas, const OperatingLimits& limits) {
  if (!limits.curt_price_p || !limits.curt_price_g) throw InputError("curtailment prices are not set");
  const double price = std::min(*limits.curt_price_p, *limits.curt_price_g);
  std::vector<PriceViolation> out;
  for (std::size_t t = 0; t < fas.horizon(); ++t) {
    for (std::size_t n = 0; n < fas.num_node_phases(); ++n) {
      const FasChannels& l = fas.at(t, n).total;
      const double lam = std::max({l.p_up, std::abs(l.p_dn), l.q_up, std::abs(l.q_dn), 0.0});
      if (!(lam < price)) out.push_back({t, n, lam, price});
    }
  }
  return out;
}

double default_curtailment_price(const FasField& fas) {
  const double base = std::max(fas.saturation.max_level(), fas.max_abs());
  return 1.2 * (base > 0.0 ? base : 1.0);
}

OperatingLimits with_default_prices(const OperatingLimits& limits, const FasField& fas) {
  OperatingLimits out = limits;
  const double price = default_curtailment_price(fas);
  if (!out.curt_price_p) out.curt_price_p = price;
  if (!out.curt_price_g) out.curt_price_g = price;
  return out;
}

bool StepActivation::empty() const {
  for (const auto* v : {&dp_up, &dp_dn, &dq_up, &dq_dn, &p_curt, &g_curt}) {
    for (double x : *v) {
      if (x != 0.0) return false;
    }
  }
  return true;
}

double StepActivation::total_curtailment() const {
  double s = 0.0;
  for (double x : p_curt) s += x;
  for (double x : g_curt) s += x;
  return s;
}

GridState ActivationResult::grid_state() const {
  GridState g;
  g.steps.reserve(steps.size());
  for (const auto& s : steps) g.steps.push_back(s.state);
  return g;
}

NodalPower dispatched_power(const NetworkModel& model, const NodalPower& base, const StepActivation& act) {
  NodalPower out = base;
  const auto& nps = model.node_phases();
  for (std::size_t n = 0; n < nps.size(); ++n) {
    const double dp = -act.dp_up[n] + act.dp_dn[n] - act.p_curt[n] + act.g_curt[n];
    const double dq = -act.dq_up[n] + act.dq_dn[n];
    out[nps[n].bus][idx(nps[n].phase)] += Complex(dp, dq);
  }
  return out;
}

double imbalance_deviation(const NetworkModel& model, const StepState& state) {
  double s = 0.0;
  for (std::size_t b = 0; b < model.num_buses(); ++b) {
    if (b == model.slack() || !model.buses()[b].phases.is_three_phase()) continue;
    const double va = state.v_mag(b, Phase::A), vb = state.v_mag(b, Phase::B), vc = state.v_mag(b, Phase::C);
    const double mean = (va + vb + vc) / 3.0;
    s += std::abs(va - mean) + std::abs(vb - mean) + std::abs(vc - mean);
  }
  return s;
}

namespace {

enum class Kind { DpUp, DpDn, DqUp, DqDn, PCurt, GCurt };

/// One dispatch variable of the linear subproblem.
struct DispatchVar {
  std::size_t col;   // sensitivity column
  std::size_t node;  // node_phase index
  Kind kind;
  double a_p, a_q;   // effect on net load P / Q per unit
  double range;      // upper bound
  double price;
};

double& field(StepActivation& a, Kind k, std::size_t n) {
  switch (k) {
    case Kind::DpUp: return a.dp_up[n];
    case Kind::DpDn: return a.dp_dn[n];
    case Kind::DqUp: return a.dq_up[n];
    case Kind::DqDn: return a.dq_dn[n];
    case Kind::PCurt: return a.p_curt[n];
    case Kind::GCurt: return a.g_curt[n];
  }
  return a.dp_up[n];
}

double max_angle_deviation(const NetworkModel& model, const StepState& st) {
  const PhaseComplex nom = nominal_phasors();
  double worst = 0.0;
  for (const NodePhase& np : model.node_phases()) {
    const Complex v = st.voltage[np.bus][idx(np.phase)];
    const double d = std::abs(std::arg(v / nom[idx(np.phase)]));
    worst = std::max(worst, d);
  }
  return worst * 180.0 / std::numbers::pi;
}

class StepSolver {
 public:
  StepSolver(const ActivationInputs& in, std::size_t t, const ActivationOptions& opt)
      : in_(in), t_(t), opt_(opt), backend_(lp::make_backend(opt.backend)) {
    const auto& model = in.model;
    nnp_ = model.node_phases().size();
    base_ = in.profiles.nodal_power(model, t);
    const auto curt = curtailment_bounds(model, in.profiles);
    price_p_ = *in.limits.curt_price_p;
    price_g_ = *in.limits.curt_price_g;
    penalty_ = opt.slack_penalty_factor * std::max(price_p_, price_g_);

    const auto& pert = in.nvs.perturbed;
    for (std::size_t c = 0; c < pert.size(); ++c) {
      const std::size_t n = model.node_phase_index(pert[c]);
      const FlexBounds& g = in.gated.at(t, n);
      const FasChannels& lam = in.fas.at(t, n).total;
      auto add = [&](Kind k, double ap, double aq, double range, double price) {
        if (range > 0.0) vars_.push_back({c, n, k, ap, aq, range, price});
      };
      add(Kind::DpUp, -1.0, 0.0, g.p_max, std::abs(lam.p_up));
      add(Kind::DpDn, 1.0, 0.0, -g.p_min, std::abs(lam.p_dn));
      add(Kind::DqUp, 0.0, -1.0, g.q_max, std::abs(lam.q_up));
      add(Kind::DqDn, 0.0, 1.0, -g.q_min, std::abs(lam.q_dn));
      if (!opt.allow_curtailment) continue;
      add(Kind::PCurt, -1.0, 0.0, curt[t][n].load, price_p_);
      add(Kind::GCurt, 1.0, 0.0, curt[t][n].generation, price_g_);
    }

    // Voltage gradients per observed row and dispatch variable.
    const std::size_t no = in.nvs.observed.size();
    gv_.assign(no * vars_.size(), 0.0);
    for (std::size_t r = 0; r < no; ++r) {
      for (std::size_t j = 0; j < vars_.size(); ++j) {
        const auto& v = vars_[j];
        gv_[r * vars_.size() + j] = v.a_p * in.nvs.nvs_p(r, v.col) + v.a_q * in.nvs.nvs_q(r, v.col);
      }
    }
  }

  StepActivation run() {
    const auto& model = in_.model;
    StepActivation act = blank();
    std::vector<double> x(vars_.size(), 0.0);
    StepState state = solve_timestep(model, base_, opt_.powerflow, t_);
    std::size_t hard = hard_incidents(state, in_.limits, model);
    double prev = 0.0;
    bool have_prev = false;

    for (int k = 0; k < opt_.max_iterations; ++k) {
      IterationRecord rec;
      rec.iteration = k + 1;
      Linearized sol = solve_lp(x, state, opt_.curtailment_last);
      rec.flex_only = opt_.curtailment_last;
      if (opt_.curtailment_last && sol.max_slack > 1e-9) {
        // Residual slack may only reflect the trust region; probe the full ranges.
        int pivots = sol.pivots;
        const Linearized probe = solve_lp(x, state, true, false);
        pivots += probe.pivots;
        if (probe.max_slack > 1e-9) {
          sol = solve_lp(x, state, false);
          rec.flex_only = false;
        }
        sol.pivots += pivots;
      }
      rec.lp_objective = sol.objective;
      rec.max_slack = sol.max_slack;
      rec.lp_pivots = sol.pivots;

      const double step_size = max_move(x, sol.x);
      x = sol.x;
      act.theta = sol.theta;
      act.theta_gap = sol.theta_gap;
      write(act, x);
      state = solve_timestep(model, dispatched_power(model, base_, act), opt_.powerflow, t_);
      hard = hard_incidents(state, in_.limits, model);
      rec.hard_incidents = hard;
      act.log.push_back(rec);

      const bool settled = have_prev && std::abs(sol.objective - prev) < opt_.objective_tol;
      if (hard == 0 && (settled || step_size < 1e-10)) {
        act.converged = true;
        break;
      }
      prev = sol.objective;
      have_prev = true;
    }

    act.state = std::move(state);
    act.hard_incidents = hard;
    act.max_angle_deviation_deg = max_angle_deviation(model, act.state);
    act.angle_ok = act.max_angle_deviation_deg <= opt_.angle_limit_deg;
    act.feasible = hard == 0 && act.angle_ok;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const auto& v = vars_[j];
      const double cost = v.price * x[j];
      if (v.kind == Kind::PCurt || v.kind == Kind::GCurt) {
        act.curtailment_cost += cost;
      } else {
        act.flex_cost += cost;
      }
    }
    act.imbalance_cost = opt_.g_v * imbalance_deviation(model, act.state);
    act.objective = act.flex_cost + act.curtailment_cost + act.imbalance_cost;
    return act;
  }

 private:
  struct Linearized {
    std::vector<double> x;
    std::vector<double> theta;
    double objective = 0.0;
    double max_slack = 0.0;
    double theta_gap = 0.0;
    int pivots = 0;
  };

  StepActivation blank() const {
    StepActivation a;
    for (auto* v : {&a.dp_up, &a.dp_dn, &a.dq_up, &a.dq_dn, &a.p_curt, &a.g_curt, &a.theta}) v->assign(nnp_, 0.0);
    return a;
  }

  void write(StepActivation& act, const std::vector<double>& x) const {
    for (auto* v : {&act.dp_up, &act.dp_dn, &act.dq_up, &act.dq_dn, &act.p_curt, &act.g_curt}) {
      std::fill(v->begin(), v->end(), 0.0);
    }
    for (std::size_t j = 0; j < vars_.size(); ++j) field(act, vars_[j].kind, vars_[j].node) = x[j];
  }

  static double max_move(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }

  Linearized solve_lp(const std::vector<double>& xk, const StepState& state, bool flex_only,
                      bool trust = true) const {
    const auto& model = in_.model;
    const auto& limits = in_.limits;
    const std::size_t nv = vars_.size();
    lp::Problem p;

    std::vector<double> lo(nv), hi(nv);
    for (std::size_t j = 0; j < nv; ++j) {
      const auto& v = vars_[j];
      const bool curtail = v.kind == Kind::PCurt || v.kind == Kind::GCurt;
      const double move = trust ? opt_.trust_fraction * v.range : v.range;
      lo[j] = std::max(0.0, xk[j] - move);
      hi[j] = std::min(v.range, xk[j] + move);
      if (flex_only && curtail) lo[j] = hi[j] = 0.0;
      p.add_var(v.price, lo[j], hi[j]);
    }

    // Linear expression Σ g_j (x_j − xk_j) as a row fragment plus constant.
    auto add_limited = [&](const double* g, double base, double bound, bool upper) {
      double lo_v = base, hi_v = base, shift = 0.0;
      for (std::size_t j = 0; j < nv; ++j) {
        lo_v += std::min(g[j] * (lo[j] - xk[j]), g[j] * (hi[j] - xk[j]));
        hi_v += std::max(g[j] * (lo[j] - xk[j]), g[j] * (hi[j] - xk[j]));
        shift += g[j] * xk[j];
      }
      if (upper ? hi_v <= bound : lo_v >= bound) return;
      const std::size_t s = p.add_var(penalty_, 0.0);
      lp::Row& row = p.add_row(upper ? lp::Sense::LessEqual : lp::Sense::GreaterEqual, bound - base + shift);
      for (std::size_t j = 0; j < nv; ++j) row.coef[j] = g[j];
      row.coef[s] = upper ? -1.0 : 1.0;
      slacks_.push_back(s);
    };

    slacks_.clear();
    const auto& obs = in_.nvs.observed;
    for (std::size_t r = 0; r < obs.size(); ++r) {
      if (obs[r].bus == model.slack()) continue;
      const double v = state.v_mag(obs[r].bus, obs[r].phase);
      const double* g = &gv_[r * nv];
      add_limited(g, v, limits.v_min + opt_.voltage_margin, false);
      add_limited(g, v, limits.v_max - opt_.voltage_margin, true);
    }

    std::vector<double> gt(nv);
    for (std::size_t br = 0; br < model.num_branches(); ++br) {
      for (Phase ph : kPhases) {
        if (!model.branch_phases(br).contains(ph)) continue;
        const std::size_t k = idx(ph);
        const Complex s = state.branch_power[br][k];
        const double mag = std::abs(s);
        if (mag < 1e-9) continue;
        const std::size_t row = br * 3 + k;
        for (std::size_t j = 0; j < nv; ++j) {
          const auto& v = vars_[j];
          const double dp = v.a_p * in_.thermal.flow_p_by_p(row, v.col) + v.a_q * in_.thermal.flow_p_by_q(row, v.col);
          const double dq = v.a_p * in_.thermal.flow_q_by_p(row, v.col) + v.a_q * in_.thermal.flow_q_by_q(row, v.col);
          gt[j] = (s.real() * dp + s.imag() * dq) / mag;
        }
        add_limited(gt.data(), mag, model.s_max_pu(br) * (1.0 - opt_.thermal_margin / 100.0), true);
      }
    }

    // Imbalance auxiliaries: θ ≥ V_φ − V̄ and θ ≥ −(V_φ − V̄).
    struct ThetaRow {
      std::size_t var, node;
      std::vector<double> g;
      double base;
    };
    std::vector<ThetaRow> thetas;
    if (opt_.g_v > 0.0) {
      for (std::size_t b = 0; b < model.num_buses(); ++b) {
        if (b == model.slack() || !model.buses()[b].phases.is_three_phase()) continue;
        std::array<std::size_t, 3> r{};
        double mean = 0.0;
        for (Phase ph : kPhases) {
          r[idx(ph)] = model.node_phase_index({b, ph});
          mean += state.v_mag(b, ph) / 3.0;
        }
        for (Phase ph : kPhases) {
          const std::size_t k = idx(ph);
          ThetaRow tr{0, r[k], std::vector<double>(nv), state.v_mag(b, ph) - mean};
          for (std::size_t j = 0; j < nv; ++j) {
            const double gm = (gv_[r[0] * nv + j] + gv_[r[1] * nv + j] + gv_[r[2] * nv + j]) / 3.0;
            tr.g[j] = gv_[r[k] * nv + j] - gm;
          }
          tr.var = p.add_var(opt_.g_v, 0.0);
          double shift = 0.0;
          for (std::size_t j = 0; j < nv; ++j) shift += tr.g[j] * xk[j];
          lp::Row& up = p.add_row(lp::Sense::GreaterEqual, tr.base - shift);
          for (std::size_t j = 0; j < nv; ++j) up.coef[j] = -tr.g[j];
          up.coef[tr.var] = 1.0;
          lp::Row& dn = p.add_row(lp::Sense::GreaterEqual, -tr.base + shift);
          for (std::size_t j = 0; j < nv; ++j) dn.coef[j] = tr.g[j];
          dn.coef[tr.var] = 1.0;
          thetas.push_back(std::move(tr));
        }
      }
    }

    const lp::Solution sol = backend_->solve(p);
    if (sol.status != lp::Status::Optimal) {
      std::ostringstream msg;
      msg << "step " << t_ << ": dispatch LP " << lp::to_string(sol.status);
      throw SolverError(msg.str());
    }

    Linearized out;
    out.pivots = sol.iterations;
    out.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(nv));
    for (std::size_t j = 0; j < nv; ++j) out.x[j] = std::clamp(out.x[j], 0.0, vars_[j].range);
    for (std::size_t s : slacks_) out.max_slack = std::max(out.max_slack, sol.x[s]);
    out.objective = sol.objective;
    for (std::size_t s : slacks_) out.objective -= penalty_ * sol.x[s];
    out.theta.assign(nnp_, 0.0);
    for (const auto& tr : thetas) {
      double dev = tr.base;
      for (std::size_t j = 0; j < nv; ++j) dev += tr.g[j] * (sol.x[j] - xk[j]);
      const double th = sol.x[tr.var];
      out.theta[tr.node] = th;
      out.theta_gap = std::max(out.theta_gap, std::abs(th - std::abs(dev)));
    }
    return out;
  }

  const ActivationInputs& in_;
  std::size_t t_;
  const ActivationOptions& opt_;
  std::unique_ptr<lp::Backend> backend_;
  std::size_t nnp_ = 0;
  NodalPower base_;
  double price_p_ = 0.0, price_g_ = 0.0, penalty_ = 0.0;
  std::vector<DispatchVar> vars_;
  std::vector<double> gv_;
  mutable std::vector<std::size_t> slacks_;
};

}  // namespace

StepActivation solve_step(const ActivationInputs& in, std::size_t t, const ActivationOptions& options) {
  if (!in.limits.curt_price_p || !in.limits.curt_price_g) throw InputError("curtailment prices are not set");
  if (t >= in.profiles.horizon()) throw InputError("step index beyond the horizon");
  if (options.g_v < 0.0) throw InputError("G_V must be non-negative");
  if (!(options.trust_fraction > 0.0 && options.trust_fraction <= 1.0)) {
    throw InputError("trust region fraction must lie in (0, 1]");
  }
  if (options.max_iterations < 1) throw InputError("at least one iteration is required");
  StepSolver solver(in, t, options);
  return solver.run();
}

ActivationResult solve_horizon(const ActivationInputs& in, const ActivationOptions& options) {
  ActivationResult out;
  out.steps.reserve(in.profiles.horizon());
  for (std::size_t t = 0; t < in.profiles.horizon(); ++t) {
    StepActivation s = solve_step(in, t, options);
    if (!s.feasible) {
      std::ostringstream msg;
      msg << "step " << t << ": " << s.hard_incidents << " hard incidents remain after " << s.log.size()
          << " iterations";
      if (!s.angle_ok) msg << "; angle deviation " << s.max_angle_deviation_deg << " deg";
      out.failures.push_back(msg.str());
    }
    out.total_objective += s.objective;
    out.steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace flexact
