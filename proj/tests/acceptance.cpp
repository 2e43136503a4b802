// Acceptance suite on the bundled 41-bus feeder. Prints one PASS/FAIL line
// per criterion and exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "flexact/cli.hpp"
#include "flexact/csv_output.hpp"
#include "flexact/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace flexact;

namespace {

const std::string kData = FLEXACT_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared fixture state, computed once.
struct Fixture {
  Pipeline pipeline;
  std::vector<ParetoPoint> sweep;
  KneeChoice knee;
  ActivationResult tuned;
  double seconds = 0.0;
};

Fixture& fixture() {
  static Fixture f = [] {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg;
    Pipeline p = build_pipeline({kData + "/feeder41/network.json", kData + "/feeder41/profiles.csv", std::nullopt}, cfg);
    std::vector<ParetoPoint> sweep = pareto_sweep(p.inputs(), cfg.gv_grid, cfg.activation);
    KneeChoice knee = select_knee(sweep, cfg.knee_fraction);
    ActivationOptions opt = cfg.activation;
    opt.g_v = knee.g_v;
    ActivationResult tuned = solve_horizon(p.inputs(), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return Fixture{std::move(p), std::move(sweep), std::move(knee), std::move(tuned), secs};
  }();
  return f;
}

Outcome hard_violations() {
  Outcome o;
  Fixture& f = fixture();
  const Pipeline& p = f.pipeline;
  const IncidentReport before = scan_incidents(p.base, p.limits, p.model, p.config.scope);
  const IncidentReport after = scan_incidents(f.tuned.grid_state(), p.limits, p.model, p.config.scope);
  o.require(before.under_voltage > 0, "no uncorrected under-voltage");
  o.require(before.over_voltage > 0, "no uncorrected over-voltage");
  o.require(before.thermal_overload > 0, "no uncorrected thermal overload");
  o.require(f.tuned.feasible(), "dispatch infeasible");
  o.require(after.hard_total() == 0, "hard incidents remain after activation");
  o.require(f.seconds < 60.0, "runtime above 60 s");
  std::ostringstream s;
  s << "before UV/OV/TH " << before.under_voltage << '/' << before.over_voltage << '/' << before.thermal_overload
    << ", after " << after.under_voltage << '/' << after.over_voltage << '/' << after.thermal_overload
    << ", tuned G_V " << csv::num(f.knee.g_v) << ", tuning+activation " << fmt("%.1f", f.seconds) << " s";
  o.note(s.str());
  return o;
}

Outcome vuf_reduction() {
  Outcome o;
  Fixture& f = fixture();
  const VufSeries before = compute_vuf(f.pipeline.model, f.pipeline.base);
  const VufSeries after = compute_vuf(f.pipeline.model, f.tuned.grid_state());
  const double mean_drop = 100.0 * (before.mean - after.mean) / before.mean;
  const double max_drop = 100.0 * (before.max - after.max) / before.max;
  o.require(mean_drop >= 50.0, "mean VUF reduction below 50%");
  o.require(max_drop >= 50.0, "max VUF reduction below 50%");
  o.note("mean VUF " + fmt("%.4f", before.mean) + " -> " + fmt("%.4f", after.mean) + " % (-" +
         fmt("%.1f", mean_drop) + "%), max VUF " + fmt("%.4f", before.max) + " -> " + fmt("%.4f", after.max) +
         " % (-" + fmt("%.1f", max_drop) + "%)");
  return o;
}

Outcome powerflow_oracle() {
  Outcome o;
  // 2-bus single-phase line: r = 0.01, x = 0.005 pu, load 0.1 + j0.03 pu.
  const double r = 0.01, x = 0.005, pl = 0.1, ql = 0.03;
  const double zb = 230.0 * 230.0 / 100000.0;
  const NetworkModel m = NetworkModel::from_json(testing::network_doc(
      {testing::bus("1", "ABC", true), testing::bus("2", "A")}, {testing::branch("L", "1", "2", r * zb, x * zb)},
      {testing::device("d", "2", "A")}));
  NodalPower load(2, PhaseComplex{});
  load[1][0] = Complex(pl, ql);
  const StepState s = solve_timestep(m, load);
  const double b = 1.0 - 2.0 * (r * pl + x * ql), c = (r * r + x * x) * (pl * pl + ql * ql);
  const double exact = std::sqrt((b + std::sqrt(b * b - 4.0 * c)) / 2.0);
  const double err = std::abs(s.v_mag(1, Phase::A) - exact);
  o.require(err <= 1e-8, "two-bus magnitude off by " + fmt("%.3g", err));

  const Pipeline& p = fixture().pipeline;
  double worst = 0.0;
  const ActivationResult& tuned = fixture().tuned;
  for (std::size_t t = 0; t < p.base.horizon(); ++t) {
    const NodalPower load = p.profiles.nodal_power(p.model, t);
    worst = std::max(worst, kirchhoff_residual(p.model, load, p.base.steps[t]));
    const NodalPower dispatched = dispatched_power(p.model, load, tuned.steps[t]);
    worst = std::max(worst, kirchhoff_residual(p.model, dispatched, tuned.steps[t].state));
  }
  o.require(worst < 1e-6, "Kirchhoff residual " + fmt("%.3g", worst));
  o.note("two-bus error " + fmt("%.2g", err) + " pu, worst Kirchhoff residual " + fmt("%.2g", worst) + " pu");
  return o;
}

Outcome sensitivity_consistency() {
  Outcome o;
  const Pipeline& p = fixture().pipeline;
  const NodalPower snap = sensitivity_snapshot(p.model, p.profiles, p.config.snapshot);
  SensitivityOptions half = p.config.sensitivity;
  for (double& l : half.levels) l /= 2.0;
  const SensitivityTable a = p.nvs, b = compute_nvs(p.model, snap, half);
  double worst = 0.0;
  std::size_t compared = 0;
  for (const auto* mats : {&a.nvs_p, &a.nvs_q}) {
    const auto& other = mats == &a.nvs_p ? b.nvs_p : b.nvs_q;
    for (std::size_t i = 0; i < mats->data().size(); ++i) {
      const double x = mats->data()[i], y = other.data()[i];
      if (x == 0.0 && y == 0.0) continue;
      worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), std::abs(y)));
      ++compared;
    }
  }
  o.require(worst < 0.05, "largest relative change " + fmt("%.3g", worst));
  std::size_t non_negative = 0;
  for (std::size_t c = 0; c < a.perturbed.size(); ++c) non_negative += !(a.own_p(c) < 0.0);
  o.require(non_negative == 0, std::to_string(non_negative) + " load nodes with own NVS^P >= 0");
  o.note(std::to_string(compared) + " entries, largest relative change " + fmt("%.2e", worst) + ", " +
         std::to_string(a.perturbed.size()) + " load node-phases negative");
  return o;
}

Outcome imbalance_identities() {
  Outcome o;
  const auto pts = node_imbalance({1.1, 1.05, 1.03}, {0.0, 0.0, 0.0});
  const double expect[3] = {-0.0377, 0.0094, 0.0283};
  for (int k = 0; k < 3; ++k) {
    const double rounded = std::round(pts[k].u_v * 1e4) / 1e4;
    o.require(rounded == expect[k], "worked example phase " + std::to_string(k) + " gives " + fmt("%.6f", pts[k].u_v));
  }

  Fixture& f = fixture();
  const Pipeline& p = f.pipeline;
  double worst = 0.0;
  std::size_t nodes = 0;
  const GridState corrected = f.tuned.grid_state();
  for (const GridState* state_ptr : {&p.base, &corrected}) {
    const GridState& state = *state_ptr;
    std::vector<StepProjection> proj;
    for (const auto& st : state.steps) proj.push_back(project_step(p.model, st, p.config.fas.weighted_current));
    const ImbalanceField field = imbalance_metrics(p.model, state, proj, p.config.fas.imbalance);
    for (std::size_t t = 0; t < state.horizon(); ++t) {
      for (std::size_t b = 0; b < p.model.num_buses(); ++b) {
        if (!p.model.buses()[b].phases.is_three_phase()) continue;
        double su = 0.0, si = 0.0;
        for (Phase ph : kPhases) {
          const ImbalancePoint& ip = field[t][p.model.node_phase_index({b, ph})];
          su += ip.u_v;
          si += ip.u_i;
        }
        worst = std::max({worst, std::abs(su), std::abs(si)});
        ++nodes;
      }
    }
  }
  o.require(worst <= 1e-12, "largest phase sum " + fmt("%.3g", worst));
  o.note("worked example (" + fmt("%.4f", pts[0].u_v) + ", " + fmt("%+.4f", pts[1].u_v) + ", " +
         fmt("%+.4f", pts[2].u_v) + "), largest |sum U| " + fmt("%.2g", worst) + " over " + std::to_string(nodes) +
         " node-steps");
  return o;
}

Outcome droop_suite() {
  Outcome o;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t bad = 0;
  const int trials = 5000;
  for (int i = 0; i < trials; ++i) {
    OperatingLimits l;
    l.v_min = 0.85 + 0.07 * u(rng);
    l.dv_perm_lo = 0.005 + (0.99 - l.v_min - 0.005) * u(rng);
    l.v_max = 1.03 + 0.1 * u(rng);
    l.dv_perm_hi = 0.005 + (l.v_max - 1.0 - 0.01) * u(rng);
    l.dt_perm = 10.0 + 85.0 * u(rng);
    const double vc = 0.01 + 3.0 * u(rng), tc = 0.01 + 3.0 * u(rng);

    const auto dead = voltage_component(l.deadband_lo() + (l.deadband_hi() - l.deadband_lo()) * u(rng), l, vc);
    const auto th_dead = thermal_component((2.0 * u(rng) - 1.0) * l.dt_perm, l, tc);
    bool ok = dead.up == 0.0 && dead.down == 0.0 && th_dead.up == 0.0 && th_dead.down == 0.0;

    ok = ok && voltage_component(l.v_min, l, vc).up == vc && voltage_component(l.v_max, l, vc).down == -vc;
    ok = ok && voltage_component(l.v_min - 0.1 * u(rng), l, vc).up == vc;
    ok = ok && voltage_component(l.v_max + 0.1 * u(rng), l, vc).down == -vc;
    const auto th_sat = thermal_component(100.0 + 50.0 * u(rng), l, tc);
    ok = ok && th_sat.up == tc && th_sat.down == -tc;
    const auto th_rev = thermal_component(-100.0 - 50.0 * u(rng), l, tc);
    ok = ok && th_rev.up == -tc && th_rev.down == tc;

    const double mid_lo = voltage_component(0.5 * (l.v_min + l.deadband_lo()), l, vc).up;
    const double mid_hi = voltage_component(0.5 * (l.v_max + l.deadband_hi()), l, vc).down;
    const double mid_th = thermal_component(0.5 * (l.dt_perm + 100.0), l, tc).up;
    ok = ok && std::abs(mid_lo - 0.5 * vc) <= 1e-9 * vc && std::abs(mid_hi + 0.5 * vc) <= 1e-9 * vc &&
         std::abs(mid_th - 0.5 * tc) <= 1e-9 * tc;
    bad += !ok;
  }
  o.require(bad == 0, std::to_string(bad) + " of " + std::to_string(trials) + " random limit sets failed");
  o.note(std::to_string(trials) + " randomized limit sets");
  return o;
}

Outcome gating_hierarchy() {
  Outcome o;
  Fixture& f = fixture();
  const Pipeline& p = f.pipeline;
  const std::size_t nnp = p.model.node_phases().size();

  std::size_t leaks = 0;
  auto check_gating = [&](const ActivationResult& r) {
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      const StepActivation& a = r.steps[t];
      for (std::size_t n = 0; n < nnp; ++n) {
        const FasChannels& lam = p.fas.at(t, n).total;
        leaks += (lam.p_up == 0.0 && a.dp_up[n] != 0.0) + (lam.p_dn == 0.0 && a.dp_dn[n] != 0.0) +
                 (lam.q_up == 0.0 && a.dq_up[n] != 0.0) + (lam.q_dn == 0.0 && a.dq_dn[n] != 0.0);
      }
    }
  };

  std::size_t solvable = 0, curtailed = 0;
  for (double gv : {0.0, f.knee.g_v}) {
    ActivationOptions priced = p.config.activation;
    priced.g_v = gv;
    ActivationOptions flex_only = priced;
    flex_only.allow_curtailment = false;
    const ActivationResult with = gv == f.knee.g_v ? f.tuned : solve_horizon(p.inputs(), priced);
    const ActivationResult without = solve_horizon(p.inputs(), flex_only);
    check_gating(with);
    for (std::size_t t = 0; t < with.steps.size(); ++t) {
      if (!without.steps[t].feasible) continue;
      ++solvable;
      curtailed += with.steps[t].total_curtailment() != 0.0;
    }
  }
  o.require(price_check(p.fas, p.limits).empty(), "curtailment prices do not dominate the signals");
  o.require(solvable > 0, "no step is solvable by flexibility alone");
  o.require(curtailed == 0, std::to_string(curtailed) + " flexibility-solvable steps used curtailment");
  o.require(leaks == 0, std::to_string(leaks) + " dispatch values where the signal is zero");
  o.note(std::to_string(solvable) + " flexibility-solvable step runs, none curtailed; no dispatch outside nonzero signals");
  return o;
}

Outcome convexification() {
  Outcome o;
  Fixture& f = fixture();
  const Pipeline& p = f.pipeline;
  double worst = 0.0;
  std::size_t steps = 0;
  std::vector<double> gains;
  for (const auto& pt : f.sweep)
    if (pt.g_v > 0.0) gains.push_back(pt.g_v);
  for (double gv : gains) {
    ActivationOptions opt = p.config.activation;
    opt.g_v = gv;
    const ActivationResult r = gv == f.knee.g_v ? f.tuned : solve_horizon(p.inputs(), opt);
    for (const auto& s : r.steps) {
      worst = std::max(worst, s.theta_gap);
      ++steps;
    }
  }
  o.require(!gains.empty(), "no positive G_V in the grid");
  o.require(worst <= 1e-6, "largest |theta - |V - Vbar|| " + fmt("%.3g", worst));
  o.note(std::to_string(steps) + " step optima over " + std::to_string(gains.size()) + " positive G_V, largest gap " +
         fmt("%.2g", worst));
  return o;
}

Outcome pareto() {
  Outcome o;
  const auto& sweep = fixture().sweep;
  for (const auto& pt : sweep) o.require(pt.ok, "sweep point G_V " + csv::num(pt.g_v) + " failed: " + pt.error);
  o.require(sweep.back().mean_vuf <= sweep.front().mean_vuf, "mean VUF at the largest G_V exceeds G_V = 0");
  std::size_t drops = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const double tol = 1e-6 * std::max(1.0, std::abs(sweep[i - 1].objective));
    drops += sweep[i].objective < sweep[i - 1].objective - tol;
  }
  o.require(drops == 0, std::to_string(drops) + " objective decreases along the sweep");

  std::vector<ParetoPoint> synthetic;
  const double gv[] = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  const double vuf[] = {1.05, 0.62, 0.36, 0.19, 0.185, 0.182, 0.18};
  for (int i = 0; i < 7; ++i) synthetic.push_back({gv[i], 0.0, vuf[i], vuf[i], 0, true, ""});
  const KneeChoice k = select_knee(synthetic);
  o.require(k.g_v == 0.05, "synthetic knee at " + csv::num(k.g_v));
  o.note("mean VUF " + fmt("%.4f", sweep.front().mean_vuf) + " at G_V=0, " + fmt("%.4f", sweep.back().mean_vuf) +
         " at G_V=" + csv::num(sweep.back().g_v) + "; synthetic knee " + csv::num(k.g_v));
  return o;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "flexact_acceptance";
  fs::remove_all(root);
  std::ostringstream sink;
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    codes[i] = cli::run({"report", "--network", kData + "/feeder41/network.json", "--profiles",
                         kData + "/feeder41/profiles.csv", "--out", (root / std::to_string(i)).string()},
                        sink, sink);
  }
  o.require(codes[0] == 0 && codes[1] == 0, "report exited with an error");
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "0")) {
    ++files;
    const fs::path twin = root / "1" / e.path().filename();
    if (!fs::exists(twin) || read_all(e.path()) != read_all(twin)) {
      ++differ;
      o.require(false, e.path().filename().string() + " differs");
    }
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "1")) ++files_b;
  o.require(files > 0 && files == files_b, "output file sets differ");
  fs::remove_all(root);
  o.note(std::to_string(files) + " report files byte-identical across two runs");
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"hard violations eliminated", hard_violations},
      {"VUF reduction", vuf_reduction},
      {"power-flow oracle", powerflow_oracle},
      {"sensitivity consistency", sensitivity_consistency},
      {"imbalance identities", imbalance_identities},
      {"FAS droop suite", droop_suite},
      {"gating and hierarchy", gating_hierarchy},
      {"convexification tightness", convexification},
      {"Pareto sweep", pareto},
      {"determinism", determinism},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << name << " (" << o.detail << ")"
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
