#include "flexact/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "flexact/csv_output.hpp"
#include "flexact/pipeline.hpp"

namespace flexact::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string network;
  std::string profiles;
  std::string config;
  std::string flex;
  std::string out;
};

struct Flags {
  std::optional<double> gv;
  std::optional<double> trust;
  std::optional<int> max_iter;
  std::string levels;
  std::string snapshot;
  std::string grid;
  std::optional<double> kappa_v;
  std::optional<double> kappa_t;
  bool imb_sign_normalized = false;
  bool weighted_current = false;
  bool curtailment_last = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--network", c.network, "Network JSON")->required();
  sub->add_option("--profiles", c.profiles, "Profiles CSV")->required();
  sub->add_option("--config", c.config, "Run configuration JSON");
  sub->add_option("--flex", c.flex, "Flexibility limits CSV");
  sub->add_option("--out", c.out, std::string("Output directory (default: $") + kOutEnv + " or ./flexact_out)");
}

fs::path output_dir(const Common& c) {
  fs::path dir;
  if (!c.out.empty()) {
    dir = c.out;
  } else if (const char* env = std::getenv(kOutEnv); env && *env) {
    dir = env;
  } else {
    dir = "flexact_out";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  return dir;
}

RunConfig make_config(const Common& c, const Flags& f) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (f.gv) cfg.activation.g_v = *f.gv;
  if (f.trust) cfg.activation.trust_fraction = *f.trust;
  if (f.max_iter) cfg.activation.max_iterations = *f.max_iter;
  if (!f.levels.empty()) cfg.sensitivity.levels = parse_number_list(f.levels);
  if (!f.snapshot.empty()) cfg.snapshot = f.snapshot;
  if (!f.grid.empty()) cfg.gv_grid = parse_number_list(f.grid);
  if (f.kappa_v) cfg.fas.gains.kappa_v = *f.kappa_v;
  if (f.kappa_t) cfg.fas.gains.kappa_t = *f.kappa_t;
  if (f.imb_sign_normalized) cfg.fas.imbalance.sign_normalized = true;
  if (f.weighted_current) cfg.fas.weighted_current = true;
  if (f.curtailment_last) cfg.activation.curtailment_last = true;
  cfg.validate();
  return cfg;
}

PipelinePaths paths_of(const Common& c) {
  PipelinePaths p{c.network, c.profiles, std::nullopt};
  if (!c.flex.empty()) p.flex = fs::path(c.flex);
  return p;
}

void print_incidents(std::ostream& out, const IncidentReport& r, const OperatingLimits& limits) {
  for (const auto& row : r.rows(limits)) {
    out << "  " << row.label << ": " << row.count << " (" << csv::num(row.percent) << " %)\n";
  }
}

int cmd_pf(const Common& c, const Flags& f, std::ostream& out) {
  const RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  const NetworkModel model = load_network(c.network);
  const ProfileSet profiles = load_profiles(c.profiles, model);
  const GridState state = solve_horizon(model, profiles, cfg.powerflow);
  const IncidentReport rep = scan_incidents(state, cfg.limits, model, cfg.scope);
  csv::to_file(dir / "voltages.csv", [&](std::ostream& o) { csv::write_voltages(o, model, state); });
  csv::to_file(dir / "branches.csv", [&](std::ostream& o) { csv::write_branches(o, model, state); });
  csv::to_file(dir / "incidents.csv", [&](std::ostream& o) { csv::write_incidents(o, rep, cfg.limits); });
  out << "power flow: " << state.horizon() << " steps\n";
  print_incidents(out, rep, cfg.limits);
  return kExitOk;
}

int cmd_nvs(const Common& c, const Flags& f, std::ostream& out) {
  const RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  const NetworkModel model = load_network(c.network);
  const ProfileSet profiles = load_profiles(c.profiles, model);
  const NodalPower snap = sensitivity_snapshot(model, profiles, cfg.snapshot);
  const SensitivityTable nvs = compute_nvs(model, snap, cfg.sensitivity, cfg.snapshot);
  csv::to_file(dir / "nvs.csv", [&](std::ostream& o) { csv::write_nvs(o, nvs, model); });
  out << "sensitivities: " << nvs.observed.size() << " observed x " << nvs.perturbed.size() << " perturbed, "
      << nvs.levels.size() << " levels\n";
  for (const auto& w : nvs.warnings) out << "warning: " << w << '\n';
  return kExitOk;
}

int cmd_fas(const Common& c, const Flags& f, std::ostream& out) {
  const RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  const Pipeline p = build_pipeline(paths_of(c), cfg);
  csv::to_file(dir / "fas.csv", [&](std::ostream& o) { csv::write_fas(o, p.fas, p.model); });
  out << "FAS: max |lambda| " << csv::num(p.fas.max_abs()) << ", max saturation "
      << csv::num(p.fas.saturation.max_level()) << '\n';
  return kExitOk;
}

void require_prices(const Pipeline& p) {
  const auto bad = price_check(p.fas, p.limits);
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << "curtailment price " << bad.front().price << " does not exceed signal " << bad.front().lambda << " at step "
      << bad.front().t << " (" << bad.size() << " violations)";
  throw InputError(msg.str());
}

ActivationResult activate(const Pipeline& p, const fs::path& dir) {
  require_prices(p);
  const ActivationResult res = solve_horizon(p.inputs(), p.config.activation);
  csv::to_file(dir / "activation.csv", [&](std::ostream& o) { csv::write_activation(o, res, p.model); });
  const GridState after = res.grid_state();
  const IncidentReport rep = scan_incidents(after, p.limits, p.model, p.config.scope);
  csv::to_file(dir / "incidents_corrected.csv", [&](std::ostream& o) { csv::write_incidents(o, rep, p.limits); });
  csv::to_file(dir / "voltages_corrected.csv", [&](std::ostream& o) { csv::write_voltages(o, p.model, after); });
  return res;
}

void fail_if_infeasible(const ActivationResult& res) {
  if (res.feasible()) return;
  std::ostringstream msg;
  msg << res.failures.size() << " infeasible steps; first: " << res.failures.front();
  throw InfeasibleError(msg.str());
}

int cmd_activate(const Common& c, const Flags& f, std::ostream& out) {
  const RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  const Pipeline p = build_pipeline(paths_of(c), cfg);
  const ActivationResult res = activate(p, dir);
  out << "activation: G_V " << csv::num(cfg.activation.g_v) << ", objective " << csv::num(res.total_objective) << '\n';
  print_incidents(out, scan_incidents(res.grid_state(), p.limits, p.model, cfg.scope), p.limits);
  fail_if_infeasible(res);
  return kExitOk;
}

KneeChoice sweep(const Pipeline& p, const fs::path& dir, std::ostream& out) {
  const std::vector<ParetoPoint> pts = pareto_sweep(p.inputs(), p.config.gv_grid, p.config.activation);
  csv::to_file(dir / "pareto.csv", [&](std::ostream& o) { csv::write_pareto(o, pts); });
  for (const auto& pt : pts) {
    if (!pt.ok) out << "warning: G_V " << csv::num(pt.g_v) << ": " << pt.error << '\n';
  }
  const KneeChoice knee = select_knee(pts, p.config.knee_fraction);
  for (const auto& w : knee.warnings) out << "warning: " << w << '\n';
  return knee;
}

int cmd_pareto(const Common& c, const Flags& f, std::ostream& out) {
  const RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  const Pipeline p = build_pipeline(paths_of(c), cfg);
  require_prices(p);
  const KneeChoice knee = sweep(p, dir, out);
  out << "chosen G_V " << csv::num(knee.g_v) << '\n';
  return kExitOk;
}

double reduction_pct(double before, double after) { return before > 0.0 ? 100.0 * (before - after) / before : 0.0; }

int cmd_report(const Common& c, const Flags& f, std::ostream& out) {
  RunConfig cfg = make_config(c, f);
  const fs::path dir = output_dir(c);
  Pipeline p = build_pipeline(paths_of(c), cfg);
  require_prices(p);

  json summary;
  if (f.gv) {
    summary["gv_source"] = "given";
  } else {
    const KneeChoice knee = sweep(p, dir, out);
    p.config.activation.g_v = knee.g_v;
    summary["gv_source"] = "pareto";
    summary["knee_reached"] = knee.knee_reached;
  }
  const double gv = p.config.activation.g_v;
  summary["gv"] = gv;

  const ActivationResult res = activate(p, dir);
  const GridState after = res.grid_state();
  const IncidentReport before_rep = scan_incidents(p.base, p.limits, p.model, cfg.scope);
  const IncidentReport after_rep = scan_incidents(after, p.limits, p.model, cfg.scope);
  const VufSeries vb = compute_vuf(p.model, p.base);
  const VufSeries va = compute_vuf(p.model, after);

  csv::to_file(dir / "report.csv", [&](std::ostream& o) {
    o << "metric,uncorrected,uncorrected_pct,corrected,corrected_pct,hard\n";
    const auto rb = before_rep.rows(p.limits), ra = after_rep.rows(p.limits);
    for (std::size_t i = 0; i < rb.size(); ++i) {
      o << rb[i].label << ',' << rb[i].count << ',' << csv::num(rb[i].percent) << ',' << ra[i].count << ','
        << csv::num(ra[i].percent) << ',' << (rb[i].hard ? 1 : 0) << '\n';
    }
    o << "Mean VUF," << csv::num(vb.mean) << ",," << csv::num(va.mean) << ",,0\n";
    o << "Max VUF," << csv::num(vb.max) << ",," << csv::num(va.max) << ",,0\n";
  });
  csv::to_file(dir / "vuf_series.csv", [&](std::ostream& o) { csv::write_vuf_series(o, vb, va); });

  summary["objective"] = res.total_objective;
  summary["mean_vuf"] = {{"uncorrected", vb.mean}, {"corrected", va.mean}, {"reduction_pct", reduction_pct(vb.mean, va.mean)}};
  summary["max_vuf"] = {{"uncorrected", vb.max}, {"corrected", va.max}, {"reduction_pct", reduction_pct(vb.max, va.max)}};
  summary["hard_incidents"] = {{"uncorrected", before_rep.hard_total()}, {"corrected", after_rep.hard_total()}};
  summary["infeasible_steps"] = res.failures;
  csv::to_file(dir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });

  out << "G_V " << csv::num(gv) << " (" << summary["gv_source"].get<std::string>() << ")\n";
  out << "incident                    uncorrected        corrected\n";
  const auto rb = before_rep.rows(p.limits), ra = after_rep.rows(p.limits);
  for (std::size_t i = 0; i < rb.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "%-26s %5zu (%6.2f%%) %5zu (%6.2f%%)%s\n", rb[i].label.c_str(), rb[i].count,
                  rb[i].percent, ra[i].count, ra[i].percent, rb[i].hard ? "  *" : "");
    out << line;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %14.4f %16.4f\n", "Mean VUF (%)", vb.mean, va.mean);
  out << line;
  std::snprintf(line, sizeof line, "%-26s %14.4f %16.4f\n", "Max VUF (%)", vb.max, va.max);
  out << line;
  fail_if_infeasible(res);
  return kExitOk;
}

void emit_error(std::ostream& err, const char* kind, int code, const std::string& message) {
  err << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flexibility activation signals and three-phase resource activation"};
  app.name("flexact");
  app.require_subcommand(1);

  Common common;
  Flags flags;
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Common&, const Flags&, std::ostream&);
  };
  const Entry entries[] = {
      {"pf", "Uncorrected power flow, voltages and incidents", cmd_pf},
      {"nvs", "Nodal voltage sensitivities", cmd_nvs},
      {"fas", "Flexibility activation signals", cmd_fas},
      {"activate", "Resource activation and corrected state", cmd_activate},
      {"pareto", "G_V sweep and knee selection", cmd_pareto},
      {"report", "Before/after incident and VUF summary", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, common);
    subs.emplace_back(sub, &e);
  }
  auto* nvs = subs[1].first;
  nvs->add_option("--levels", flags.levels, "Perturbation levels, pu, comma separated");
  nvs->add_option("--snapshot", flags.snapshot, "\"mean\" or a step index");
  for (std::size_t i = 2; i < subs.size(); ++i) {
    CLI::App* sub = subs[i].first;
    sub->add_option("--kappa-v", flags.kappa_v, "Voltage saturation gain");
    sub->add_option("--kappa-t", flags.kappa_t, "Thermal saturation gain");
    sub->add_flag("--imb-sign-normalized", flags.imb_sign_normalized, "Sign-normalized current imbalance terms");
    sub->add_flag("--weighted-current", flags.weighted_current, "Rating-weighted projected current");
  }
  for (std::size_t i = 3; i < subs.size(); ++i) {
    CLI::App* sub = subs[i].first;
    sub->add_option("--trust", flags.trust, "Trust region fraction per iteration");
    sub->add_option("--max-iter", flags.max_iter, "Maximum SLP iterations");
    sub->add_flag("--curtailment-last", flags.curtailment_last, "Flexibility-only dispatch first");
  }
  subs[3].first->add_option("--gv", flags.gv, "Imbalance gain G_V");
  subs[5].first->add_option("--gv", flags.gv, "Imbalance gain G_V (tuned by sweep when absent)");
  subs[4].first->add_option("--grid", flags.grid, "G_V grid, comma separated, ascending");
  subs[5].first->add_option("--grid", flags.grid, "G_V grid for tuning");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", kExitConfig, e.what());
    err << app.help();
    return kExitConfig;
  }

  for (const auto& [sub, entry] : subs) {
    if (!sub->parsed()) continue;
    try {
      return entry->fn(common, flags, out);
    } catch (const InfeasibleError& e) {
      emit_error(err, "infeasible", kExitInfeasible, e.what());
      return kExitInfeasible;
    } catch (const SolverError& e) {
      emit_error(err, "solver", kExitSolver, e.what());
      return kExitSolver;
    } catch (const InputError& e) {
      emit_error(err, "config", kExitConfig, e.what());
      return kExitConfig;
    } catch (const std::exception& e) {
      emit_error(err, "config", kExitConfig, e.what());
      return kExitConfig;
    }
  }
  emit_error(err, "usage", kExitConfig, "no subcommand given");
  return kExitConfig;
}

}  // namespace flexact::cli
