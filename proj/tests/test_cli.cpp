#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flexact/cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using flexact::cli::run;

namespace {

struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("flexact_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Light two-step load on a short feeder: no limit is approached.
void write_quiet_case(const Workspace& ws) {
  const auto model = testing::chain(3, 0.01, 0.005, 0.002, 0.001);
  ws.write("net.json", model.to_json().dump());
  std::string prof = "device_id,t,p_kw,q_kvar\n";
  for (const auto& d : model.devices()) prof += d.id + ",0,1,0.2\n" + d.id + ",1,0.5,0.1\n";
  ws.write("prof.csv", prof);
}

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json first_json_line(const std::string& text) { return nlohmann::json::parse(text.substr(0, text.find('\n'))); }

}  // namespace

TEST_CASE("unknown subcommand is a usage error") {
  const Result r = call({"frobnicate"});
  CHECK(r.code == 1);
  const auto j = first_json_line(r.err);
  CHECK(j["error"] == "usage");
  CHECK(j["exit_code"] == 1);
  CHECK(r.err.find("Subcommands") != std::string::npos);
}

TEST_CASE("missing subcommand and missing required options") {
  CHECK(call({}).code == 1);
  CHECK(call({"pf", "--network", "x.json"}).code == 1);
}

TEST_CASE("activation on a quiet horizon writes an empty table") {
  Workspace ws("quiet");
  write_quiet_case(ws);
  const std::string out = (ws.dir / "out").string();
  const Result r = call({"activate", "--network", (ws.dir / "net.json").string(), "--profiles",
                         (ws.dir / "prof.csv").string(), "--gv", "0", "--out", out});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(slurp(fs::path(out) / "activation.csv") == "t,bus,phase,dp_up,dp_dn,dq_up,dq_dn,p_curt,g_curt\n");
  const std::string inc = slurp(fs::path(out) / "incidents_corrected.csv");
  CHECK(inc.find("Under voltage,0,0,1") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "voltages_corrected.csv"));
}

TEST_CASE("power flow outputs and headers") {
  Workspace ws("pf");
  write_quiet_case(ws);
  const std::string out = (ws.dir / "out").string();
  const Result r = call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles",
                         (ws.dir / "prof.csv").string(), "--out", out});
  REQUIRE(r.code == 0);
  const std::string v = slurp(fs::path(out) / "voltages.csv");
  CHECK(v.rfind("t,bus,phase,v_pu,theta_rad\n", 0) == 0);
  CHECK(v.find("\n0,1,A,1,0\n") != std::string::npos);
  CHECK(slurp(fs::path(out) / "branches.csv").rfind("t,branch,phase,loading_pct,p_kw,q_kvar,i_amp\n", 0) == 0);
  CHECK(slurp(fs::path(out) / "incidents.csv").rfind("incident,count,percent,hard\n", 0) == 0);
}

TEST_CASE("nvs and fas tables") {
  Workspace ws("tables");
  write_quiet_case(ws);
  const std::string out = (ws.dir / "out").string();
  const std::vector<std::string> common = {"--network", (ws.dir / "net.json").string(), "--profiles",
                                           (ws.dir / "prof.csv").string(), "--out", out};
  std::vector<std::string> nvs = {"nvs", "--levels", "0.001,0.002", "--snapshot", "1"};
  nvs.insert(nvs.end(), common.begin(), common.end());
  REQUIRE(call(nvs).code == 0);
  const std::string t = slurp(fs::path(out) / "nvs.csv");
  CHECK(t.rfind("obs_bus,obs_phase,pert_bus,pert_phase,nvs_p,nvs_q\n", 0) == 0);
  // 9 observed node-phases × 6 device locations.
  CHECK(std::count(t.begin(), t.end(), '\n') == 1 + 9 * 6);

  std::vector<std::string> fas = {"fas", "--kappa-v", "0.5"};
  fas.insert(fas.end(), common.begin(), common.end());
  REQUIRE(call(fas).code == 0);
  const std::string f = slurp(fs::path(out) / "fas.csv");
  CHECK(f.rfind("t,bus,phase,lam_p_up,lam_p_dn,lam_q_up,lam_q_dn,volt_comp,th_comp,imb_comp\n", 0) == 0);
  CHECK(std::count(f.begin(), f.end(), '\n') == 1 + 2 * 6);
}

TEST_CASE("input errors are reported as JSON with exit code 1") {
  Workspace ws("errors");
  write_quiet_case(ws);
  const std::string out = (ws.dir / "out").string();

  Result r = call({"pf", "--network", (ws.dir / "missing.json").string(), "--profiles",
                   (ws.dir / "prof.csv").string(), "--out", out});
  CHECK(r.code == 1);
  auto j = first_json_line(r.err);
  CHECK(j["error"] == "config");
  CHECK(j["message"].get<std::string>().find("missing.json") != std::string::npos);

  const std::string bad = ws.write("bad.csv", "device_id,t,p_kw,q_kvar\n2A,0,1,0\n");
  r = call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles", bad, "--out", out});
  CHECK(r.code == 1);
  CHECK(first_json_line(r.err)["error"] == "config");

  r = call({"pareto", "--network", (ws.dir / "net.json").string(), "--profiles", (ws.dir / "prof.csv").string(),
            "--grid", "0,0.2,0.1", "--out", out});
  CHECK(r.code == 1);
}

TEST_CASE("non-convergent power flow exits with the solver code") {
  Workspace ws("diverge");
  const auto model = testing::chain(2, 0.5, 0.2);
  ws.write("net.json", model.to_json().dump());
  ws.write("prof.csv", "2A,0,1,0\n2B,0,1,0\n2C,0,1,0\n2A,1,900,0\n2B,1,1,0\n2C,1,1,0\n");
  const Result r = call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles",
                         (ws.dir / "prof.csv").string(), "--out", (ws.dir / "out").string()});
  CHECK(r.code == 2);
  const auto j = first_json_line(r.err);
  CHECK(j["error"] == "solver");
  CHECK(j["message"].get<std::string>().find("step 1") != std::string::npos);
}

TEST_CASE("output directory falls back to the environment") {
  Workspace ws("env");
  write_quiet_case(ws);
  const fs::path env_out = ws.dir / "from_env";
  ::setenv(flexact::cli::kOutEnv, env_out.string().c_str(), 1);
  const Result r =
      call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles", (ws.dir / "prof.csv").string()});
  ::unsetenv(flexact::cli::kOutEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(env_out / "voltages.csv"));
}

TEST_CASE("config file values are applied and unknown keys rejected") {
  Workspace ws("config");
  write_quiet_case(ws);
  const std::string out = (ws.dir / "out").string();
  const std::string cfg = ws.write("cfg.json", R"({"limits": {"v_min": 0.999, "v_max": 1.1}})");
  Result r = call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles", (ws.dir / "prof.csv").string(),
                   "--config", cfg, "--out", out});
  CHECK(r.code == 1);  // v_min above the deadband edge

  const std::string strict = ws.write("strict.json", R"({"limits": {"v_minimum": 0.9}})");
  r = call({"pf", "--network", (ws.dir / "net.json").string(), "--profiles", (ws.dir / "prof.csv").string(),
            "--config", strict, "--out", out});
  CHECK(r.code == 1);
  CHECK(first_json_line(r.err)["message"].get<std::string>().find("v_minimum") != std::string::npos);
}
