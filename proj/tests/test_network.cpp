#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flexact/limits.hpp"
#include "support.hpp"

using namespace flexact;
using testing::branch;
using testing::bus;
using testing::device;
using testing::network_doc;

namespace {

nlohmann::json small_doc() {
  return network_doc({bus("1", "ABC", true), bus("2"), bus("10", "AC")},
                     {branch("L1", "1", "2", 0.1, 0.05, 0.02, 0.01), branch("L2", "2", "10", 0.2, 0.1)},
                     {device("d1", "2", "ABC"), device("d2", "10", "A"), device("d3", "10", "C")});
}

ModelErrorCode code_of(const nlohmann::json& doc) {
  try {
    NetworkModel::from_json(doc);
  } catch (const ModelError& e) {
    return e.code();
  }
  FAIL("expected a ModelError");
  return ModelErrorCode::Parse;
}

}  // namespace

TEST_CASE("bus ids sort numerically") {
  CHECK(bus_id_less("2", "10"));
  CHECK_FALSE(bus_id_less("10", "2"));
  CHECK(bus_id_less("a", "b"));
  const NetworkModel m = NetworkModel::from_json(small_doc());
  REQUIRE(m.num_buses() == 3);
  CHECK(m.buses()[0].id == "1");
  CHECK(m.buses()[1].id == "2");
  CHECK(m.buses()[2].id == "10");
}

TEST_CASE("topology is oriented from the slack") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  CHECK(m.slack() == 0);
  CHECK(m.branch_from(1) == 1);
  CHECK(m.branch_to(1) == 2);
  CHECK(m.depth(2) == 2);
  CHECK(m.parent_branch(2) == 1);
  CHECK(m.incident_branches(1).front() == 0);
  CHECK(m.branch_phases(1) == PhaseSet::parse("AC"));
}

TEST_CASE("per-unit impedance zeroes absent phases") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const double zb = m.z_base_ohm();
  CHECK(zb == doctest::Approx(230.0 * 230.0 / 100000.0));
  CHECK(m.z_pu(0)[0][1].real() == doctest::Approx(0.02 / zb));
  CHECK(m.z_pu(1)[1][1] == Complex(0.0, 0.0));
  CHECK(m.z_pu(1)[0][0].real() == doctest::Approx(0.2 / zb));
}

TEST_CASE("node phases and device locations") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  CHECK(m.node_phases().size() == 8);
  CHECK(m.node_phase_index({2, Phase::B}) == NetworkModel::npos);
  CHECK(m.device_node_phases().size() == 5);
  CHECK(m.hosts_device({2, Phase::C}));
  CHECK_FALSE(m.hosts_device({0, Phase::A}));
}

TEST_CASE("model errors carry distinct codes") {
  auto doc = small_doc();

  SUBCASE("duplicate bus") {
    doc["buses"].push_back(bus("2"));
    CHECK(code_of(doc) == ModelErrorCode::DuplicateBus);
  }
  SUBCASE("unknown bus on a branch") {
    doc["branches"][1]["to"] = "99";
    CHECK(code_of(doc) == ModelErrorCode::UnknownBus);
  }
  SUBCASE("device on an absent phase") {
    doc["devices"][1]["connection"] = "B";
    CHECK(code_of(doc) == ModelErrorCode::AbsentPhase);
  }
  SUBCASE("no slack") {
    doc["buses"][0]["slack"] = false;
    CHECK(code_of(doc) == ModelErrorCode::NoSlack);
  }
  SUBCASE("multiple slack") {
    doc["buses"][1]["slack"] = true;
    try {
      NetworkModel::from_json(doc);
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.code() == ModelErrorCode::MultipleSlack);
      CHECK(std::string(e.what()).find("multiple slack") != std::string::npos);
    }
  }
  SUBCASE("asymmetric impedance") {
    doc["branches"][0]["r_ohm"][0][1] = 0.5;
    CHECK(code_of(doc) == ModelErrorCode::InvalidImpedance);
  }
  SUBCASE("non-positive resistance") {
    doc["branches"][0]["r_ohm"][2][2] = 0.0;
    CHECK(code_of(doc) == ModelErrorCode::InvalidImpedance);
  }
  SUBCASE("zero rating") {
    doc["branches"][0]["s_max_kva"] = 0.0;
    CHECK(code_of(doc) == ModelErrorCode::InvalidRating);
  }
  SUBCASE("loop") {
    doc["branches"].push_back(branch("L3", "1", "10", 0.1, 0.1));
    CHECK(code_of(doc) == ModelErrorCode::Topology);
  }
  SUBCASE("islanded bus") {
    doc["buses"].push_back(bus("7"));
    CHECK(code_of(doc) == ModelErrorCode::Topology);
  }
  SUBCASE("branch phases exceed upstream bus") {
    doc["buses"][1]["phases"] = "A";
    doc["devices"][0]["connection"] = "A";
    CHECK(code_of(doc) == ModelErrorCode::AbsentPhase);
  }
  SUBCASE("duplicate device") {
    doc["devices"].push_back(device("d1", "2", "A"));
    CHECK(code_of(doc) == ModelErrorCode::DuplicateDevice);
  }
  SUBCASE("voltage base mismatch") {
    doc["buses"][1]["v_base"] = 240.0;
    CHECK(code_of(doc) == ModelErrorCode::BaseMismatch);
  }
}

TEST_CASE("model round-trips through JSON") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const NetworkModel back = NetworkModel::from_json(m.to_json());
  CHECK(back == m);

  const auto path = std::filesystem::temp_directory_path() / "flexact_roundtrip.json";
  save_network(m, path);
  CHECK(load_network(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("bundled fixture counts") {
  const NetworkModel m = load_network(testing::data_path("feeder41/network.json"));
  CHECK(m.num_buses() == 41);
  CHECK(m.devices().size() == 18);
  std::size_t single = 0;
  for (const auto& d : m.devices()) single += d.connection != Connection::ThreePhase;
  CHECK(single == 16);
  const ProfileSet p = load_profiles(testing::data_path("feeder41/profiles.csv"), m);
  CHECK(p.horizon() == 24);
  CHECK(m.node_phases().size() * p.horizon() == 2952);
}

TEST_CASE("profile parsing") {
  const NetworkModel m = NetworkModel::from_json(small_doc());

  SUBCASE("valid with step comment and unreferenced profile") {
    std::istringstream in(
        "# step_minutes=15\ndevice_id,t,p_kw,q_kvar\n"
        "d1,0,3,0.3\nd1,1,6,0.6\nd2,0,1,0\nd2,1,-2,0\nd3,0,0,0\nd3,1,0,0\nextra,0,1,1\n");
    const ProfileSet p = parse_profiles(in, m);
    CHECK(p.horizon() == 2);
    CHECK(p.step_minutes() == 15.0);
    REQUIRE(p.warnings().size() == 1);
    CHECK(p.warnings()[0].find("extra") != std::string::npos);

    const NodalPower s = p.nodal_power(m, 1);
    CHECK(s[1][0].real() == doctest::Approx(6.0 / 3.0 / 100.0));
    CHECK(s[1][1] == s[1][2]);
    CHECK(s[2][0].real() == doctest::Approx(-0.02));
  }
  SUBCASE("all-zero profiles are valid") {
    std::istringstream in("d1,0,0,0\nd2,0,0,0\nd3,0,0,0\n");
    CHECK(parse_profiles(in, m).horizon() == 1);
  }
  SUBCASE("missing profile") {
    std::istringstream in("d1,0,1,0\nd2,0,1,0\n");
    CHECK_THROWS_AS(parse_profiles(in, m), InputError);
  }
  SUBCASE("length mismatch") {
    std::istringstream in("d1,0,1,0\nd1,1,1,0\nd2,0,1,0\nd2,1,1,0\nd3,0,1,0\n");
    CHECK_THROWS_WITH_AS(parse_profiles(in, m), doctest::Contains("length mismatch"), InputError);
  }
  SUBCASE("non-finite value") {
    std::istringstream in("d1,0,nan,0\nd2,0,1,0\nd3,0,1,0\n");
    CHECK_THROWS_AS(parse_profiles(in, m), InputError);
  }
  SUBCASE("duplicate entry") {
    std::istringstream in("d1,0,1,0\nd1,0,2,0\nd2,0,1,0\nd3,0,1,0\n");
    CHECK_THROWS_AS(parse_profiles(in, m), InputError);
  }
}

TEST_CASE("three-phase devices split power exactly") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const ProfileSet p = testing::constant_profiles(m, {{"d1", {7.3, 1.1}}}, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    const NodalPower s = p.nodal_power(m, t);
    for (std::size_t k = 0; k < 3; ++k) CHECK(s[1][k] == Complex(7.3 / 3.0 / 100.0, 1.1 / 3.0 / 100.0));
  }
}

TEST_CASE("devices sharing a bus are summed") {
  auto doc = small_doc();
  doc["devices"].push_back(device("d4", "10", "A"));
  const NetworkModel m = NetworkModel::from_json(doc);
  const ProfileSet p = testing::constant_profiles(m, {{"d2", {1.0, 0.0}}, {"d4", {2.5, 0.5}}});
  const NodalPower s = p.nodal_power(m, 0);
  CHECK(s[2][0].real() == doctest::Approx(0.035));
  CHECK(s[2][0].imag() == doctest::Approx(0.005));
}

TEST_CASE("curtailment bounds split load and generation") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const ProfileSet p = testing::constant_profiles(m, {{"d2", {4.0, 0.0}}, {"d3", {-6.0, 0.0}}});
  const auto cb = curtailment_bounds(m, p);
  const auto a = m.node_phase_index({2, Phase::A}), c = m.node_phase_index({2, Phase::C});
  CHECK(cb[0][a].load == doctest::Approx(0.04));
  CHECK(cb[0][a].generation == 0.0);
  CHECK(cb[0][c].generation == doctest::Approx(0.06));
}

TEST_CASE("operating limits validation") {
  OperatingLimits l;
  CHECK_NOTHROW(l.validate());
  CHECK(l.deadband_lo() == doctest::Approx(0.96));
  CHECK(l.deadband_hi() == doctest::Approx(1.03));
  l.v_min = 0.97;
  CHECK_THROWS_AS(l.validate(), InputError);
  l = OperatingLimits{};
  l.dt_perm = 100.0;
  CHECK_THROWS_AS(l.validate(), InputError);
  l = OperatingLimits{};
  l.curt_price_g = 0.0;
  CHECK_THROWS_AS(l.validate(), InputError);
}

TEST_CASE("default flexibility rule") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const ProfileSet p = testing::series_profiles(m, {{"d1", {{3.0, 0.0}, {-9.0, 0.0}}}, {"d2", {{2.0, 0.0}, {1.0, 0.0}}}}, 2);
  const FlexLimits f = default_flex_limits(m, p, FlexRule{0.5, 0.0});
  CHECK_NOTHROW(f.validate(m));
  const auto a1 = m.node_phase_index({1, Phase::A}), a2 = m.node_phase_index({2, Phase::A});
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(f.at(t, a1).p_max == doctest::Approx(0.5 * 9.0 / 3.0 / 100.0));
    CHECK(f.at(t, a1).p_min == doctest::Approx(-0.5 * 9.0 / 3.0 / 100.0));
    CHECK(f.at(t, a2).p_max == doctest::Approx(0.01));
    CHECK(f.at(t, a1).q_max == 0.0);
  }
  CHECK(f.at(0, m.node_phase_index({0, Phase::A})).p_max == 0.0);
  const FlexLimits g = f.scaled(2.0);
  CHECK(g.at(0, a2).p_max == doctest::Approx(0.02));
}

TEST_CASE("flexibility limits reject bounds away from devices") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  FlexLimits f(1, m.node_phases().size());
  f.at(0, m.node_phase_index({0, Phase::A})).p_max = 0.1;
  CHECK_THROWS_AS(f.validate(m), InputError);
  FlexLimits g(1, m.node_phases().size());
  g.at(0, m.node_phase_index({1, Phase::A})).p_min = 0.1;
  CHECK_THROWS_AS(g.validate(m), InputError);
}

TEST_CASE("flexibility CSV") {
  const NetworkModel m = NetworkModel::from_json(small_doc());
  const ProfileSet p = testing::constant_profiles(m, {}, 2);
  const auto path = std::filesystem::temp_directory_path() / "flexact_flex.csv";
  {
    std::ofstream out(path);
    out << "device_id,t,p_max_kw,p_min_kw,q_max_kvar,q_min_kvar\n";
    out << "d1,1,3,-6,0,0\n";
    out << "d2,0,2,-1,0.5,-0.5\n";
  }
  const FlexLimits f = load_flex_limits(path, m, p);
  CHECK(f.at(1, m.node_phase_index({1, Phase::B})).p_max == doctest::Approx(0.01));
  CHECK(f.at(1, m.node_phase_index({1, Phase::B})).p_min == doctest::Approx(-0.02));
  CHECK(f.at(0, m.node_phase_index({1, Phase::B})).p_max == 0.0);
  CHECK(f.at(0, m.node_phase_index({2, Phase::A})).q_min == doctest::Approx(-0.005));
  {
    std::ofstream out(path);
    out << "nobody,0,1,-1,0,0\n";
  }
  CHECK_THROWS_AS(load_flex_limits(path, m, p), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("phase sets") {
  CHECK(PhaseSet::parse("CA") == PhaseSet::parse("AC"));
  CHECK(PhaseSet::parse("ABC").is_three_phase());
  CHECK(PhaseSet::parse("B").size() == 1);
  CHECK(PhaseSet::parse("AC").to_string() == "AC");
  CHECK_THROWS(PhaseSet::parse("AD"));
}
