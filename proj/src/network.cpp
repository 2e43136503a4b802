#include "flexact/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>

namespace flexact {

using nlohmann::json;

PhaseSet PhaseSet::parse(std::string_view text) {
  std::uint8_t mask = 0;
  for (char c : text) {
    switch (c) {
      case 'A': case 'a': mask |= 1u; break;
      case 'B': case 'b': mask |= 2u; break;
      case 'C': case 'c': mask |= 4u; break;
      default: throw std::invalid_argument("invalid phase letter '" + std::string(1, c) + "'");
    }
  }
  return PhaseSet(mask);
}

std::string PhaseSet::to_string() const {
  std::string out;
  for (Phase p : kPhases) {
    if (contains(p)) out.push_back(phase_letter(p));
  }
  return out;
}

PhaseSet Device::phases() const {
  switch (connection) {
    case Connection::A: return PhaseSet::single(Phase::A);
    case Connection::B: return PhaseSet::single(Phase::B);
    case Connection::C: return PhaseSet::single(Phase::C);
    case Connection::ThreePhase: return PhaseSet::all();
  }
  return {};
}

namespace {

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string id_field(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ModelError(ModelErrorCode::Parse, std::string("field '") + key + "' must be a string or integer id");
}

std::array<std::array<double, 3>, 3> matrix_field(const json& obj, const char* key) {
  std::array<std::array<double, 3>, 3> m{};
  const auto& rows = obj.at(key);
  if (!rows.is_array() || rows.size() != 3) {
    throw ModelError(ModelErrorCode::Parse, std::string("'") + key + "' must be a 3x3 array");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!rows[i].is_array() || rows[i].size() != 3) {
      throw ModelError(ModelErrorCode::Parse, std::string("'") + key + "' must be a 3x3 array");
    }
    for (std::size_t j = 0; j < 3; ++j) m[i][j] = rows[i][j].get<double>();
  }
  return m;
}

json matrix_json(const std::array<std::array<double, 3>, 3>& m) {
  json rows = json::array();
  for (const auto& row : m) rows.push_back(json(row));
  return rows;
}

Connection parse_connection(const std::string& s) {
  if (s == "A") return Connection::A;
  if (s == "B") return Connection::B;
  if (s == "C") return Connection::C;
  if (s == "ABC" || s == "3ph") return Connection::ThreePhase;
  throw ModelError(ModelErrorCode::Parse, "invalid device connection '" + s + "'");
}

std::string connection_string(Connection c) {
  switch (c) {
    case Connection::A: return "A";
    case Connection::B: return "B";
    case Connection::C: return "C";
    case Connection::ThreePhase: return "ABC";
  }
  return "?";
}

}  // namespace

bool bus_id_less(const std::string& a, const std::string& b) {
  auto ia = as_integer(a);
  auto ib = as_integer(b);
  if (ia && ib) return *ia < *ib;
  if (ia != ib && (ia || ib)) return ia.has_value();  // numeric ids sort first
  return a < b;
}

NetworkModel::NetworkModel(std::string name, double s_base_kva, std::vector<Bus> buses, std::vector<Branch> branches,
                           std::vector<Device> devices)
    : name_(std::move(name)),
      s_base_kva_(s_base_kva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      devices_(std::move(devices)) {
  std::stable_sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return bus_id_less(a.id, b.id); });
  validate_and_index();
}

std::optional<std::size_t> NetworkModel::find_bus(const std::string& id) const {
  auto it = std::lower_bound(buses_.begin(), buses_.end(), id,
                             [](const Bus& b, const std::string& key) { return bus_id_less(b.id, key); });
  if (it == buses_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - buses_.begin());
}

bool NetworkModel::hosts_device(NodePhase np) const {
  return std::binary_search(device_node_phases_.begin(), device_node_phases_.end(), np);
}

void NetworkModel::validate_and_index() {
  if (!(s_base_kva_ > 0.0) || !std::isfinite(s_base_kva_)) {
    throw ModelError(ModelErrorCode::Parse, "s_base_kva must be positive");
  }
  if (buses_.empty()) throw ModelError(ModelErrorCode::NoSlack, "network has no buses (no slack bus)");

  for (std::size_t i = 1; i < buses_.size(); ++i) {
    if (buses_[i].id == buses_[i - 1].id) {
      throw ModelError(ModelErrorCode::DuplicateBus, "duplicate bus id '" + buses_[i].id + "'");
    }
  }
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (b.phases.empty()) throw ModelError(ModelErrorCode::Parse, "bus '" + b.id + "' has an empty phase set");
    if (b.is_slack) {
      if (slack_ != npos) throw ModelError(ModelErrorCode::MultipleSlack, "multiple slack buses ('" +
                                                                              buses_[slack_].id + "', '" + b.id + "')");
      slack_ = i;
    }
  }
  if (slack_ == npos) throw ModelError(ModelErrorCode::NoSlack, "no slack bus defined");
  for (const Bus& b : buses_) {
    if (!(b.v_base > 0.0) || std::abs(b.v_base - buses_[slack_].v_base) > 1e-9 * buses_[slack_].v_base) {
      throw ModelError(ModelErrorCode::BaseMismatch,
                       "bus '" + b.id + "' v_base differs from the slack bus (no transformers supported)");
    }
  }

  const std::size_t nb = buses_.size();
  const std::size_t nbr = branches_.size();
  branch_from_.assign(nbr, npos);
  branch_to_.assign(nbr, npos);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(nb);  // (branch, other bus)
  for (std::size_t br = 0; br < nbr; ++br) {
    const Branch& b = branches_[br];
    auto f = find_bus(b.from_bus);
    auto t = find_bus(b.to_bus);
    if (!f) throw ModelError(ModelErrorCode::UnknownBus, "branch '" + b.id + "' references unknown bus '" + b.from_bus + "'");
    if (!t) throw ModelError(ModelErrorCode::UnknownBus, "branch '" + b.id + "' references unknown bus '" + b.to_bus + "'");
    if (*f == *t) throw ModelError(ModelErrorCode::Topology, "branch '" + b.id + "' is a self loop");
    if (!(b.ampacity_a > 0.0) || !(b.s_max_kva > 0.0)) {
      throw ModelError(ModelErrorCode::InvalidRating, "branch '" + b.id + "' needs positive ampacity and s_max");
    }
    adjacency[*f].emplace_back(br, *t);
    adjacency[*t].emplace_back(br, *f);
  }

  // Orient every branch away from the slack bus.
  parent_branch_.assign(nb, npos);
  child_branches_.assign(nb, {});
  depth_.assign(nb, 0);
  sweep_order_.clear();
  std::vector<bool> seen(nb, false);
  std::deque<std::size_t> queue{slack_};
  seen[slack_] = true;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    sweep_order_.push_back(u);
    for (auto [br, v] : adjacency[u]) {
      if (br == parent_branch_[u]) continue;
      if (seen[v]) throw ModelError(ModelErrorCode::Topology, "network is not radial (loop through bus '" + buses_[v].id + "')");
      seen[v] = true;
      parent_branch_[v] = br;
      branch_from_[br] = u;
      branch_to_[br] = v;
      depth_[v] = depth_[u] + 1;
      child_branches_[u].push_back(br);
      queue.push_back(v);
    }
  }
  for (std::size_t i = 0; i < nb; ++i) {
    if (!seen[i]) throw ModelError(ModelErrorCode::Topology, "bus '" + buses_[i].id + "' is islanded from the slack bus");
  }

  incident_branches_.assign(nb, {});
  for (std::size_t i = 0; i < nb; ++i) {
    if (parent_branch_[i] != npos) incident_branches_[i].push_back(parent_branch_[i]);
    for (auto br : child_branches_[i]) incident_branches_[i].push_back(br);
  }

  const double zb = z_base_ohm();
  z_pu_.assign(nbr, PhaseMatrix{});
  for (std::size_t br = 0; br < nbr; ++br) {
    const Branch& b = branches_[br];
    const PhaseSet down = buses_[branch_to_[br]].phases;
    if (!buses_[branch_from_[br]].phases.contains(down)) {
      throw ModelError(ModelErrorCode::AbsentPhase, "branch '" + b.id + "' carries phases " + down.to_string() +
                                                        " absent at upstream bus '" + buses_[branch_from_[br]].id + "'");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double r = b.r_ohm[i][j], x = b.x_ohm[i][j];
        if (!std::isfinite(r) || !std::isfinite(x)) {
          throw ModelError(ModelErrorCode::InvalidImpedance, "branch '" + b.id + "' has a non-finite impedance");
        }
        double scale = std::max({1.0, std::abs(r), std::abs(x)});
        if (std::abs(r - b.r_ohm[j][i]) > 1e-12 * scale || std::abs(x - b.x_ohm[j][i]) > 1e-12 * scale) {
          throw ModelError(ModelErrorCode::InvalidImpedance, "branch '" + b.id + "' impedance matrix is not symmetric");
        }
        bool present = down.contains(kPhases[i]) && down.contains(kPhases[j]);
        z_pu_[br][i][j] = present ? Complex(r, x) / zb : Complex{};
      }
      if (down.contains(kPhases[i]) && !(b.r_ohm[i][i] > 0.0)) {
        throw ModelError(ModelErrorCode::InvalidImpedance,
                         "branch '" + b.id + "' needs a positive self resistance on phase " + phase_letter(kPhases[i]));
      }
    }
  }

  node_phases_.clear();
  node_phase_index_.assign(nb, {npos, npos, npos});
  for (std::size_t i = 0; i < nb; ++i) {
    for (Phase p : kPhases) {
      if (buses_[i].phases.contains(p)) {
        node_phase_index_[i][idx(p)] = node_phases_.size();
        node_phases_.push_back({i, p});
      }
    }
  }

  std::set<std::string> device_ids;
  std::set<NodePhase> hosted;
  device_bus_.assign(devices_.size(), npos);
  for (std::size_t d = 0; d < devices_.size(); ++d) {
    const Device& dev = devices_[d];
    if (!device_ids.insert(dev.id).second) {
      throw ModelError(ModelErrorCode::DuplicateDevice, "duplicate device id '" + dev.id + "'");
    }
    auto b = find_bus(dev.bus);
    if (!b) throw ModelError(ModelErrorCode::UnknownBus, "device '" + dev.id + "' references unknown bus '" + dev.bus + "'");
    if (!buses_[*b].phases.contains(dev.phases())) {
      throw ModelError(ModelErrorCode::AbsentPhase, "device '" + dev.id + "' connects to phase(s) " +
                                                        dev.phases().to_string() + " absent at bus '" + dev.bus +
                                                        "' (" + buses_[*b].phases.to_string() + ")");
    }
    if (!(dev.pv_kwp >= 0.0)) throw ModelError(ModelErrorCode::Parse, "device '" + dev.id + "' has negative pv_kwp");
    device_bus_[d] = *b;
    for (Phase p : kPhases) {
      if (dev.phases().contains(p)) hosted.insert({*b, p});
    }
  }
  device_node_phases_.assign(hosted.begin(), hosted.end());
}

NetworkModel NetworkModel::from_json(const json& doc) {
  try {
    std::vector<Bus> buses;
    for (const auto& jb : doc.at("buses")) {
      Bus b;
      b.id = id_field(jb, "id");
      b.phases = PhaseSet::parse(jb.value("phases", std::string("ABC")));
      b.is_slack = jb.value("slack", false);
      b.v_base = jb.value("v_base", 230.0);
      buses.push_back(std::move(b));
    }
    std::vector<Branch> branches;
    for (const auto& jb : doc.at("branches")) {
      Branch b;
      b.from_bus = id_field(jb, "from");
      b.to_bus = id_field(jb, "to");
      b.id = jb.contains("id") ? id_field(jb, "id") : b.from_bus + "-" + b.to_bus;
      b.r_ohm = matrix_field(jb, "r_ohm");
      b.x_ohm = matrix_field(jb, "x_ohm");
      b.ampacity_a = jb.at("ampacity_a").get<double>();
      b.s_max_kva = jb.at("s_max_kva").get<double>();
      branches.push_back(std::move(b));
    }
    std::vector<Device> devices;
    if (doc.contains("devices")) {
      for (const auto& jd : doc.at("devices")) {
        Device d;
        d.id = id_field(jd, "id");
        d.bus = id_field(jd, "bus");
        d.connection = parse_connection(jd.at("connection").get<std::string>());
        std::string kind = jd.value("kind", std::string("load"));
        if (kind == "load") d.kind = DeviceKind::Load;
        else if (kind == "generator") d.kind = DeviceKind::Generator;
        else throw ModelError(ModelErrorCode::Parse, "invalid device kind '" + kind + "'");
        d.p_profile = jd.value("p_profile", d.id);
        d.q_profile = jd.value("q_profile", d.p_profile);
        d.pv_kwp = jd.value("pv_kwp", 0.0);
        devices.push_back(std::move(d));
      }
    }
    return NetworkModel(doc.value("name", std::string("network")), doc.value("s_base_kva", 100.0), std::move(buses),
                        std::move(branches), std::move(devices));
  } catch (const json::exception& e) {
    throw ModelError(ModelErrorCode::Parse, std::string("network file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(ModelErrorCode::Parse, std::string("network file: ") + e.what());
  }
}

json NetworkModel::to_json() const {
  json doc;
  doc["name"] = name_;
  doc["s_base_kva"] = s_base_kva_;
  doc["buses"] = json::array();
  for (const Bus& b : buses_) {
    doc["buses"].push_back({{"id", b.id}, {"phases", b.phases.to_string()}, {"slack", b.is_slack}, {"v_base", b.v_base}});
  }
  doc["branches"] = json::array();
  for (const Branch& b : branches_) {
    doc["branches"].push_back({{"id", b.id},
                               {"from", b.from_bus},
                               {"to", b.to_bus},
                               {"r_ohm", matrix_json(b.r_ohm)},
                               {"x_ohm", matrix_json(b.x_ohm)},
                               {"ampacity_a", b.ampacity_a},
                               {"s_max_kva", b.s_max_kva}});
  }
  doc["devices"] = json::array();
  for (const Device& d : devices_) {
    doc["devices"].push_back({{"id", d.id},
                              {"bus", d.bus},
                              {"connection", connection_string(d.connection)},
                              {"kind", d.kind == DeviceKind::Load ? "load" : "generator"},
                              {"p_profile", d.p_profile},
                              {"q_profile", d.q_profile},
                              {"pv_kwp", d.pv_kwp}});
  }
  return doc;
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(ModelErrorCode::Parse, "cannot open network file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError(ModelErrorCode::Parse, "network file '" + path.string() + "': " + e.what());
  }
  return NetworkModel::from_json(doc);
}

void save_network(const NetworkModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write network file '" + path.string() + "'");
  out << model.to_json().dump(2) << '\n';
}

}  // namespace flexact
