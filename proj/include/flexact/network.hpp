#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexact/types.hpp"
#include "json.hpp"

namespace flexact {

struct Bus {
  std::string id;
  PhaseSet phases;
  bool is_slack = false;
  double v_base = 230.0;  // phase-to-neutral volts

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  std::array<std::array<double, 3>, 3> r_ohm{};
  std::array<std::array<double, 3>, 3> x_ohm{};
  double ampacity_a = 0.0;  // per phase
  double s_max_kva = 0.0;   // per phase

  friend bool operator==(const Branch&, const Branch&) = default;
};

enum class Connection : std::uint8_t { A, B, C, ThreePhase };
enum class DeviceKind : std::uint8_t { Load, Generator };

struct Device {
  std::string id;
  std::string bus;
  Connection connection = Connection::A;
  DeviceKind kind = DeviceKind::Load;
  std::string p_profile;
  std::string q_profile;
  double pv_kwp = 0.0;

  PhaseSet phases() const;

  friend bool operator==(const Device&, const Device&) = default;
};

enum class ModelErrorCode {
  Parse,
  DuplicateBus,
  UnknownBus,
  AbsentPhase,
  NoSlack,
  MultipleSlack,
  InvalidImpedance,
  InvalidRating,
  Topology,
  BaseMismatch,
  DuplicateDevice,
};

class ModelError : public InputError {
 public:
  ModelError(ModelErrorCode code, const std::string& what) : InputError(what), code_(code) {}
  ModelErrorCode code() const { return code_; }

 private:
  ModelErrorCode code_;
};

/// Immutable radial feeder description.
///
/// Raw fields keep the units of the input file (ohms, kVA, amps) so the model
/// serializes back losslessly. Everything a solver needs is exposed in
/// per-unit: voltage base is the slack bus phase-to-neutral voltage and
/// `s_base_kva` is a per-phase power base.
///
/// Buses are stored sorted by id (numeric ids compare numerically), which
/// fixes the ordering of every per-bus output.
class NetworkModel {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  NetworkModel(std::string name, double s_base_kva, std::vector<Bus> buses, std::vector<Branch> branches,
               std::vector<Device> devices);

  static NetworkModel from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::string& name() const { return name_; }
  double s_base_kva() const { return s_base_kva_; }
  double v_base() const { return buses_[slack_].v_base; }
  double z_base_ohm() const { return v_base() * v_base() / (s_base_kva_ * 1000.0); }
  double i_base_amp() const { return s_base_kva_ * 1000.0 / v_base(); }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Device>& devices() const { return devices_; }
  std::size_t num_buses() const { return buses_.size(); }
  std::size_t num_branches() const { return branches_.size(); }

  std::size_t slack() const { return slack_; }
  std::optional<std::size_t> find_bus(const std::string& id) const;

  // Topology (radial tree rooted at the slack bus).
  std::size_t branch_from(std::size_t br) const { return branch_from_[br]; }
  std::size_t branch_to(std::size_t br) const { return branch_to_[br]; }
  PhaseSet branch_phases(std::size_t br) const { return buses_[branch_to_[br]].phases; }
  std::size_t parent_branch(std::size_t bus) const { return parent_branch_[bus]; }
  const std::vector<std::size_t>& child_branches(std::size_t bus) const { return child_branches_[bus]; }
  /// Parent branch first (if any), then children.
  const std::vector<std::size_t>& incident_branches(std::size_t bus) const { return incident_branches_[bus]; }
  /// Buses in breadth-first order from the slack bus.
  const std::vector<std::size_t>& sweep_order() const { return sweep_order_; }
  /// Number of branches between the slack bus and `bus`.
  std::size_t depth(std::size_t bus) const { return depth_[bus]; }

  // Per-unit electrical data.
  const PhaseMatrix& z_pu(std::size_t br) const { return z_pu_[br]; }
  double s_max_pu(std::size_t br) const { return branches_[br].s_max_kva / s_base_kva_; }

  std::size_t device_bus(std::size_t dev) const { return device_bus_[dev]; }

  /// Every (bus, phase) present, ordered by bus then phase.
  const std::vector<NodePhase>& node_phases() const { return node_phases_; }
  /// Index into node_phases(), or npos when the phase is absent.
  std::size_t node_phase_index(NodePhase np) const { return node_phase_index_[np.bus][idx(np.phase)]; }
  /// (bus, phase) pairs hosting at least one device, ordered like node_phases().
  const std::vector<NodePhase>& device_node_phases() const { return device_node_phases_; }
  bool hosts_device(NodePhase np) const;

  friend bool operator==(const NetworkModel& a, const NetworkModel& b) {
    return a.name_ == b.name_ && a.s_base_kva_ == b.s_base_kva_ && a.buses_ == b.buses_ &&
           a.branches_ == b.branches_ && a.devices_ == b.devices_;
  }

 private:
  void validate_and_index();

  std::string name_;
  double s_base_kva_;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Device> devices_;

  std::size_t slack_ = npos;
  std::vector<std::size_t> branch_from_, branch_to_;
  std::vector<std::size_t> parent_branch_;
  std::vector<std::vector<std::size_t>> child_branches_;
  std::vector<std::vector<std::size_t>> incident_branches_;
  std::vector<std::size_t> sweep_order_;
  std::vector<std::size_t> depth_;
  std::vector<PhaseMatrix> z_pu_;
  std::vector<std::size_t> device_bus_;
  std::vector<NodePhase> node_phases_;
  std::vector<std::array<std::size_t, 3>> node_phase_index_;
  std::vector<NodePhase> device_node_phases_;
};

NetworkModel load_network(const std::filesystem::path& path);
void save_network(const NetworkModel& model, const std::filesystem::path& path);

/// Orders ids numerically when both parse as integers, lexicographically otherwise.
bool bus_id_less(const std::string& a, const std::string& b);

}  // namespace flexact
