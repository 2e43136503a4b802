#pragma once

#include <string>
#include <vector>

#include "flexact/powerflow.hpp"

namespace flexact {

struct SensitivityOptions {
  std::vector<double> levels{0.001, 0.002, 0.005};  // perturbation sizes, pu
  PowerFlowOptions powerflow{1e-12, 200, 0.5};
};

/// Dense observed × perturbed matrix, row-major.
class SensitivityMatrix {
 public:
  SensitivityMatrix() = default;
  SensitivityMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Nodal voltage sensitivities by perturb-and-observe.
///
/// Rows are every (bus, phase) of the model (`observed`), columns the
/// (bus, phase) pairs hosting a device (`perturbed`). Entries are the change
/// of voltage magnitude in pu per pu of added load (positive perturbation =
/// more consumption), averaged over the perturbation levels.
struct SensitivityTable {
  std::vector<NodePhase> observed;
  std::vector<NodePhase> perturbed;
  SensitivityMatrix nvs_p;
  SensitivityMatrix nvs_q;
  std::vector<double> levels;  // levels that converged and were averaged
  std::string snapshot;
  std::vector<std::string> warnings;

  /// Sensitivity of a location to its own perturbation.
  double own_p(std::size_t pert) const { return nvs_p(own_row_[pert], pert); }
  double own_q(std::size_t pert) const { return nvs_q(own_row_[pert], pert); }
  std::size_t own_row(std::size_t pert) const { return own_row_[pert]; }

  std::vector<std::size_t> own_row_;
};

/// Perturb-and-observe sensitivities of branch flows and projected nodal
/// loading. Same column layout as SensitivityTable.
struct ThermalSensitivityTable {
  std::vector<NodePhase> observed;
  std::vector<NodePhase> perturbed;
  /// Projected signed loading percent per pu of added P / Q.
  SensitivityMatrix projected_p;
  SensitivityMatrix projected_q;
  /// Sending-end branch flow change; rows are branch*3 + phase.
  SensitivityMatrix flow_p_by_p;  // dP_branch / dP_load
  SensitivityMatrix flow_q_by_p;  // dQ_branch / dP_load
  SensitivityMatrix flow_p_by_q;
  SensitivityMatrix flow_q_by_q;
  std::vector<double> levels;
  std::string snapshot;
  std::vector<std::string> warnings;
};

/// Runs the reference power flow on `base_load`, then perturbs the P and Q
/// of each device location separately at every level. Levels whose
/// perturbed power flows diverge are dropped with a warning; throws
/// SolverError if none survive and InputError on an empty level list.
SensitivityTable compute_nvs(const NetworkModel& model, const NodalPower& base_load, const SensitivityOptions& options,
                             const std::string& snapshot = "base");

ThermalSensitivityTable compute_thermal_sensitivity(const NetworkModel& model, const NodalPower& base_load,
                                                    const SensitivityOptions& options,
                                                    const std::string& snapshot = "base");

/// Both tables from a single set of perturbed power flows.
std::pair<SensitivityTable, ThermalSensitivityTable> compute_sensitivities(const NetworkModel& model,
                                                                           const NodalPower& base_load,
                                                                           const SensitivityOptions& options,
                                                                           const std::string& snapshot = "base");

/// Horizon-mean nodal power, the default reference snapshot.
NodalPower mean_nodal_power(const NetworkModel& model, const ProfileSet& profiles);

}  // namespace flexact
