#pragma once

#include <filesystem>
#include <optional>

#include "flexact/config.hpp"
#include "flexact/metrics.hpp"

namespace flexact {

/// Everything the activation stage needs, built once from the inputs.
struct Pipeline {
  NetworkModel model;
  ProfileSet profiles;
  RunConfig config;
  FlexLimits raw_flex;
  GridState base;  // uncorrected power flow
  SensitivityTable nvs;
  ThermalSensitivityTable thermal;
  FasField fas;
  OperatingLimits limits;  // curtailment prices resolved
  FlexLimits gated;

  ActivationInputs inputs() const { return {model, profiles, fas, gated, limits, nvs, thermal}; }
};

struct PipelinePaths {
  std::filesystem::path network;
  std::filesystem::path profiles;
  std::optional<std::filesystem::path> flex;  // flexibility CSV; default rule otherwise
};

/// Reference injections for the sensitivity run, per `config.snapshot`.
NodalPower sensitivity_snapshot(const NetworkModel& model, const ProfileSet& profiles, const std::string& snapshot);

Pipeline build_pipeline(NetworkModel model, ProfileSet profiles, RunConfig config,
                        std::optional<FlexLimits> raw_flex = std::nullopt);
Pipeline build_pipeline(const PipelinePaths& paths, const RunConfig& config);

}  // namespace flexact
