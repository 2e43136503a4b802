#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "flexact/metrics.hpp"

namespace flexact::csv {

/// Nine significant digits, shortest form.
std::string num(double v);

void write_voltages(std::ostream& out, const NetworkModel& model, const GridState& state);
void write_branches(std::ostream& out, const NetworkModel& model, const GridState& state);
void write_incidents(std::ostream& out, const IncidentReport& report, const OperatingLimits& limits);
void write_nvs(std::ostream& out, const SensitivityTable& table, const NetworkModel& model);
/// Rows at device locations only.
void write_fas(std::ostream& out, const FasField& fas, const NetworkModel& model);
/// Nonzero rows only, kW / kvar.
void write_activation(std::ostream& out, const ActivationResult& result, const NetworkModel& model);
void write_pareto(std::ostream& out, const std::vector<ParetoPoint>& points);
/// Per-step network-max and mean VUF of the uncorrected and corrected states.
void write_vuf_series(std::ostream& out, const VufSeries& before, const VufSeries& after);

void open_or_throw(std::ofstream& file, const std::filesystem::path& path);

/// Writes `fill` into `path`; throws InputError when the file cannot be created.
template <typename Fn>
void to_file(const std::filesystem::path& path, Fn&& fill) {
  std::ofstream file;
  open_or_throw(file, path);
  fill(static_cast<std::ostream&>(file));
}

}  // namespace flexact::csv
