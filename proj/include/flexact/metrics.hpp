#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flexact/activation.hpp"

namespace flexact {

/// Negative- over positive-sequence magnitude, percent, with a = 1∠120°.
/// Returns NaN when the positive sequence vanishes.
double vuf_percent(const PhaseComplex& v);

struct VufSeries {
  /// [t][bus], NaN at buses lacking a phase or with a degenerate set.
  std::vector<std::vector<double>> by_node;
  std::vector<double> step_max;  // [t]
  double mean = 0.0;
  double max = 0.0;
  std::size_t samples = 0;
  std::size_t degenerate = 0;
};

/// VUF at every three-phase bus and step, slack included.
VufSeries compute_vuf(const NetworkModel& model, const GridState& state);

struct ParetoPoint {
  double g_v = 0.0;
  double objective = 0.0;
  double mean_vuf = 0.0;
  double max_vuf = 0.0;
  std::size_t hard_incidents = 0;
  bool ok = true;
  std::string error;
};

/// One horizon activation per G_V. The grid must be non-empty and strictly
/// ascending. Failures are recorded per point and the sweep continues.
std::vector<ParetoPoint> pareto_sweep(const ActivationInputs& in, const std::vector<double>& gv_grid,
                                      const ActivationOptions& options = {});

struct KneeChoice {
  double g_v = 0.0;
  double reduction = 0.0;      // mean-VUF drop at the chosen point vs the first
  double max_reduction = 0.0;  // largest drop over the sweep
  bool knee_reached = true;
  std::vector<std::string> warnings;
};

/// Smallest G_V whose mean-VUF reduction relative to the first point is at
/// least `fraction` of the largest observed reduction. Failed points are
/// skipped. Throws InputError with fewer than three usable points.
KneeChoice select_knee(const std::vector<ParetoPoint>& points, double fraction = 0.8);

}  // namespace flexact
