#include "flexact/pipeline.hpp"

namespace flexact {

NodalPower sensitivity_snapshot(const NetworkModel& model, const ProfileSet& profiles, const std::string& snapshot) {
  if (snapshot == "mean") return mean_nodal_power(model, profiles);
  std::size_t t = 0;
  try {
    t = std::stoul(snapshot);
  } catch (const std::exception&) {
    throw InputError("invalid sensitivity snapshot: " + snapshot);
  }
  if (t >= profiles.horizon()) throw InputError("sensitivity snapshot step is beyond the horizon");
  return profiles.nodal_power(model, t);
}

Pipeline build_pipeline(NetworkModel model, ProfileSet profiles, RunConfig config, std::optional<FlexLimits> raw_flex) {
  config.validate();
  Pipeline p{std::move(model), std::move(profiles), std::move(config), {}, {}, {}, {}, {}, {}, {}};
  p.raw_flex = raw_flex ? std::move(*raw_flex) : default_flex_limits(p.model, p.profiles, p.config.flex);
  p.raw_flex.validate(p.model);
  p.base = solve_horizon(p.model, p.profiles, p.config.powerflow);
  const NodalPower snap = sensitivity_snapshot(p.model, p.profiles, p.config.snapshot);
  auto [nvs, thermal] = compute_sensitivities(p.model, snap, p.config.sensitivity, p.config.snapshot);
  p.nvs = std::move(nvs);
  p.thermal = std::move(thermal);
  p.fas = compute_fas(p.model, p.base, p.nvs, p.config.limits, p.config.fas);
  p.limits = with_default_prices(p.config.limits, p.fas);
  p.gated = gate_limits(p.fas, p.raw_flex);
  return p;
}

Pipeline build_pipeline(const PipelinePaths& paths, const RunConfig& config) {
  NetworkModel model = load_network(paths.network);
  ProfileSet profiles = load_profiles(paths.profiles, model);
  std::optional<FlexLimits> flex;
  if (paths.flex) flex = load_flex_limits(*paths.flex, model, profiles);
  return build_pipeline(std::move(model), std::move(profiles), config, std::move(flex));
}

}  // namespace flexact
