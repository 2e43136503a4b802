#include "flexact/profiles.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace flexact {

ProfileSet::ProfileSet(std::size_t horizon, double step_minutes, std::map<std::string, ProfileSeries> series)
    : horizon_(horizon), step_minutes_(step_minutes), series_(std::move(series)) {}

const ProfileSeries& ProfileSet::profile(const std::string& id) const {
  auto it = series_.find(id);
  if (it == series_.end()) throw InputError("missing profile '" + id + "'");
  return it->second;
}

NodalPower ProfileSet::nodal_power(const NetworkModel& model, std::size_t t) const {
  NodalPower power(model.num_buses(), PhaseComplex{});
  const double sb = model.s_base_kva();
  for (std::size_t d = 0; d < model.devices().size(); ++d) {
    const Device& dev = model.devices()[d];
    const PhaseSet ph = dev.phases();
    const double share = 1.0 / static_cast<double>(ph.size());
    const Complex s(device_p_kw(dev, t) * share / sb, device_q_kvar(dev, t) * share / sb);
    for (Phase p : kPhases) {
      if (ph.contains(p)) power[model.device_bus(d)][idx(p)] += s;
    }
  }
  return power;
}

void ProfileSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write profile file '" + path.string() + "'");
  out << "# step_minutes=" << step_minutes_ << '\n';
  out << "device_id,t,p_kw,q_kvar\n";
  out << std::setprecision(17);
  for (const auto& [id, s] : series_) {
    for (std::size_t t = 0; t < horizon_; ++t) out << id << ',' << t << ',' << s.p_kw[t] << ',' << s.q_kvar[t] << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return cells;
}

double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": invalid number '" + text + "'");
  }
}

}  // namespace

ProfileSet parse_profiles(std::istream& in, const NetworkModel& model, const std::string& origin) {
  struct Entry {
    double p, q;
    bool set = false;
  };
  std::map<std::string, std::map<std::size_t, Entry>> raw;
  double step_minutes = 60.0;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      auto pos = line.find("step_minutes=");
      if (pos != std::string::npos) step_minutes = parse_number(line.substr(pos + 13), origin);
      continue;
    }
    auto cells = split_csv(line);
    const std::string where = origin + ":" + std::to_string(line_no);
    if (!header_seen && !cells.empty() && cells[0] == "device_id") {
      header_seen = true;
      continue;
    }
    if (cells.size() != 4) throw InputError(where + ": expected 4 columns device_id,t,p_kw,q_kvar");
    double tv = parse_number(cells[1], where);
    if (tv < 0 || std::floor(tv) != tv) throw InputError(where + ": step index must be a non-negative integer");
    double p = parse_number(cells[2], where);
    double q = parse_number(cells[3], where);
    if (!std::isfinite(p) || !std::isfinite(q)) {
      throw InputError(where + ": non-finite value in profile '" + cells[0] + "'");
    }
    auto& slot = raw[cells[0]][static_cast<std::size_t>(tv)];
    if (slot.set) throw InputError(where + ": duplicate entry for profile '" + cells[0] + "' at t=" + cells[1]);
    slot = {p, q, true};
  }
  if (!(step_minutes > 0.0)) throw InputError(origin + ": step_minutes must be positive");

  std::set<std::string> referenced;
  for (const Device& d : model.devices()) {
    referenced.insert(d.p_profile);
    referenced.insert(d.q_profile);
  }
  for (const auto& id : referenced) {
    if (!raw.count(id)) throw InputError(origin + ": missing profile '" + id + "'");
  }

  std::size_t horizon = 0;
  for (const auto& id : referenced) horizon = std::max(horizon, raw[id].rbegin()->first + 1);

  ProfileSet result;
  std::map<std::string, ProfileSeries> series;
  std::vector<std::string> warnings;
  for (auto& [id, entries] : raw) {
    if (!referenced.count(id)) {
      warnings.push_back("profile '" + id + "' is not referenced by any device; ignored");
      continue;
    }
    if (entries.size() != horizon || entries.rbegin()->first + 1 != horizon) {
      throw InputError(origin + ": profile '" + id + "' has " + std::to_string(entries.size()) +
                       " entries, expected " + std::to_string(horizon) + " (length mismatch)");
    }
    ProfileSeries s;
    for (const auto& [t, e] : entries) {
      s.p_kw.push_back(e.p);
      s.q_kvar.push_back(e.q);
    }
    series.emplace(id, std::move(s));
  }
  result = ProfileSet(horizon, step_minutes, std::move(series));
  for (auto& w : warnings) result.add_warning(std::move(w));
  return result;
}

ProfileSet load_profiles(const std::filesystem::path& path, const NetworkModel& model) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open profile file '" + path.string() + "'");
  return parse_profiles(in, model, path.filename().string());
}

std::vector<std::vector<CurtailmentBounds>> curtailment_bounds(const NetworkModel& model, const ProfileSet& profiles) {
  std::vector<std::vector<CurtailmentBounds>> out(profiles.horizon(),
                                                  std::vector<CurtailmentBounds>(model.node_phases().size()));
  const double sb = model.s_base_kva();
  for (std::size_t t = 0; t < profiles.horizon(); ++t) {
    for (std::size_t d = 0; d < model.devices().size(); ++d) {
      const Device& dev = model.devices()[d];
      const PhaseSet ph = dev.phases();
      const double p = profiles.device_p_kw(dev, t) / static_cast<double>(ph.size()) / sb;
      for (Phase phase : kPhases) {
        if (!ph.contains(phase)) continue;
        auto& cb = out[t][model.node_phase_index({model.device_bus(d), phase})];
        if (p > 0) cb.load += p;
        else cb.generation += -p;
      }
    }
  }
  return out;
}

}  // namespace flexact
