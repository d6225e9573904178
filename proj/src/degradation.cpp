#include "flashsim/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace flashsim {

void CalibrationTable::interpolate(double key, bool log_key, bool extrapolate,
                                   Eigen::Array<double, 8, 1>& mean_out,
                                   Eigen::Array<double, 8, 1>& sd_out) const {
  if (keys.empty()) throw std::runtime_error("CalibrationTable: empty");
  const auto n = keys.size();
  if (key <= keys.front()) {
    mean_out = means.row(0);
    sd_out = stddevs.row(0);
    return;
  }
  if (key > keys.back() && !extrapolate)
    throw std::out_of_range("CalibrationTable: key beyond last row and extrapolation disabled");

  auto axis = [&](double k) { return log_key ? std::log(k) : k; };
  std::size_t hi = n - 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (key <= keys[i]) {
      hi = i;
      break;
    }
  }
  const std::size_t lo = hi - 1;
  const double t = (axis(key) - axis(keys[lo])) / (axis(keys[hi]) - axis(keys[lo]));
  mean_out = means.row(lo) + t * (means.row(hi) - means.row(lo));
  sd_out = stddevs.row(lo) + t * (stddevs.row(hi) - stddevs.row(lo));
}

namespace {

int state_index(const std::string& name) {
  static const std::map<std::string, int> lut = {{"ER", 0}, {"P1", 1}, {"P2", 2}, {"P3", 3},
                                                 {"P4", 4}, {"P5", 5}, {"P6", 6}, {"P7", 7}};
  auto it = lut.find(name);
  if (it == lut.end()) throw std::runtime_error("calibration CSV: unknown state " + name);
  return it->second;
}

void finalize(CalibrationTable& t, std::map<double, std::array<std::pair<double, double>, 8>>& rows) {
  if (rows.empty()) throw std::runtime_error("calibration CSV: missing mechanism rows");
  const auto n = rows.size();
  t.keys.clear();
  t.means.resize(static_cast<Eigen::Index>(n), 8);
  t.stddevs.resize(static_cast<Eigen::Index>(n), 8);
  Eigen::Index r = 0;
  for (const auto& [key, row] : rows) {
    t.keys.push_back(key);
    for (int s = 0; s < 8; ++s) {
      if (row[s].second <= 0.0)
        throw std::runtime_error("calibration CSV: stddev must be > 0");
      t.means(r, s) = row[s].first;
      t.stddevs(r, s) = row[s].second;
    }
    ++r;
  }
}

}  // namespace

CalibrationTables CalibrationTables::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open calibration CSV: " + path);

  std::map<std::string, std::map<double, std::array<std::pair<double, double>, 8>>> raw;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ss(line);
    std::string mech, key_s, state_s, mean_s, sd_s;
    if (!std::getline(ss, mech, ',') || !std::getline(ss, key_s, ',') ||
        !std::getline(ss, state_s, ',') || !std::getline(ss, mean_s, ',') ||
        !std::getline(ss, sd_s, ','))
      throw std::runtime_error("calibration CSV: malformed line: " + line);
    raw[mech][std::stod(key_s)][static_cast<std::size_t>(state_index(state_s))] = {
        std::stod(mean_s), std::stod(sd_s)};
  }

  CalibrationTables out;
  finalize(out.pe, raw["pe"]);
  finalize(out.retention, raw["retention"]);
  finalize(out.disturb, raw["disturb"]);
  return out;
}

std::vector<int> mode_state_indices(CellMode mode) {
  switch (mode) {
    case CellMode::SLC: return {0, 4};
    case CellMode::MLC: return {0, 3, 5, 7};
    case CellMode::TLC: return {0, 1, 2, 3, 4, 5, 6, 7};
    case CellMode::TLC_DOWNGRADED: return {0, 3, 5, 7};
  }
  throw std::invalid_argument("mode_state_indices: bad mode");
}

DistributionSet distribution_at(CellMode mode, const DegradationState& deg,
                                const CalibrationTables& tables, bool extrapolate) {
  if (deg.pe_cycles < 0 || deg.retention_seconds < 0.0 || deg.read_disturbs < 0)
    throw std::invalid_argument("distribution_at: degradation counters must be non-negative");

  Eigen::Array<double, 8, 1> m_pe, s_pe, m_ret, s_ret, m_dis, s_dis, m0_ret, s0_ret, m0_dis,
      s0_dis;
  tables.pe.interpolate(static_cast<double>(deg.pe_cycles), false, extrapolate, m_pe, s_pe);
  tables.retention.interpolate(deg.retention_seconds, true, extrapolate, m_ret, s_ret);
  tables.retention.interpolate(tables.retention.keys.front(), true, false, m0_ret, s0_ret);
  tables.disturb.interpolate(static_cast<double>(deg.read_disturbs), true, extrapolate, m_dis,
                             s_dis);
  tables.disturb.interpolate(tables.disturb.keys.front(), true, false, m0_dis, s0_dis);

  // Deltas against each table's first row, added to the P/E row; stddevs are
  // floored at the 0-P/E values.
  Eigen::Array<double, 8, 1> mean = m_pe + (m_ret - m0_ret) + (m_dis - m0_dis);
  Eigen::Array<double, 8, 1> sd = s_pe + (s_ret - s0_ret) + (s_dis - s0_dis);
  Eigen::Array<double, 8, 1> floor_sd = tables.pe.stddevs.row(0);
  sd = sd.max(floor_sd);

  DistributionSet out;
  out.mode = mode;
  const std::vector<int> idx = mode_state_indices(mode);
  out.states.reserve(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s)
    out.states.push_back({static_cast<StateId>(s), mean(idx[s]), sd(idx[s])});
  out.validate();
  return out;
}

double interference_shift(
    const std::vector<std::pair<NeighborPosition, double>>& neighbor_deltas,
    const CouplingCoefficients& coeffs) {
  double dv = 0.0;
  for (const auto& [pos, delta] : neighbor_deltas) dv += coeffs.at(pos) * delta;
  return dv;
}

double coupling_capacitance(double epsilon, double area, double distance) {
  if (distance <= 0.0) throw std::invalid_argument("coupling_capacitance: distance must be > 0");
  return epsilon * area / distance;
}

double fn_tunneling_current(double alpha, double beta, double e_ox) {
  if (e_ox <= 0.0) throw std::invalid_argument("fn_tunneling_current: field must be > 0");
  return alpha * e_ox * e_ox * std::exp(-beta / e_ox);
}

}  // namespace flashsim
