// Distribution evolution under P/E cycling, retention and read disturb,
// driven by the TLC characterization tables, plus the analytic interference
// and tunneling utilities.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "flashsim/types.hpp"
#include "flashsim/voltage_model.hpp"

namespace flashsim {

struct DegradationState {
  long pe_cycles = 0;
  double retention_seconds = 0.0;
  long read_disturbs = 0;
};

// One calibration mechanism: row keys plus per-state mean/stddev matrices
// (rows x 8 states, ER..P7).
struct CalibrationTable {
  std::vector<double> keys;  // strictly increasing
  Eigen::ArrayXXd means;     // keys.size() x 8
  Eigen::ArrayXXd stddevs;   // keys.size() x 8

  // Piecewise-linear interpolation of one row; log_key selects linearity in
  // log(key) (retention seconds, disturb counts).  Keys below the first row
  // clamp to it; keys beyond the last row throw std::out_of_range unless
  // extrapolation is enabled.
  void interpolate(double key, bool log_key, bool extrapolate,
                   Eigen::Array<double, 8, 1>& mean_out,
                   Eigen::Array<double, 8, 1>& sd_out) const;
};

// The three appendix mechanisms.  Retention keys are seconds; the disturb
// table is keyed by sibling-read count.
struct CalibrationTables {
  CalibrationTable pe;         // keyed by P/E cycles
  CalibrationTable retention;  // keyed by seconds since program
  CalibrationTable disturb;    // keyed by read disturb count

  // Loads the (mechanism,row_key,state,mean,stddev) CSV shipped with the
  // project; alternative characterizations are selectable by path.
  static CalibrationTables load_csv(const std::string& path);

  double max_pe() const { return pe.keys.back(); }
  double max_retention() const { return retention.keys.back(); }
  double max_disturb() const { return disturb.keys.back(); }
};

// Which rows of the 8-state tables a cell mode occupies.  Downgraded TLC
// keeps ER and the odd upper states so margins widen; MLC backed by TLC
// characterization data uses the same evenly spaced subset.
std::vector<int> mode_state_indices(CellMode mode);

// Distribution set at a degradation point.  Mechanism effects compose
// additively as deltas against each table's first row:
//   mean = PE(pe) + [RET(t) - RET(first)] + [DIST(n) - DIST(first)]
// stddev composes the same way and is floored at the 0-P/E stddev.
DistributionSet distribution_at(CellMode mode, const DegradationState& deg,
                                const CalibrationTables& tables,
                                bool extrapolate = false);

enum class NeighborPosition { Wordline, Bitline, Diagonal };

// Parasitic coupling coefficients for immediately-adjacent cells.
struct CouplingCoefficients {
  double wordline = 0.0;
  double bitline = 0.0;
  double diagonal = 0.0;

  static CouplingCoefficients nm_2y() { return {0.060, 0.032, 0.012}; }
  static CouplingCoefficients nm_1x() { return {0.110, 0.055, 0.020}; }

  double at(NeighborPosition p) const {
    switch (p) {
      case NeighborPosition::Wordline: return wordline;
      case NeighborPosition::Bitline: return bitline;
      case NeighborPosition::Diagonal: return diagonal;
    }
    return 0.0;
  }
};

// dV_victim = sum_X K_X * dV_X over the aggressor neighbors.
double interference_shift(
    const std::vector<std::pair<NeighborPosition, double>>& neighbor_deltas,
    const CouplingCoefficients& coeffs);

// C = eps * S / d.  Throws std::invalid_argument for d <= 0.
double coupling_capacitance(double epsilon, double area, double distance);

// Fowler-Nordheim tunneling current density a*E^2*exp(-b/E) for E > 0.
double fn_tunneling_current(double alpha, double beta, double e_ox);

}  // namespace flashsim
