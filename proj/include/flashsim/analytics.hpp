// Closed-form reliability and lifetime models: ECC failure rate, LB/parity
// failure probabilities, overprovisioning and lifetime arithmetic, and
// RBER/UBER curve generation.
#pragma once

#include <cstdint>
#include <vector>

#include "flashsim/util.hpp"

namespace flashsim {

struct EccConfig {
  int codeword_bits = 0;       // l
  int correctable = 0;         // t
  double coding_rate = 0.0;    // in (0,1)
  bool superpage_parity = false;
};

struct DriveConfig {
  double pba_count = 0.0;
  double lba_count = 0.0;
  double pec_endurance = 0.0;
  double dwpd = 0.0;
  double write_amplification = 1.0;
  double r_compress = 1.0;
  int chips = 4;
  int dies_per_chip = 8;
  int codewords_per_lb = 1;    // K
  double p_hgbb = 0.0;         // hidden grown-bad-block probability
};

// P_ECFR = sum_{j=t+1}^{l} C(l,j) (1-ber)^(l-j) ber^j, evaluated in log
// space for numeric stability.
double p_ecfr(int l, int t, double ber);

// P_LBFail = P_HGBB + (1 - P_HGBB) * (1 - (1 - P_ECFR)^K)
double p_lbfail(double p_hgbb, double p_ecfr_value, int K);

// P_parity = P_LBFail * (1 - (1 - P_LBFail)^(c*d - 1))
double p_parity(double p_lbfail_value, int chips, int dies);

// OP = (PBA - LBA) / LBA; throws on negative overprovisioning.
double overprovisioning(double pba_count, double lba_count);

// Table-style OP: usable = raw * rate * (1 - parity fraction),
// OP = (usable - advertised) / advertised.
double table1_op(double raw_bytes, double advertised_bytes, double coding_rate,
                 double parity_fraction);

// Eq.-4 lifetime in years: PEC*(1+OP) / (365*DWPD*WA*Rc).
double lifetime_years(const DriveConfig& d);

struct LifetimeSegment {
  double pec = 0.0;
  double op = 0.0;
  double wa = 1.0;
};

// Multi-rate variant: each ECC engine contributes its own segment.
double multirate_lifetime_years(const std::vector<LifetimeSegment>& segments, double dwpd,
                                double r_compress);

struct UberPoint {
  double rber = 0.0;
  double uber = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t failures = 0;
  double stderr_uber = 0.0;
};

// Exact BCH frame-failure extrapolation: UBER = P_ECFR / l at each grid
// point (hard-decision bounded-distance behavior).
std::vector<UberPoint> bch_analytic_uber_curve(int l, int t,
                                               const std::vector<double>& rber_grid);

}  // namespace flashsim
