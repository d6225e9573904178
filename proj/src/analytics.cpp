#include "flashsim/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace flashsim {

double p_ecfr(int l, int t, double ber) {
  if (l <= 0 || t < 0) throw std::invalid_argument("p_ecfr: bad code parameters");
  if (ber < 0.0 || ber > 1.0) throw std::invalid_argument("p_ecfr: ber outside [0,1]");
  if (ber == 0.0) return t >= l ? 0.0 : 0.0;
  if (t >= l) return 0.0;
  if (ber == 1.0) return 1.0;
  // Tail sum in log space; summed from the smallest terms upward would not
  // matter at double precision, so accumulate via exp(log-term - max).
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(l - t));
  const double lp = std::log(ber), lq = std::log1p(-ber);
  double maxlog = -INFINITY;
  for (int j = t + 1; j <= l; ++j) {
    const double lc = std::lgamma(l + 1.0) - std::lgamma(j + 1.0) - std::lgamma(l - j + 1.0);
    const double v = lc + j * lp + (l - j) * lq;
    logs.push_back(v);
    maxlog = std::max(maxlog, v);
  }
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - maxlog);
  const double res = std::exp(maxlog) * acc;
  return std::min(1.0, res);
}

double p_lbfail(double p_hgbb, double p_ecfr_value, int K) {
  if (p_hgbb < 0.0 || p_hgbb > 1.0 || p_ecfr_value < 0.0 || p_ecfr_value > 1.0 || K < 1)
    throw std::invalid_argument("p_lbfail: bad arguments");
  return p_hgbb + (1.0 - p_hgbb) * (1.0 - std::pow(1.0 - p_ecfr_value, K));
}

double p_parity(double p_lbfail_value, int chips, int dies) {
  if (p_lbfail_value < 0.0 || p_lbfail_value > 1.0)
    throw std::invalid_argument("p_parity: probability outside [0,1]");
  const int cd = chips * dies;
  if (cd < 2) throw std::invalid_argument("p_parity: needs c*d >= 2");
  return p_lbfail_value * (1.0 - std::pow(1.0 - p_lbfail_value, cd - 1));
}

double overprovisioning(double pba_count, double lba_count) {
  if (lba_count <= 0.0) throw std::invalid_argument("overprovisioning: LBA count must be > 0");
  const double op = (pba_count - lba_count) / lba_count;
  if (op < 0.0) throw std::invalid_argument("overprovisioning: negative (PBA < LBA)");
  return op;
}

double table1_op(double raw_bytes, double advertised_bytes, double coding_rate,
                 double parity_fraction) {
  if (advertised_bytes <= 0.0 || coding_rate <= 0.0 || coding_rate >= 1.0 ||
      parity_fraction < 0.0 || parity_fraction >= 1.0)
    throw std::invalid_argument("table1_op: bad arguments");
  const double usable = raw_bytes * coding_rate * (1.0 - parity_fraction);
  const double op = (usable - advertised_bytes) / advertised_bytes;
  if (op < 0.0) throw std::invalid_argument("table1_op: negative overprovisioning");
  return op;
}

double lifetime_years(const DriveConfig& d) {
  const double denom = 365.0 * d.dwpd * d.write_amplification * d.r_compress;
  if (denom <= 0.0) throw std::invalid_argument("lifetime: zero/negative denominator");
  const double op = overprovisioning(d.pba_count, d.lba_count);
  return d.pec_endurance * (1.0 + op) / denom;
}

double multirate_lifetime_years(const std::vector<LifetimeSegment>& segments, double dwpd,
                                double r_compress) {
  if (dwpd <= 0.0 || r_compress <= 0.0)
    throw std::invalid_argument("multirate_lifetime: bad denominator");
  double years = 0.0;
  for (const auto& s : segments) {
    if (s.wa <= 0.0) throw std::invalid_argument("multirate_lifetime: WA must be > 0");
    years += s.pec * (1.0 + s.op) / (365.0 * dwpd * s.wa * r_compress);
  }
  return years;
}

std::vector<UberPoint> bch_analytic_uber_curve(int l, int t,
                                               const std::vector<double>& rber_grid) {
  std::vector<UberPoint> out;
  out.reserve(rber_grid.size());
  for (double r : rber_grid) {
    UberPoint p;
    p.rber = r;
    p.uber = p_ecfr(l, t, r) / static_cast<double>(l);
    out.push_back(p);
  }
  return out;
}

}  // namespace flashsim
