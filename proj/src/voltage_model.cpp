#include "flashsim/voltage_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flashsim {

const GrayMap& DistributionSet::gray() const {
  static const GrayMap slc(CellMode::SLC);
  static const GrayMap mlc(CellMode::MLC);
  static const GrayMap tlc(CellMode::TLC);
  static const GrayMap tlc_dg(CellMode::TLC_DOWNGRADED);
  switch (mode) {
    case CellMode::SLC: return slc;
    case CellMode::MLC: return mlc;
    case CellMode::TLC: return tlc;
    case CellMode::TLC_DOWNGRADED: return tlc_dg;
  }
  throw std::invalid_argument("DistributionSet: bad mode");
}

void DistributionSet::validate() const {
  if (static_cast<int>(states.size()) != flashsim::state_count(mode))
    throw std::invalid_argument("DistributionSet: state count does not match mode");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].stddev <= 0.0)
      throw std::invalid_argument("DistributionSet: stddev must be > 0");
    if (i > 0 && states[i].mean <= states[i - 1].mean)
      throw std::invalid_argument("DistributionSet: means must strictly increase");
  }
}

ReadReferenceSet::ReadReferenceSet(CellMode mode, std::vector<Voltage> boundary_voltages)
    : mode_(mode), voltages_(std::move(boundary_voltages)) {
  if (static_cast<int>(voltages_.size()) != flashsim::state_count(mode) - 1)
    throw std::invalid_argument("ReadReferenceSet: needs states-1 references");
  for (std::size_t i = 1; i < voltages_.size(); ++i)
    if (voltages_[i] <= voltages_[i - 1])
      throw std::invalid_argument("ReadReferenceSet: references must strictly ascend");
}

void ReadReferenceSet::set_boundary(int boundary_index, Voltage v) {
  voltages_.at(static_cast<std::size_t>(boundary_index)) = v;
  for (std::size_t i = 1; i < voltages_.size(); ++i)
    if (voltages_[i] <= voltages_[i - 1])
      throw std::invalid_argument("ReadReferenceSet: references must strictly ascend");
}

std::vector<int> ReadReferenceSet::page_boundaries(PageType p) const {
  return GrayMap(mode_).boundaries(p);
}

std::vector<Voltage> ReadReferenceSet::page_refs(PageType p) const {
  std::vector<Voltage> out;
  for (int b : page_boundaries(p)) out.push_back(voltages_.at(static_cast<std::size_t>(b)));
  return out;
}

std::vector<int> region_bits(const GrayMap& g, PageType p) {
  const std::vector<int> bnd = g.boundaries(p);
  std::vector<int> bits;
  bits.reserve(bnd.size() + 1);
  // Region r spans states (bnd[r-1], bnd[r]]; its bit is the bit of any
  // state inside, e.g. the boundary's left state for interior regions.
  for (int b : bnd) bits.push_back(g.bit(b, p));
  bits.push_back(g.bit(g.states() - 1, p));
  return bits;
}

std::vector<int> region_bits(const DistributionSet& dist, PageType p) {
  return region_bits(dist.gray(), p);
}

double analytic_rber(const DistributionSet& dist, const ReadReferenceSet& refs,
                     PageType p) {
  const std::vector<Voltage> prefs = refs.page_refs(p);
  if (prefs.empty()) throw std::invalid_argument("analytic_rber: empty reference subset");
  const std::vector<int> rbits = region_bits(dist, p);
  const GrayMap& g = dist.gray();
  const int n = dist.state_count();
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const int sbit = g.bit(s, p);
    const double mu = dist.states[s].mean;
    const double sd = dist.states[s].stddev;
    double perr = 0.0;
    for (std::size_t r = 0; r < rbits.size(); ++r) {
      if (rbits[r] == sbit) continue;
      const double lo = (r == 0) ? -INFINITY : prefs[r - 1];
      const double hi = (r == rbits.size() - 1) ? INFINITY : prefs[r];
      const double clo = std::isinf(lo) ? 0.0 : norm_cdf((lo - mu) / sd);
      const double chi = std::isinf(hi) ? 1.0 : norm_cdf((hi - mu) / sd);
      perr += chi - clo;
    }
    total += perr / n;
  }
  return total;
}

double analytic_rber_total(const DistributionSet& dist, const ReadReferenceSet& refs) {
  const auto pages = page_types(dist.mode);
  double sum = 0.0;
  for (PageType p : pages) sum += analytic_rber(dist, refs, p);
  return sum / static_cast<double>(pages.size());
}

Voltage optimal_ref(const StateDistribution& a, const StateDistribution& b) {
  if (!(a.mean < b.mean)) throw std::invalid_argument("optimal_ref: a.mean must be < b.mean");
  if (a.stddev <= 0.0 || b.stddev <= 0.0)
    throw std::invalid_argument("optimal_ref: stddev must be > 0");
  if (std::abs(a.stddev - b.stddev) < 1e-12 * std::max(a.stddev, b.stddev))
    return 0.5 * (a.mean + b.mean);
  // Equal-prior pdf equality reduces to A v^2 + B v + C = 0.
  const double sa2 = a.stddev * a.stddev, sb2 = b.stddev * b.stddev;
  const double A = 1.0 / sa2 - 1.0 / sb2;
  const double B = -2.0 * (a.mean / sa2 - b.mean / sb2);
  const double C = a.mean * a.mean / sa2 - b.mean * b.mean / sb2 +
                   2.0 * std::log(a.stddev / b.stddev);
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) throw std::domain_error("optimal_ref: degenerate distributions (no real root)");
  const double sq = std::sqrt(disc);
  for (double v : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
    if (v > a.mean && v < b.mean) return v;
  throw std::domain_error("optimal_ref: degenerate distributions (no root inside interval)");
}

ReadReferenceSet optimal_refs(const DistributionSet& dist) {
  std::vector<Voltage> v;
  for (int i = 0; i + 1 < dist.state_count(); ++i)
    v.push_back(optimal_ref(dist.states[i], dist.states[i + 1]));
  return ReadReferenceSet(dist.mode, std::move(v));
}

double llr_closed_form(double y, const AwgnLlrModel& m) {
  if (m.sigma <= 0.0) throw std::invalid_argument("llr: sigma must be > 0");
  const double s2 = m.sigma * m.sigma;
  return (m.mu1 * m.mu1 - m.mu0 * m.mu0) / (2.0 * s2) + y * (m.mu0 - m.mu1) / s2;
}

double llr_for_bin(int bin, const std::vector<Voltage>& refs, const AwgnLlrModel& m) {
  if (refs.empty()) throw std::invalid_argument("llr_for_bin: empty reference set");
  if (bin < 0 || bin > static_cast<int>(refs.size()))
    throw std::out_of_range("llr_for_bin: bad bin index");
  double y;
  if (bin == 0) {
    y = std::min(m.mu0, m.mu1);
  } else if (bin == static_cast<int>(refs.size())) {
    y = std::max(m.mu0, m.mu1);
  } else {
    y = 0.5 * (refs[bin - 1] + refs[bin]);
  }
  return llr_closed_form(y, m);
}

double mc_rber(const DistributionSet& dist, const ReadReferenceSet& refs, PageType p,
               std::size_t cells, Rng& rng) {
  const std::vector<Voltage> prefs = refs.page_refs(p);
  const std::vector<int> rbits = region_bits(dist, p);
  const GrayMap& g = dist.gray();
  const int n = dist.state_count();
  std::size_t errors = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    const int s = static_cast<int>(i % n);
    const Voltage v = sample_vth(dist.states[s], rng);
    const int bin = bin_of(v, prefs);
    if (rbits[static_cast<std::size_t>(bin)] != g.bit(s, p)) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(cells);
}

}  // namespace flashsim
