// Statistical channel layer: per-state Gaussian threshold-voltage
// distributions, read binning, analytic RBER, optimal read references and
// AWGN log-likelihood ratios.
#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "flashsim/types.hpp"
#include "flashsim/util.hpp"

namespace flashsim {

struct StateDistribution {
  StateId state = 0;
  Voltage mean = 0.0;
  Voltage stddev = 0.0;  // > 0 for any physical configuration
};

// The "channel" of the simulator: one Gaussian per state, means strictly
// increasing, bit labels from the mode's Gray map.
struct DistributionSet {
  CellMode mode = CellMode::TLC;
  std::vector<StateDistribution> states;

  const GrayMap& gray() const;
  int state_count() const { return static_cast<int>(states.size()); }
  void validate() const;  // throws std::invalid_argument on bad invariants
};

// Full set of read reference voltages for a cell mode (states-1 values,
// strictly ascending).  Page-type subsets follow from the Gray boundaries.
class ReadReferenceSet {
 public:
  ReadReferenceSet() = default;
  ReadReferenceSet(CellMode mode, std::vector<Voltage> boundary_voltages);

  CellMode mode() const { return mode_; }
  const std::vector<Voltage>& all() const { return voltages_; }
  Voltage at_boundary(int boundary_index) const { return voltages_.at(boundary_index); }
  void set_boundary(int boundary_index, Voltage v);

  // Subset of references used to read one page type (TLC: LSB 1, CSB 2,
  // MSB 4; MLC: LSB 1, MSB 2).
  std::vector<Voltage> page_refs(PageType p) const;
  // Boundary indices (into all()) that belong to the page type.
  std::vector<int> page_boundaries(PageType p) const;

 private:
  CellMode mode_ = CellMode::TLC;
  std::vector<Voltage> voltages_;
};

// Bin index of a threshold voltage against ascending references: the count
// of references strictly below vth.  A tie vth == ref classifies into the
// lower bin.  Total over all inputs.
inline int bin_of(Voltage vth, const std::vector<Voltage>& refs) {
  int b = 0;
  for (Voltage r : refs)
    if (r < vth) ++b;
  return b;
}

// Decoded bit value of each read region for one page type.  Region r lies
// between page reference r-1 and r; all states inside a region share the
// page bit by the Gray property.
std::vector<int> region_bits(const GrayMap& g, PageType p);
std::vector<int> region_bits(const DistributionSet& dist, PageType p);

// Per-bit error probability of reading `p`-type pages of `dist` with `refs`,
// assuming equal state priors (scrambled data).  Gaussian tail integrals.
double analytic_rber(const DistributionSet& dist, const ReadReferenceSet& refs,
                     PageType p);

// Average of analytic_rber over all page types of the mode (per stored bit).
double analytic_rber_total(const DistributionSet& dist, const ReadReferenceSet& refs);

// Voltage in (a.mean, b.mean) where the two equal-prior Gaussian pdfs are
// equal; closed form from the quadratic in v.  Equal sigmas give the
// midpoint.  Throws std::domain_error when no real root lies inside.
Voltage optimal_ref(const StateDistribution& a, const StateDistribution& b);

// Optimal full reference set for a distribution set (pdf intersection of
// every adjacent state pair).
ReadReferenceSet optimal_refs(const DistributionSet& dist);

// AWGN channel parameters for LLR computation around one boundary.
struct AwgnLlrModel {
  double mu0 = 0.0;   // mean threshold voltage of the bit-0 state
  double mu1 = 0.0;   // mean threshold voltage of the bit-1 state
  double sigma = 1.0; // shared standard deviation, > 0
};

// Closed-form AWGN LLR at observed voltage y:
//   (mu1^2 - mu0^2) / (2 sigma^2) + y (mu0 - mu1) / sigma^2
// Positive means the bit is likely 0.
double llr_closed_form(double y, const AwgnLlrModel& m);

// LLR of a read bin: the representative voltage is the bin midpoint;
// unbounded outer bins clamp to the nearest state mean.
double llr_for_bin(int bin, const std::vector<Voltage>& refs, const AwgnLlrModel& m);

// One Gaussian draw from a state distribution; degenerate sigma=0 returns
// the mean.  Deterministic for a fixed generator state.
inline Voltage sample_vth(const StateDistribution& s, Rng& rng) {
  if (s.stddev == 0.0) return s.mean;
  return s.mean + s.stddev * sample_gaussian(rng);
}

// Monte Carlo RBER of one page type (test/experiment support; equal priors).
double mc_rber(const DistributionSet& dist, const ReadReferenceSet& refs, PageType p,
               std::size_t cells, Rng& rng);

}  // namespace flashsim
