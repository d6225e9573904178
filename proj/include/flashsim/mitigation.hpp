// Controller-side error mitigation: read-retry, read reference voltage
// optimization (disparity + sampling), NAC, the refresh family, pass-through
// voltage tuning, hot-data management and multi-rate ECC switching.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flashsim/flash_array.hpp"
#include "flashsim/page_codec.hpp"

namespace flashsim {

struct DisparityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered list of reference sets to attempt; the first entry must be the
// block's current V_initial.
struct RetrySchedule {
  std::vector<ReadReferenceSet> attempts;

  // V_initial followed by `steps` uniformly lowered sets (retention shifts
  // distributions left, so the sweep walks downward).
  static RetrySchedule downward_sweep(const ReadReferenceSet& v_initial, int steps,
                                      double step_units);
};

struct BlockVoltageState {
  ReadReferenceSet v_initial;
  double v_pass = kVoltageScaleMax;
  double last_optimized_at = 0.0;
};

struct RetryOutcome {
  bool ok = false;
  int attempts = 0;
  std::vector<std::uint8_t> data;
  int corrected_bits = 0;
};

// Attempts an ECC decode per reference set in order; first success wins.
RetryOutcome read_retry(FlashBlock& block, const PageAddr& addr, const RetrySchedule& schedule,
                        const PageCodec& codec);

// Disparity-based reference approximation: binary search per boundary so the
// cumulative fraction of cells below boundary j equals (j+1)/num_states,
// visiting boundaries middle-out.  Throws DisparityError when a target
// fraction is unreachable (unscrambled data).
ReadReferenceSet disparity_vref_search(FlashBlock& block, int wordline, double tolerance = 0.02);

struct VoptResult {
  ReadReferenceSet refs;
  int probe_reads = 0;
  int final_error_count = 0;
};

// Sampling-based Vopt discovery on the last-programmed wordline: per
// boundary, hill-descend then hill-ascend in `step` increments tracking the
// corrected-error count; falls back to disparity search when V_initial is
// not ECC-countable.  Updates state.v_initial.
VoptResult sampling_vopt_discovery(FlashBlock& block, const PageCodec& codec,
                                   BlockVoltageState& state, double step = 2.0);

struct NacOutcome {
  bool ok = false;
  int classes_tried = 0;
  std::vector<std::uint8_t> data;
  bool neighbor_unreadable = false;
};

// Neighbor-cell-assisted correction: classify victim cells by the state of
// the wordline above and reread each class with compensated references.
NacOutcome nac_correct(FlashBlock& block, const PageAddr& addr, const PageCodec& codec,
                       const ReadReferenceSet& refs);

struct RefreshPolicy {
  enum class Kind { Remapping, InPlace, Hybrid, ReadReclaim };
  Kind kind = Kind::Remapping;
  double base_interval_s = 365.0 * 86400.0;
  // Adaptive step table: interval applies while pe < threshold; the last
  // entry's interval covers everything beyond the final threshold.
  std::vector<std::pair<long, double>> adaptive = {
      {1000, 365.0 * 86400.0},   // yearly while young
      {2000, 90.0 * 86400.0},
      {3000, 30.0 * 86400.0},
  };
  double beyond_interval_s = 7.0 * 86400.0;  // weekly at end of life
  double arrhenius_ea_ev = 1.1;              // config, not characterization data
  double calibration_temp_k = 300.0;
  long read_reclaim_threshold = 50000;
  int hybrid_right_shift_threshold = 8;
  double vispp_step = 2.0;
  double verify_margin_sigma = 1.0;
};

double adaptive_refresh_interval(long pe_cycles, double temperature_k,
                                 const RefreshPolicy& policy);

struct RefreshOutcome {
  enum class Action { None, InPlace, Remap, Deferred };
  Action action = Action::None;
  int pages_rewritten = 0;
  long right_shift_errors = 0;
  int uncorrectable_pages = 0;
  int cells_raised = 0;
};

// Refreshes one block: reads and corrects every fully-programmed page, then
// either V-ISPP-restores charge in place or rewrites the corrected data into
// `free_block` (caller handles remapping).  A null free_block defers
// remap-type refreshes.
RefreshOutcome refresh_block(FlashBlock& block, const RefreshPolicy& policy,
                             const PageCodec& codec, const ReadReferenceSet& refs,
                             FlashBlock* free_block);

struct VpassResult {
  double v_pass = kVoltageScaleMax;
  double expected_pass_errors = 0.0;
  int margin_bits = 0;
};

// Lowers V_pass only as far as the block's leftover ECC margin allows:
// the expected count of cells with vth > V_pass stays within the margin.
VpassResult tune_vpass(FlashBlock& block, int ecc_capability_bits, const PageCodec& codec,
                       const ReadReferenceSet& refs);

struct EccEngineSet {
  std::vector<double> coding_rates;  // strictly decreasing (strength increasing)
  std::vector<double> thresholds;    // strictly increasing, size = engines-1
  void validate() const;
  int engines() const { return static_cast<int>(coding_rates.size()); }
};

struct MultirateDecision {
  int engine_index = 0;
  bool end_of_life = false;
};

// Smallest engine whose switch threshold exceeds the measured RBER, never
// weaker than the current engine (one-way ratchet).  Beyond the last
// threshold: strongest engine plus the end-of-life flag.
MultirateDecision multirate_select(double rber_measured, const EccEngineSet& engines,
                                   int current_index);

// Switches an erased TLC block to the 4-state downgraded mode.
void downgrade_block(FlashBlock& block);

struct WarmConfig {
  double hot_capacity_fraction = 0.01;  // ceiling on the hot pool size
  double hot_multiplier = 5.0;          // count >= multiplier * mean => hot
};

// Pages whose write frequency clears the skew threshold, hottest first,
// capped at the configured fraction of the footprint.
std::vector<std::uint32_t> warm_hot_pages(const std::vector<std::uint64_t>& write_counts,
                                          const WarmConfig& cfg);

}  // namespace flashsim
