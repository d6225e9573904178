// End-to-end correction flow: hard decode, retry/NAC (BCH) or multi-level
// soft decoding (LDPC), superpage-level parity recovery, and the RFR/RDR
// last-resort rescue mechanisms.
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "flashsim/ecc_ldpc.hpp"
#include "flashsim/flash_array.hpp"
#include "flashsim/mitigation.hpp"
#include "flashsim/page_codec.hpp"

namespace flashsim {

struct FlowConfig {
  double t_read_us = 80.0;        // one flash read (also one LDPC level)
  double t_hard_decode_us = 10.0; // ECC engine hard-decision latency
  double t_parity_us = 10000.0;   // superpage-level parity recovery (~10 ms)
  int retry_reads = 5;
  double retry_step_units = 2.0;
  int nac_classes = 4;
  int ldpc_soft_levels = 5;
  int ldpc_iters_per_level = 20;
  double llr_saturation = 25.0;
};

enum class FlowStatus { CorrectedStage1, CorrectedStage2, CorrectedParity, Uncorrectable };

struct FlowOutcome {
  FlowStatus status = FlowStatus::Uncorrectable;
  std::vector<std::uint8_t> data;
  int reads = 0;
  double latency_us = 0.0;
  int stage2_attempts = 0;   // retry reads or soft levels actually used
  bool needs_rewrite = false;
};

// One logical-block slice of a superpage: a page on some die's block.
struct SuperpageSlot {
  FlashBlock* block = nullptr;
  PageAddr addr;
};

// c x d dies with the last slot holding the XOR parity of the others.
// The written logical data is retained as the ground truth the CRC check
// oracle compares against.
class Superpage {
 public:
  Superpage(std::vector<SuperpageSlot> slots, const PageCodec& codec);

  int slots() const { return static_cast<int>(slots_.size()); }
  int parity_slot() const { return slots() - 1; }
  const SuperpageSlot& slot(int i) const { return slots_.at(static_cast<std::size_t>(i)); }
  const PageCodec& codec() const { return *codec_; }

  // Programs data LBs and the XOR parity page.  data_per_slot must hold
  // slots()-1 entries of K*k data bits each.
  void write(const std::vector<std::vector<std::uint8_t>>& data_per_slot);

  // Ground-truth logical data of a slot (parity slot: XOR of the others).
  const std::vector<std::uint8_t>& truth(int slot) const {
    return truth_.at(static_cast<std::size_t>(slot));
  }

  // XOR invariant over the written (encoded) pages; checkable on demand.
  bool parity_invariant_holds() const;

 private:
  std::vector<SuperpageSlot> slots_;
  const PageCodec* codec_;
  std::vector<std::vector<std::uint8_t>> truth_;
};

// Algorithm-1 style flow for one slot of a superpage.  Stage 1: hard decode
// at V_initial.  Stage 2: BCH runs read-retry then NAC; LDPC runs soft
// levels.  Stage 3: superpage parity.  BCH successes pass a CRC-style gate
// against the written ground truth (miscorrection guard).
FlowOutcome correct_flow(Superpage& sp, int slot, const BlockVoltageState& vstate,
                         const FlowConfig& cfg);

// Standalone single-page flow (no superpage): stage 3 unavailable.
FlowOutcome correct_flow_single(FlashBlock& block, const PageAddr& addr,
                                const PageCodec& codec,
                                const std::vector<std::uint8_t>& truth_data,
                                const BlockVoltageState& vstate, const FlowConfig& cfg);

// Multi-level read schedule for a flash page type: level 0 uses the hard
// boundaries; each level adds one reference per boundary at alternating
// quarter-gap offsets.  Bin LLRs come from the nearest boundary's AWGN pair.
LlrSchedule build_flash_schedule(const DistributionSet& dist, const ReadReferenceSet& refs,
                                 PageType page, int max_levels, double llr_saturation = 25.0);

struct ParityRecoverResult {
  bool ok = false;
  std::vector<std::uint8_t> data;
  int sibling_reads = 0;
};

// Rebuilds one failed LB as the XOR of its siblings, each read through
// stages 1-2 of the flow; fails if any sibling is itself uncorrectable.
ParityRecoverResult parity_recover(Superpage& sp, int failed_slot,
                                   const BlockVoltageState& vstate, const FlowConfig& cfg);

struct RfrConfig {
  double window_sigma = 1.5;       // susceptible band around each boundary
  long rdr_induced_reads = 10000;  // disturb induction
  double retention_step_fraction = 1.0;  // fraction of one table key step
};

struct RfrResult {
  std::vector<std::uint8_t> bits;  // adjusted page bits for one more ECC try
  int susceptible_cells = 0;
  int adjusted_cells = 0;
  bool no_adjustment = false;
};

// Retention failure recovery: identify susceptible cells in the overlap
// windows, induce extra retention, classify prone vs resistant by shift
// magnitude, and flip susceptible-cell bits toward their expected state.
RfrResult rfr(FlashBlock& block, const PageAddr& addr, const ReadReferenceSet& refs,
              const RfrConfig& cfg);

// Read disturb recovery: same scheme with induced sibling reads; prone cells
// are expected to belong to the lower-voltage state.
RfrResult rdr(FlashBlock& block, const PageAddr& addr, const ReadReferenceSet& refs,
              const RfrConfig& cfg);

}  // namespace flashsim
