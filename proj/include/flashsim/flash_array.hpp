// Monte Carlo cell layer: blocks of cells with analog threshold voltages,
// erase/program/read, two-step and foggy-fine programming with program-error
// and cell-to-cell interference injection, and shadow program sequencing.
//
// Aging model: each cell stores the latent quantile z of its program-time
// sample.  At read time the cell voltage is
//   vth = base + lambda * ([mu_s(now) + z*sigma_s(now)] - base) + interference
// where base = mu_s(prog) + z*sigma_s(prog) and lambda is a fixed per-cell
// susceptibility factor (process variation; drives RFR/RDR classification).
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "flashsim/degradation.hpp"
#include "flashsim/types.hpp"
#include "flashsim/voltage_model.hpp"

namespace flashsim {

struct FlashWornOut : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SequencingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProgramMode : std::uint8_t { OneShot, TwoStep, FoggyFine };
enum class SequenceMode : std::uint8_t { BadSequence, ShadowMlc, ShadowTlc };

struct PageAddr {
  int wordline = 0;
  PageType type = PageType::LSB;
  bool operator==(const PageAddr&) const = default;
};

// Program order as a page permutation.  Shadow sequencing guarantees a
// fully-programmed wordline is disturbed only by the final-step programming
// of the wordline directly above it.
std::vector<PageAddr> page_program_order(SequenceMode mode, int wordlines, int bits_per_cell);

struct InterferenceEvent {
  int victim_wordline = 0;
  int source_wordline = 0;
  PageType source_page = PageType::LSB;
  bool victim_fully_programmed = false;
  double mean_abs_shift = 0.0;
};

struct PageRead {
  std::vector<std::uint8_t> bits;
  std::vector<std::int16_t> bins;
  bool erased_page = false;
};

struct BlockConfig {
  int wordlines = 64;
  int bitlines = 4096;  // desk-scale default: full-block Monte Carlo in ms
  CellMode mode = CellMode::TLC;
  ProgramMode program_mode = ProgramMode::FoggyFine;
  SequenceMode sequence_mode = SequenceMode::ShadowTlc;
  CouplingCoefficients coupling = CouplingCoefficients::nm_2y();
  long endurance = 3000;
  double sigma_scale = 1.0;      // test hook: inflates program sampling noise
  double lambda_spread = 0.25;   // per-cell susceptibility spread
  std::uint64_t seed = 1;
};

class FlashBlock {
 public:
  FlashBlock(BlockConfig cfg, const CalibrationTables& tables);

  const BlockConfig& config() const { return cfg_; }
  const CalibrationTables& tables() const { return *tables_; }
  int wordlines() const { return cfg_.wordlines; }
  int bitlines() const { return cfg_.bitlines; }
  int pages_per_block() const { return cfg_.wordlines * bits_per_cell(cfg_.mode); }
  long pe_cycles() const { return pe_cycles_; }
  double now() const { return now_; }
  long wordline_disturbs(int w) const { return disturbs_.at(w); }
  const std::vector<InterferenceEvent>& interference_log() const { return ilog_; }
  const std::vector<PageAddr>& program_order() const { return order_; }
  int program_cursor() const { return cursor_; }
  bool wordline_fully_programmed(int w) const;
  bool wordline_erased(int w) const { return steps_.at(w) == 0; }

  // Degradation of one wordline as seen right now.
  DegradationState wordline_degradation(int w) const;
  DistributionSet wordline_distribution(int w) const;

  // Erases the whole block: every cell is re-sampled from the ER state at
  // the incremented P/E count; all per-cycle state resets.  Throws
  // FlashWornOut once the endurance limit is reached.
  void erase();

  // Programs the next page in sequence.  `addr` must equal the cursor's
  // page; bits.size() must equal bitlines.
  void program_page(const PageAddr& addr, const std::vector<std::uint8_t>& bits);

  // Reads a page with the given references; increments the read-disturb
  // count of every other wordline.  Reading an erased page returns the
  // all-ones convention with the erased flag set.
  PageRead read_page(const PageAddr& addr, const ReadReferenceSet& refs);

  // Raw binning pass against an arbitrary ascending reference list (soft
  // LDPC levels use refined sets larger than the hard boundaries).  Counts
  // as a read for disturb accounting.
  std::vector<std::int16_t> read_bins(const PageAddr& addr, const std::vector<Voltage>& refs);

  // The truth bits handed to program_page (ground-truth oracle for error
  // counting; program errors make stored voltages disagree with these).
  std::vector<std::uint8_t> written_bits(const PageAddr& addr) const;

  // Current analog voltage of a wordline (aging + interference applied).
  Eigen::ArrayXd wordline_vth(int w) const;

  // Experiment hooks -------------------------------------------------------
  // Formats the block as if it had already endured `pe` cycles: sets the
  // counter and re-samples all cells from the ER state at that wear level.
  void format_at(long pe);
  // Advances the block-local retention clock.
  void advance_time(double seconds) { now_ += seconds; }
  // Injects additional disturbs on one wordline (RDR induction support).
  void add_disturbs(int w, long count) { disturbs_.at(w) += count; }

  // In-place refresh support: raise one cell toward a verify level in ISPP
  // steps (never decreases) and rebase its aging anchor at the new voltage.
  // Returns the applied voltage delta.
  double vispp_raise_cell(int w, int b, StateId target_state, double verify_level,
                          double step);
  // Rebases a wordline's aging clock at the current voltages (after an
  // in-place refresh pass).
  void rebase_wordline(int w);

  std::optional<PageAddr> last_programmed_page() const;

  // Single-reference sensing pass over one wordline (disparity search
  // support): fraction of cells below v.  Counts as a read for disturb
  // accounting.
  double fraction_below(int w, Voltage v);

  // Distribution set at the block's wear level with fresh retention/disturb.
  DistributionSet baseline_distribution() const { return dist_baseline(); }

  // Per-cell vth dump (debug / golden regression): wordline,bitline,vth.
  void dump_vth_csv(std::ostream& os) const;

  // Downgrade support (mitigation module): switch an erased block to the
  // 4-state mode; takes effect on the next program pass.
  void set_mode(CellMode m, ProgramMode pm, SequenceMode sm);

 private:
  struct StepTarget {
    double mean;
    double sd;
  };

  int steps_per_cell() const { return bits_per_cell(cfg_.mode); }
  void check_geometry(const PageAddr& addr) const;
  double cell_vth(int w, int b) const;
  void apply_interference(int source_w, const Eigen::ArrayXd& delta, PageType src_page);
  void sample_wordline_er(int w);
  DistributionSet dist_now(int w) const;
  DistributionSet dist_baseline() const;

  BlockConfig cfg_;
  const CalibrationTables* tables_;
  GrayMap gray_;
  std::vector<PageAddr> order_;
  Rng rng_;

  long pe_cycles_ = 0;
  double now_ = 0.0;
  int cursor_ = 0;

  std::vector<int> steps_;          // per wordline: program steps applied
  std::vector<double> prog_time_;   // per wordline: retention epoch
  std::vector<long> disturbs_;      // per wordline: sibling-read count

  Eigen::ArrayXXd base_vth_;   // voltage established by the last program step
  Eigen::ArrayXXd z_;          // latent quantile of the base sample
  Eigen::ArrayXXd lambda_;     // per-cell susceptibility (fixed at build)
  Eigen::ArrayXXd interference_;
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> phys_state_;
  std::vector<Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>> data_bits_;
  std::vector<InterferenceEvent> ilog_;
};

}  // namespace flashsim
