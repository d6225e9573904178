// Systematic LDPC codec: sparse parity-check construction, generator
// derivation, and multi-level hard/soft decoding with the min-sum algorithm.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flashsim/util.hpp"
#include "flashsim/voltage_model.hpp"

namespace flashsim {

// Sparse binary parity-check code.  H is kept sparse for decoding; the
// systematic generator is derived by reducing the right (n-k) x (n-k) block,
// so codeword = [message, parity] and H * c^T = 0.
class LdpcCode {
 public:
  int n() const { return n_; }
  int k() const { return k_; }
  int checks() const { return n_ - k_; }

  // Random regular-ish construction: data columns of the given weight, a
  // staircase parity section, no 4-cycles, rows kept balanced.  Throws after
  // bounded retries if the parameters are infeasible.
  static LdpcCode construct(int n, int k, int column_weight, Rng& rng);

  // Builds a code from an explicit H (entries 0/1).  Columns may be permuted
  // to make the right block invertible; the returned code's coordinate
  // system is the permuted one (H() reflects it).
  static LdpcCode from_parity_check(const Eigen::Matrix<std::uint8_t, Eigen::Dynamic,
                                                        Eigen::Dynamic>& H);

  static LdpcCode load_alist(const std::string& path);
  void dump_alist(const std::string& path) const;

  const std::vector<std::vector<int>>& check_neighbors() const { return check_bits_; }
  const std::vector<std::vector<int>>& bit_neighbors() const { return bit_checks_; }
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> dense_h() const;

  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& msg) const;
  bool syndrome_zero(const std::vector<std::uint8_t>& word) const;

  // True when no two check rows share two or more bit columns (girth >= 6).
  bool four_cycle_free() const;

 private:
  void finalize_adjacency();
  void derive_generator();

  int n_ = 0, k_ = 0;
  std::vector<std::vector<int>> check_bits_;  // per check: bit indices
  std::vector<std::vector<int>> bit_checks_;  // per bit: check indices
  // parity = P * m over GF(2); rows are bit-packed in 64-bit words.
  std::vector<std::vector<std::uint64_t>> parity_rows_;
};

// Read reference refinement for multi-level decoding.  Level 0 is the hard
// read; each level adds one reference per boundary (offsets -d, +d, -2d,
// +2d, ... scaled by the boundary's delta), and maps each resulting bin to a
// precomputed LLR.
class LlrSchedule {
 public:
  // Single-boundary binary channel (codec experiments): boundary at the pdf
  // intersection of the two states, delta = quarter of the inter-mean gap.
  static LlrSchedule binary_awgn(const AwgnLlrModel& model, int max_levels,
                                 double llr_saturation = 25.0);

  int max_levels() const { return static_cast<int>(refs_.size()) - 1; }
  const std::vector<Voltage>& refs(int level) const { return refs_.at(level); }
  const std::vector<double>& llrs(int level) const { return llr_.at(level); }
  double latency_us_per_level() const { return latency_us_per_level_; }

  // Generic construction from per-level reference sets and an AWGN model
  // used to evaluate bin LLRs (codec experiments).
  static LlrSchedule from_refs(std::vector<std::vector<Voltage>> refs_per_level,
                               const AwgnLlrModel& model, double llr_saturation = 25.0);

  // Fully explicit construction (flash channel: per-bin LLR tables computed
  // against multi-boundary distributions).
  static LlrSchedule from_tables(std::vector<std::vector<Voltage>> refs_per_level,
                                 std::vector<std::vector<double>> llr_per_level);

 private:
  std::vector<std::vector<Voltage>> refs_;  // cumulative, sorted, per level
  std::vector<std::vector<double>> llr_;    // per level: bin index -> LLR
  double latency_us_per_level_ = 80.0;
};

struct LdpcDecodeResult {
  enum class Status { Success, LevelExhausted };
  Status status = Status::LevelExhausted;
  std::vector<std::uint8_t> message;
  std::vector<int> iterations_per_level;
  int levels_used = 0;
  double latency_us = 0.0;

  bool ok() const { return status == Status::Success; }
};

// One min-sum pass at fixed channel LLRs.  Returns success iff the hard
// decision satisfies every parity check; `iterations` reports the count of
// message-passing rounds actually run (0 when the raw decision is clean).
struct MinSumOutcome {
  bool parity_ok = false;
  int iterations = 0;
  std::vector<std::uint8_t> hard;
};
MinSumOutcome min_sum_decode(const LdpcCode& code, const std::vector<double>& channel_llr,
                             int max_iters, double saturation = 25.0);

// Multi-level decoding: level 0 consumes the hard-read bins; every further
// level performs one more read (the callback returns bins against the
// level's cumulative reference set) and recomputes the channel LLRs from all
// reads so far.  LevelExhausted is a value, not a fault.
LdpcDecodeResult ldpc_decode(
    const LdpcCode& code, const LlrSchedule& schedule,
    const std::function<std::vector<std::int16_t>(int level)>& read_level,
    int max_iters_per_level, int max_levels);

}  // namespace flashsim
