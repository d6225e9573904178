// Experiment runner: configuration validation, seeded experiment execution,
// and CSV emission.  Each experiment is also callable directly (the
// acceptance suite drives them in-process).
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "flashsim/analytics.hpp"
#include "flashsim/degradation.hpp"
#include "flashsim/util.hpp"

namespace flashsim {

// Structured config diagnostics; empty means the config is runnable.
std::vector<std::string> validate_config(const nlohmann::json& config);

// Executes the experiment named in the config and writes its CSV artifacts.
// Returns the list of files written.  Throws std::invalid_argument for
// config errors and std::runtime_error for runtime failures.
std::vector<std::string> run_experiment(const nlohmann::json& config);

// Canonical config hash stamped into every output header (out_dir excluded
// so artifacts are location-independent).
std::uint64_t config_hash(const nlohmann::json& config);

namespace experiments {

// Appendix-table fidelity: antithetic Monte Carlo of every grid row of every
// mechanism; columns include expected and sampled moments.
CsvWriter characterize_distributions(const CalibrationTables& tables,
                                     std::size_t cells_per_state, std::uint64_t seed);

// RBER sweeps along each degradation axis with frozen-at-0-P/E references
// and per-row optimal references, paired on common latent quantiles;
// discordant bit counts against the previous row support one-sided
// monotonicity tests.
CsvWriter characterize_rber(const CalibrationTables& tables, std::size_t cells_per_state,
                            std::uint64_t seed);

struct EccCurveSpec {
  std::vector<double> rber_grid = {2e-3, 4e-3, 7e-3, 1e-2, 1.5e-2, 2e-2};
  std::uint64_t frames = 20000;
  int ldpc_n = 1024, ldpc_k = 922, ldpc_column_weight = 3;
  int ldpc_iters = 20;
  std::vector<int> ldpc_levels = {0, 3, 5};
  int bch_m = 10, bch_t = 8;
  bool bch_analytic = true;
  std::uint64_t bch_mc_frames = 0;  // optional Monte Carlo cross-check
  int threads = 1;
};
CsvWriter ecc_curve(const EccCurveSpec& spec, std::uint64_t seed);

struct FlowBenchRound {
  long pe = 2000;
  double retention_seconds = 86400.0;
  int superpages = 32;
};
struct FlowBenchSpec {
  int chips = 2, dies = 4;
  int wordlines = 8, bitlines = 1024;
  int bch_m = 8, bch_t = 4;
  double p_hgbb = 0.0;
  std::vector<FlowBenchRound> rounds;
  int nac_classes = 4;
};
CsvWriter flow_bench(const CalibrationTables& tables, const FlowBenchSpec& spec,
                     std::uint64_t seed);

// Table-style OP rows, the parity-fraction fit, and Eq.-4/Eq.-9 examples.
CsvWriter lifetime_table(const nlohmann::json& spec);

struct FtlSweepSpec {
  std::vector<double> op_grid = {0.1, 0.5, 3.0};
  std::uint32_t footprint = 4096;
  int pages_per_block = 32;
  std::uint64_t ops = 400000;
  bool warm_comparison = true;
  std::uint64_t warm_ops = 200000;
  double warm_seconds_per_op = 100.0;
};
CsvWriter ftl_sweep(const FtlSweepSpec& spec, std::uint64_t seed);

}  // namespace experiments

}  // namespace flashsim
