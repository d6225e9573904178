// Simplified flash translation layer: logical-to-physical mapping, greedy
// garbage collection, wear leveling, WARM hot/cold segregation, refresh
// scheduling and write-amplification measurement.  Runs either as a fast
// logical-page model (payload integers) or backed by Monte Carlo flash
// blocks with the full correction flow on reads.
#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flashsim/mitigation.hpp"
#include "flashsim/recovery.hpp"

namespace flashsim {

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorkloadSpec {
  enum class Kind { Uniform, HotCold, Zipf, Trace };
  Kind kind = Kind::Uniform;
  std::uint32_t footprint = 1024;
  std::uint64_t ops = 10000;
  double write_fraction = 1.0;
  double hot_page_fraction = 0.01;   // HotCold: fraction of pages that are hot
  double hot_write_fraction = 0.95;  // HotCold: fraction of writes they take
  double zipf_theta = 1.0;
  std::string trace_path;
};

struct Request {
  enum class Op { Write, Read };
  Op op = Op::Write;
  std::uint32_t lba = 0;
};

// Deterministic stream for a fixed seed.
std::vector<Request> generate_workload(const WorkloadSpec& spec, Rng& rng);

// Trace format: CSV rows "op,lba,length" with op in {W,R}.
std::vector<Request> load_trace_csv(const std::string& path);
void dump_trace_csv(const std::string& path, const std::vector<Request>& reqs);

struct FtlConfig {
  std::uint32_t lba_count = 2048;
  int block_count = 64;
  int pages_per_block = 64;
  int gc_watermark_blocks = 2;

  bool warm_enabled = false;
  WarmConfig warm;
  std::uint64_t warm_window_ops = 20000;  // hot-set reclassification period
  double warm_hot_pool_fraction = 0.02;   // share of blocks reserved for hot data

  bool refresh_enabled = false;
  RefreshPolicy refresh;
  double temperature_k = 300.0;
  double seconds_per_host_op = 0.0;  // simulated clock advance per request

  std::uint64_t seed = 1;

  // Cell-backed mode: physical blocks are FlashBlocks and reads run the
  // correction flow (geometry must satisfy pages_per_block =
  // wordlines * bits_per_cell and page_bits = bitlines).
  bool cell_backed = false;
  BlockConfig block;
  std::optional<PageCodec> codec;
  FlowConfig flow;
};

struct FtlStats {
  std::uint64_t host_writes = 0;
  std::uint64_t host_reads = 0;
  std::uint64_t gc_migrations = 0;
  std::uint64_t gc_runs = 0;
  std::uint64_t refresh_rewrites = 0;
  std::uint64_t refresh_runs = 0;
  std::uint64_t erases = 0;
  std::uint64_t uncorrectable_reads = 0;
  std::uint64_t flow_stage2_reads = 0;

  double write_amplification() const {
    return host_writes == 0
               ? 1.0
               : static_cast<double>(host_writes + gc_migrations + refresh_rewrites) /
                     static_cast<double>(host_writes);
  }
  std::uint64_t background_writes() const { return gc_migrations + refresh_rewrites; }
};

class FtlSim {
 public:
  FtlSim(FtlConfig cfg, const CalibrationTables* tables = nullptr);

  void host_write(std::uint32_t lba, std::uint64_t payload);

  struct ReadResult {
    bool written = false;     // all-ones convention when false
    bool correct = true;      // payload integrity (cell mode: flow outcome)
    std::uint64_t payload = ~0ULL;
  };
  ReadResult host_read(std::uint32_t lba);

  void run(const std::vector<Request>& reqs);  // payload = op index
  void advance(double seconds);

  const FtlStats& stats() const { return stats_; }
  const FtlConfig& config() const { return cfg_; }
  double now() const { return now_; }
  std::vector<long> pe_histogram() const;
  int free_blocks() const { return static_cast<int>(free_list_.size()); }
  // valid + invalid + free == total pages (conservation check).
  bool page_conservation_holds() const;
  const std::vector<std::uint32_t>& hot_pages() const { return hot_set_; }

 private:
  struct Block {
    long pe = 0;
    int next_page = 0;
    int valid = 0;
    bool free = true;
    bool hot = false;
    double opened_at = 0.0;
    double programmed_at = 0.0;
    std::uint64_t reads = 0;
    std::unique_ptr<FlashBlock> cells;
  };
  struct Slot {
    std::uint32_t lba = kNoLba;
    bool valid = false;
    std::uint64_t payload = 0;
  };
  static constexpr std::uint32_t kNoLba = 0xffffffffu;

  int slot_of(int block, int page) const { return block * cfg_.pages_per_block + page; }
  void write_to_active(std::uint32_t lba, std::uint64_t payload, bool hot, bool host);
  int take_free_block(bool hot);
  void ensure_free_space();
  void garbage_collect(bool hot_pool);
  void erase_block(int b);
  void maybe_refresh();
  void refresh_one(int b);
  void reclassify_hot();
  bool is_hot(std::uint32_t lba) const;
  std::vector<std::uint8_t> payload_bits(std::uint64_t payload) const;
  void program_cell_page(Block& blk, int page, const std::vector<std::uint8_t>& data);

  FtlConfig cfg_;
  const CalibrationTables* tables_;
  Rng rng_;
  double now_ = 0.0;
  FtlStats stats_;

  std::vector<Block> blocks_;
  std::vector<Slot> slots_;
  std::vector<std::int64_t> l2p_;  // lba -> slot id or -1
  std::deque<int> free_list_;
  int active_cold_ = -1;
  int active_hot_ = -1;

  std::vector<std::uint64_t> write_counts_;
  std::vector<std::uint32_t> hot_set_;
  std::vector<bool> hot_flag_;
  std::uint64_t ops_since_reclass_ = 0;
};

}  // namespace flashsim
