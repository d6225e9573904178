#include "flashsim/ftl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace flashsim {

std::vector<Request> generate_workload(const WorkloadSpec& spec, Rng& rng) {
  if (spec.kind == WorkloadSpec::Kind::Trace) return load_trace_csv(spec.trace_path);
  if (spec.footprint == 0) throw std::invalid_argument("workload: empty footprint");

  std::vector<Request> out;
  out.reserve(spec.ops);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Zipf CDF over ranks (rank r gets weight 1/(r+1)^theta).
  std::vector<double> zipf_cdf;
  if (spec.kind == WorkloadSpec::Kind::Zipf) {
    zipf_cdf.resize(spec.footprint);
    double acc = 0.0;
    for (std::uint32_t r = 0; r < spec.footprint; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_theta);
      zipf_cdf[r] = acc;
    }
    for (auto& v : zipf_cdf) v /= acc;
  }
  const std::uint32_t hot_pages = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::round(spec.hot_page_fraction * spec.footprint)));

  for (std::uint64_t i = 0; i < spec.ops; ++i) {
    Request r;
    r.op = (u01(rng) < spec.write_fraction) ? Request::Op::Write : Request::Op::Read;
    switch (spec.kind) {
      case WorkloadSpec::Kind::Uniform:
        r.lba = static_cast<std::uint32_t>(u01(rng) * spec.footprint);
        break;
      case WorkloadSpec::Kind::HotCold:
        if (u01(rng) < spec.hot_write_fraction) {
          r.lba = static_cast<std::uint32_t>(u01(rng) * hot_pages);
        } else {
          r.lba = hot_pages +
                  static_cast<std::uint32_t>(u01(rng) * (spec.footprint - hot_pages));
        }
        break;
      case WorkloadSpec::Kind::Zipf: {
        const double x = u01(rng);
        const auto it = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), x);
        r.lba = static_cast<std::uint32_t>(it - zipf_cdf.begin());
        break;
      }
      case WorkloadSpec::Kind::Trace:
        break;
    }
    if (r.lba >= spec.footprint) r.lba = spec.footprint - 1;
    out.push_back(r);
  }
  return out;
}

std::vector<Request> load_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("trace: cannot open " + path);
  std::vector<Request> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("op,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string op, lba, len;
    std::getline(ss, op, ',');
    std::getline(ss, lba, ',');
    std::getline(ss, len, ',');
    const std::uint32_t base = static_cast<std::uint32_t>(std::stoul(lba));
    const std::uint32_t n = len.empty() ? 1 : static_cast<std::uint32_t>(std::stoul(len));
    for (std::uint32_t i = 0; i < n; ++i)
      out.push_back({op == "W" ? Request::Op::Write : Request::Op::Read, base + i});
  }
  return out;
}

void dump_trace_csv(const std::string& path, const std::vector<Request>& reqs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("trace: cannot open for write " + path);
  f << "op,lba,length\n";
  for (const auto& r : reqs)
    f << (r.op == Request::Op::Write ? 'W' : 'R') << "," << r.lba << ",1\n";
}

FtlSim::FtlSim(FtlConfig cfg, const CalibrationTables* tables)
    : cfg_(std::move(cfg)), tables_(tables), rng_(cfg_.seed) {
  const std::uint64_t phys_pages =
      static_cast<std::uint64_t>(cfg_.block_count) * cfg_.pages_per_block;
  if (phys_pages <= cfg_.lba_count)
    throw std::invalid_argument("FtlSim: physical capacity must exceed the logical space");
  if (cfg_.cell_backed) {
    if (!tables_) throw std::invalid_argument("FtlSim: cell-backed mode needs tables");
    if (!cfg_.codec) throw std::invalid_argument("FtlSim: cell-backed mode needs a codec");
    if (cfg_.pages_per_block != cfg_.block.wordlines * bits_per_cell(cfg_.block.mode))
      throw std::invalid_argument("FtlSim: pages_per_block mismatch with block geometry");
    if (cfg_.codec->page_bits() != cfg_.block.bitlines)
      throw std::invalid_argument("FtlSim: codec page_bits mismatch with bitlines");
  }
  blocks_.resize(static_cast<std::size_t>(cfg_.block_count));
  for (int b = 0; b < cfg_.block_count; ++b) {
    auto& blk = blocks_[static_cast<std::size_t>(b)];
    if (cfg_.cell_backed) {
      BlockConfig bc = cfg_.block;
      bc.seed = derive_seed(cfg_.seed, 0x1000 + static_cast<std::uint64_t>(b));
      blk.cells = std::make_unique<FlashBlock>(bc, *tables_);
    }
    free_list_.push_back(b);
  }
  slots_.resize(phys_pages);
  l2p_.assign(cfg_.lba_count, -1);
  write_counts_.assign(cfg_.lba_count, 0);
  hot_flag_.assign(cfg_.lba_count, false);
}

bool FtlSim::is_hot(std::uint32_t lba) const {
  return cfg_.warm_enabled && hot_flag_[lba];
}

std::vector<std::uint8_t> FtlSim::payload_bits(std::uint64_t payload) const {
  // Deterministic expansion of the payload id into page data bits.
  const int nbits = cfg_.codec->data_bits_per_page();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(nbits));
  std::uint64_t s = payload * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL;
  for (int i = 0; i < nbits; ++i) {
    if (i % 64 == 0) {
      s ^= s >> 30;
      s *= 0xbf58476d1ce4e5b9ULL;
      s ^= s >> 27;
      s *= 0x94d049bb133111ebULL;
      s ^= s >> 31;
      s += 0x9e3779b97f4a7c15ULL;
    }
    bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((s >> (i % 64)) & 1);
  }
  return bits;
}

void FtlSim::program_cell_page(Block& blk, int page, const std::vector<std::uint8_t>& data) {
  const PageAddr addr = blk.cells->program_order().at(static_cast<std::size_t>(page));
  blk.cells->program_page(addr, cfg_.codec->encode_page(data));
}

int FtlSim::take_free_block(bool hot) {
  if (free_list_.empty()) throw CapacityError("FTL: free list exhausted");
  // Wear leveling: lowest P/E count wins, ties by lowest id.
  auto best = free_list_.begin();
  for (auto it = free_list_.begin(); it != free_list_.end(); ++it) {
    if (blocks_[static_cast<std::size_t>(*it)].pe < blocks_[static_cast<std::size_t>(*best)].pe)
      best = it;
  }
  const int b = *best;
  free_list_.erase(best);
  auto& blk = blocks_[static_cast<std::size_t>(b)];
  blk.free = false;
  blk.hot = hot;
  blk.opened_at = now_;
  blk.next_page = 0;
  blk.valid = 0;
  return b;
}

void FtlSim::erase_block(int b) {
  auto& blk = blocks_[static_cast<std::size_t>(b)];
  for (int p = 0; p < cfg_.pages_per_block; ++p) {
    auto& s = slots_[static_cast<std::size_t>(slot_of(b, p))];
    s.lba = kNoLba;
    s.valid = false;
    s.payload = 0;
  }
  ++blk.pe;
  ++stats_.erases;
  blk.next_page = 0;
  blk.valid = 0;
  blk.free = true;
  blk.hot = false;
  blk.reads = 0;
  if (blk.cells) blk.cells->erase();
  free_list_.push_back(b);
  if (active_cold_ == b) active_cold_ = -1;
  if (active_hot_ == b) active_hot_ = -1;
}

void FtlSim::garbage_collect(bool hot_pool) {
  // Victim selection: oldest-block-first inside the WARM hot pool, greedy
  // most-invalid otherwise.
  int victim = -1;
  double best_age = 1e300;
  int best_invalid = -1;
  for (int b = 0; b < cfg_.block_count; ++b) {
    const auto& blk = blocks_[static_cast<std::size_t>(b)];
    if (blk.free || b == active_cold_ || b == active_hot_) continue;
    if (blk.next_page < cfg_.pages_per_block) continue;  // only closed blocks
    if (cfg_.warm_enabled && blk.hot != hot_pool) continue;
    if (hot_pool) {
      if (blk.opened_at < best_age) {
        best_age = blk.opened_at;
        victim = b;
      }
    } else {
      const int invalid = cfg_.pages_per_block - blk.valid;
      if (invalid > best_invalid) {
        best_invalid = invalid;
        victim = b;
      }
    }
  }
  if (victim < 0) {
    if (cfg_.warm_enabled && hot_pool) return garbage_collect(false);
    throw CapacityError("FTL: no reclaimable block");
  }

  auto& blk = blocks_[static_cast<std::size_t>(victim)];
  ++stats_.gc_runs;
  for (int p = 0; p < cfg_.pages_per_block; ++p) {
    auto& s = slots_[static_cast<std::size_t>(slot_of(victim, p))];
    if (!s.valid) continue;
    write_to_active(s.lba, s.payload, blk.hot, false);
    ++stats_.gc_migrations;
  }
  erase_block(victim);
}

void FtlSim::ensure_free_space() {
  int guard = 0;
  while (static_cast<int>(free_list_.size()) < cfg_.gc_watermark_blocks) {
    bool hot_pool = false;
    if (cfg_.warm_enabled) {
      int hot_closed = 0;
      for (int b = 0; b < cfg_.block_count; ++b) {
        const auto& blk = blocks_[static_cast<std::size_t>(b)];
        if (!blk.free && blk.hot && b != active_hot_ &&
            blk.next_page >= cfg_.pages_per_block)
          ++hot_closed;
      }
      hot_pool = hot_closed >
                 static_cast<int>(cfg_.warm_hot_pool_fraction * cfg_.block_count);
    }
    garbage_collect(hot_pool);
    if (++guard > 2 * cfg_.block_count) throw CapacityError("FTL: GC cannot free space");
  }
}

void FtlSim::write_to_active(std::uint32_t lba, std::uint64_t payload, bool hot, bool host) {
  int& active = (cfg_.warm_enabled && hot) ? active_hot_ : active_cold_;
  if (active < 0 || blocks_[static_cast<std::size_t>(active)].next_page >= cfg_.pages_per_block) {
    if (active >= 0) blocks_[static_cast<std::size_t>(active)].programmed_at = now_;
    active = take_free_block(cfg_.warm_enabled && hot);
  }
  auto& blk = blocks_[static_cast<std::size_t>(active)];

  // Out-of-place write: invalidate the previous copy.
  if (l2p_[lba] >= 0) {
    auto& old = slots_[static_cast<std::size_t>(l2p_[lba])];
    old.valid = false;
    --blocks_[static_cast<std::size_t>(l2p_[lba] / cfg_.pages_per_block)].valid;
  }

  const int page = blk.next_page++;
  const int sid = slot_of(active, page);
  auto& s = slots_[static_cast<std::size_t>(sid)];
  s.lba = lba;
  s.valid = true;
  s.payload = payload;
  ++blk.valid;
  blk.programmed_at = now_;
  if (blk.cells) program_cell_page(blk, page, payload_bits(payload));
  l2p_[lba] = sid;
  if (host) ++stats_.host_writes;
}

void FtlSim::host_write(std::uint32_t lba, std::uint64_t payload) {
  if (lba >= cfg_.lba_count) throw std::invalid_argument("host_write: LBA outside footprint");
  ensure_free_space();
  ++write_counts_[lba];
  write_to_active(lba, payload, is_hot(lba), true);
  now_ += cfg_.seconds_per_host_op;
  if (cfg_.warm_enabled && ++ops_since_reclass_ >= cfg_.warm_window_ops) reclassify_hot();
  if (cfg_.refresh_enabled) maybe_refresh();
}

FtlSim::ReadResult FtlSim::host_read(std::uint32_t lba) {
  if (lba >= cfg_.lba_count) throw std::invalid_argument("host_read: LBA outside footprint");
  ++stats_.host_reads;
  now_ += cfg_.seconds_per_host_op;
  ReadResult out;
  if (l2p_[lba] < 0) return out;  // never written: all-ones convention
  out.written = true;
  const auto& s = slots_[static_cast<std::size_t>(l2p_[lba])];
  const int b = static_cast<int>(l2p_[lba] / cfg_.pages_per_block);
  const int page = static_cast<int>(l2p_[lba] % cfg_.pages_per_block);
  auto& blk = blocks_[static_cast<std::size_t>(b)];
  ++blk.reads;
  out.payload = s.payload;

  if (blk.cells) {
    const PageAddr addr = blk.cells->program_order().at(static_cast<std::size_t>(page));
    BlockVoltageState vstate{optimal_refs(blk.cells->baseline_distribution())};
    const FlowOutcome f = correct_flow_single(*blk.cells, addr, *cfg_.codec,
                                              payload_bits(s.payload), vstate, cfg_.flow);
    if (f.status == FlowStatus::Uncorrectable) {
      ++stats_.uncorrectable_reads;
      out.correct = false;
    } else if (f.status != FlowStatus::CorrectedStage1) {
      ++stats_.flow_stage2_reads;
      if (f.needs_rewrite) {
        ensure_free_space();
        write_to_active(lba, s.payload, is_hot(lba), false);
      }
    }
  }
  return out;
}

void FtlSim::run(const std::vector<Request>& reqs) {
  std::uint64_t i = 0;
  for (const auto& r : reqs) {
    if (r.op == Request::Op::Write) host_write(r.lba, i);
    else host_read(r.lba);
    ++i;
  }
}

void FtlSim::advance(double seconds) {
  now_ += seconds;
  if (cfg_.refresh_enabled) maybe_refresh();
}

void FtlSim::reclassify_hot() {
  ops_since_reclass_ = 0;
  hot_set_ = warm_hot_pages(write_counts_, cfg_.warm);
  std::fill(hot_flag_.begin(), hot_flag_.end(), false);
  for (std::uint32_t p : hot_set_) hot_flag_[p] = true;
  // Window reset keeps the classification responsive to phase changes.
  std::fill(write_counts_.begin(), write_counts_.end(), 0);
}

void FtlSim::refresh_one(int b) {
  auto& blk = blocks_[static_cast<std::size_t>(b)];
  ++stats_.refresh_runs;
  for (int p = 0; p < cfg_.pages_per_block; ++p) {
    auto& s = slots_[static_cast<std::size_t>(slot_of(b, p))];
    if (!s.valid) continue;
    write_to_active(s.lba, s.payload, blk.hot, false);
    ++stats_.refresh_rewrites;
  }
  erase_block(b);
}

void FtlSim::maybe_refresh() {
  for (int b = 0; b < cfg_.block_count; ++b) {
    const auto& blk = blocks_[static_cast<std::size_t>(b)];
    if (blk.free || blk.valid == 0 || b == active_cold_ || b == active_hot_) continue;
    if (cfg_.warm_enabled && blk.hot) continue;  // write-hot data never ages out
    const double interval =
        adaptive_refresh_interval(blk.pe, cfg_.temperature_k, cfg_.refresh);
    if (now_ - blk.programmed_at >= interval) {
      ensure_free_space();
      refresh_one(b);
    }
  }
}

std::vector<long> FtlSim::pe_histogram() const {
  std::vector<long> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.pe);
  return out;
}

bool FtlSim::page_conservation_holds() const {
  std::int64_t valid = 0, invalid = 0, free_pages = 0;
  for (int b = 0; b < cfg_.block_count; ++b) {
    const auto& blk = blocks_[static_cast<std::size_t>(b)];
    if (blk.free) {
      free_pages += cfg_.pages_per_block;
      continue;
    }
    valid += blk.valid;
    invalid += blk.next_page - blk.valid;
    free_pages += cfg_.pages_per_block - blk.next_page;
  }
  return valid + invalid + free_pages ==
         static_cast<std::int64_t>(blocks_.size()) * cfg_.pages_per_block;
}

}  // namespace flashsim
