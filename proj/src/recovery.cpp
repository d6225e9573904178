#include "flashsim/recovery.hpp"

#include <algorithm>
#include <cmath>

namespace flashsim {

Superpage::Superpage(std::vector<SuperpageSlot> slots, const PageCodec& codec)
    : slots_(std::move(slots)), codec_(&codec) {
  if (slots_.size() < 2) throw std::invalid_argument("Superpage: needs at least 2 slots");
  truth_.resize(slots_.size());
}

void Superpage::write(const std::vector<std::vector<std::uint8_t>>& data_per_slot) {
  const int d = slots() - 1;
  if (static_cast<int>(data_per_slot.size()) != d)
    throw std::invalid_argument("Superpage::write: need one data vector per data slot");
  std::vector<std::uint8_t> parity(static_cast<std::size_t>(codec_->data_bits_per_page()), 0);
  for (int i = 0; i < d; ++i) {
    const auto& data = data_per_slot[static_cast<std::size_t>(i)];
    const std::vector<std::uint8_t> page = codec_->encode_page(data);
    slots_[static_cast<std::size_t>(i)].block->program_page(slots_[static_cast<std::size_t>(i)].addr,
                                                            page);
    truth_[static_cast<std::size_t>(i)] = data;
    for (std::size_t j = 0; j < parity.size(); ++j) parity[j] ^= data[j] & 1;
  }
  // XOR of systematic codewords is the codeword of the XOR; the parity page
  // is therefore a normal codeword over the XORed data.
  const std::vector<std::uint8_t> ppage = codec_->encode_page(parity);
  slots_.back().block->program_page(slots_.back().addr, ppage);
  truth_.back() = parity;
}

bool Superpage::parity_invariant_holds() const {
  std::vector<std::uint8_t> acc;
  for (int i = 0; i < slots(); ++i) {
    const auto bits = slots_[static_cast<std::size_t>(i)].block->written_bits(
        slots_[static_cast<std::size_t>(i)].addr);
    if (acc.empty()) acc.assign(bits.size(), 0);
    for (std::size_t j = 0; j < bits.size(); ++j) acc[j] ^= bits[j] & 1;
  }
  // Spare bits carry 1s in every slot; an even slot count cancels them.
  const int content = codec_->codewords_per_page() * codec_->codeword_bits();
  for (int j = 0; j < content; ++j)
    if (acc[static_cast<std::size_t>(j)]) return false;
  return true;
}

LlrSchedule build_flash_schedule(const DistributionSet& dist, const ReadReferenceSet& refs,
                                 PageType page, int max_levels, double llr_saturation) {
  const GrayMap& g = dist.gray();
  const std::vector<int> bidx = refs.page_boundaries(page);
  const std::vector<Voltage> hard = refs.page_refs(page);

  struct Boundary {
    double v, delta, mu0, mu1, sigma;
  };
  std::vector<Boundary> bounds;
  for (std::size_t i = 0; i < bidx.size(); ++i) {
    const int b = bidx[i];
    const auto& lo = dist.states[static_cast<std::size_t>(b)];
    const auto& hi = dist.states[static_cast<std::size_t>(b + 1)];
    Boundary bd;
    bd.v = hard[i];
    bd.delta = (hi.mean - lo.mean) / 4.0;
    const int lo_bit = g.bit(b, page);
    bd.mu0 = lo_bit == 0 ? lo.mean : hi.mean;
    bd.mu1 = lo_bit == 1 ? lo.mean : hi.mean;
    bd.sigma = 0.5 * (lo.stddev + hi.stddev);
    bounds.push_back(bd);
  }

  std::vector<std::vector<Voltage>> refs_per_level;
  for (int level = 0; level <= max_levels; ++level) {
    std::vector<Voltage> v;
    for (const auto& bd : bounds) {
      v.push_back(bd.v);
      for (int l = 1; l <= level; ++l) {
        const int step = (l + 1) / 2;
        v.push_back(bd.v + (l % 2 ? -bd.delta : bd.delta) * step);
      }
    }
    std::sort(v.begin(), v.end());
    refs_per_level.push_back(std::move(v));
  }

  // Bin LLRs: representative voltage is the bin midpoint (outer bins clamp
  // to the flanking state means), evaluated on the nearest boundary's pair.
  LlrSchedule sched;
  std::vector<std::vector<double>> llr_tables;
  for (const auto& rv : refs_per_level) {
    std::vector<double> table;
    for (int bin = 0; bin <= static_cast<int>(rv.size()); ++bin) {
      double y;
      if (bin == 0) {
        y = dist.states[static_cast<std::size_t>(bidx.front())].mean;
      } else if (bin == static_cast<int>(rv.size())) {
        y = dist.states[static_cast<std::size_t>(bidx.back() + 1)].mean;
      } else {
        y = 0.5 * (rv[static_cast<std::size_t>(bin - 1)] + rv[static_cast<std::size_t>(bin)]);
      }
      const Boundary* nearest = &bounds.front();
      for (const auto& bd : bounds)
        if (std::abs(y - bd.v) < std::abs(y - nearest->v)) nearest = &bd;
      const double raw = llr_closed_form(y, {nearest->mu0, nearest->mu1, nearest->sigma});
      table.push_back(std::clamp(raw, -llr_saturation, llr_saturation));
    }
    llr_tables.push_back(std::move(table));
  }
  return LlrSchedule::from_tables(std::move(refs_per_level), std::move(llr_tables));
}

namespace {

bool crc_gate(const std::vector<std::uint8_t>& got, const std::vector<std::uint8_t>& truth) {
  return got == truth;  // stands in for the host CRC over the logical page
}

// Stages 1 and 2 only; shared by the full flow and parity recovery.
FlowOutcome flow_stage12(FlashBlock& block, const PageAddr& addr, const PageCodec& codec,
                         const std::vector<std::uint8_t>& truth,
                         const BlockVoltageState& vstate, const FlowConfig& cfg) {
  FlowOutcome out;

  // Stage 1: hard decode at V_initial.
  const PageRead first = block.read_page(addr, vstate.v_initial);
  ++out.reads;
  out.latency_us += cfg.t_read_us + cfg.t_hard_decode_us;
  const auto d1 = codec.decode_page(first.bits);
  if (d1.ok && crc_gate(d1.data, truth)) {
    out.status = FlowStatus::CorrectedStage1;
    out.data = d1.data;
    return out;
  }

  if (codec.kind() == PageCodec::Kind::Bch) {
    // Stage 2a: read-retry over a downward reference sweep.
    const RetrySchedule sched =
        RetrySchedule::downward_sweep(vstate.v_initial, cfg.retry_reads, cfg.retry_step_units);
    const RetryOutcome retry = read_retry(block, addr, sched, codec);
    out.reads += retry.attempts;
    out.latency_us += retry.attempts * (cfg.t_read_us + cfg.t_hard_decode_us);
    out.stage2_attempts = retry.attempts;
    if (retry.ok && crc_gate(retry.data, truth)) {
      out.status = FlowStatus::CorrectedStage2;
      out.data = retry.data;
      out.needs_rewrite = true;
      return out;
    }
    // Stage 2b: neighbor-cell-assisted correction.
    const NacOutcome nac = nac_correct(block, addr, codec, vstate.v_initial);
    const int nac_reads =
        (nac.neighbor_unreadable ? 0
                                 : static_cast<int>(page_types(block.config().mode).size()) + 1 +
                                       std::max(0, nac.classes_tried - 1));
    out.reads += nac_reads;
    out.latency_us += nac_reads * (cfg.t_read_us + cfg.t_hard_decode_us);
    out.stage2_attempts += nac.classes_tried;
    if (nac.ok && crc_gate(nac.data, truth)) {
      out.status = FlowStatus::CorrectedStage2;
      out.data = nac.data;
      out.needs_rewrite = true;
      return out;
    }
    return out;  // uncorrectable at this level
  }

  // LDPC: multi-level soft decoding.  Level 0 reuses the stage-1 read.
  const LlrSchedule sched = build_flash_schedule(block.baseline_distribution(), vstate.v_initial,
                                                 addr.type, cfg.ldpc_soft_levels,
                                                 cfg.llr_saturation);
  std::vector<std::vector<std::int16_t>> level_bins(
      static_cast<std::size_t>(cfg.ldpc_soft_levels + 1));
  int levels_read = 0;
  auto ensure_level = [&](int level) -> const std::vector<std::int16_t>& {
    auto& bins = level_bins[static_cast<std::size_t>(level)];
    if (bins.empty()) {
      bins = block.read_bins(addr, sched.refs(level));
      if (level > 0) {
        ++out.reads;
        out.latency_us += cfg.t_read_us;
        levels_read = std::max(levels_read, level);
      }
    }
    return bins;
  };

  const LdpcCode& code = *codec.ldpc_code();
  std::vector<std::uint8_t> data;
  data.reserve(static_cast<std::size_t>(codec.data_bits_per_page()));
  bool all_ok = true;
  for (int c = 0; c < codec.codewords_per_page() && all_ok; ++c) {
    auto reader = [&](int level) {
      const auto& bins = ensure_level(level);
      return std::vector<std::int16_t>(
          bins.begin() + static_cast<long>(c) * codec.codeword_bits(),
          bins.begin() + static_cast<long>(c + 1) * codec.codeword_bits());
    };
    const LdpcDecodeResult r =
        ldpc_decode(code, sched, reader, cfg.ldpc_iters_per_level, cfg.ldpc_soft_levels);
    if (!r.ok()) {
      all_ok = false;
      break;
    }
    data.insert(data.end(), r.message.begin(), r.message.end());
  }
  out.stage2_attempts = levels_read;
  if (all_ok && crc_gate(data, truth)) {
    out.status = levels_read == 0 ? FlowStatus::CorrectedStage1 : FlowStatus::CorrectedStage2;
    out.data = data;
    out.needs_rewrite = levels_read > 0;
    return out;
  }
  return out;
}

}  // namespace

FlowOutcome correct_flow_single(FlashBlock& block, const PageAddr& addr,
                                const PageCodec& codec,
                                const std::vector<std::uint8_t>& truth_data,
                                const BlockVoltageState& vstate, const FlowConfig& cfg) {
  return flow_stage12(block, addr, codec, truth_data, vstate, cfg);
}

ParityRecoverResult parity_recover(Superpage& sp, int failed_slot,
                                   const BlockVoltageState& vstate, const FlowConfig& cfg) {
  ParityRecoverResult out;
  std::vector<std::uint8_t> acc(static_cast<std::size_t>(sp.codec().data_bits_per_page()), 0);
  for (int s = 0; s < sp.slots(); ++s) {
    if (s == failed_slot) continue;
    const auto& slot = sp.slot(s);
    FlowOutcome f = flow_stage12(*slot.block, slot.addr, sp.codec(), sp.truth(s), vstate, cfg);
    out.sibling_reads += f.reads;
    if (f.status == FlowStatus::Uncorrectable) return out;  // single-erasure limit
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] ^= f.data[j] & 1;
  }
  out.ok = true;
  out.data = std::move(acc);
  return out;
}

FlowOutcome correct_flow(Superpage& sp, int slot, const BlockVoltageState& vstate,
                         const FlowConfig& cfg) {
  const auto& si = sp.slot(slot);
  FlowOutcome out = flow_stage12(*si.block, si.addr, sp.codec(), sp.truth(slot), vstate, cfg);
  if (out.status != FlowStatus::Uncorrectable) return out;

  // Stage 3: superpage-level parity.
  const ParityRecoverResult pr = parity_recover(sp, slot, vstate, cfg);
  out.reads += pr.sibling_reads;
  out.latency_us += cfg.t_parity_us;
  if (pr.ok && crc_gate(pr.data, sp.truth(slot))) {
    out.status = FlowStatus::CorrectedParity;
    out.data = pr.data;
    out.needs_rewrite = true;
  }
  return out;
}

namespace {

RfrResult rfr_core(FlashBlock& block, const PageAddr& addr, const ReadReferenceSet& refs,
                   const RfrConfig& cfg, bool retention_mode) {
  RfrResult out;
  const int w = addr.wordline;
  const DistributionSet dist = block.wordline_distribution(w);
  const GrayMap& g = dist.gray();
  const std::vector<int> bidx = refs.page_boundaries(addr.type);
  const std::vector<Voltage> prefs = refs.page_refs(addr.type);
  const std::vector<int> rbits = region_bits(g, addr.type);

  // Record pre-induction voltages (the read-retry sweep's per-cell bins).
  const Eigen::ArrayXd v0 = block.wordline_vth(w);
  const int B = block.bitlines();
  out.bits.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    out.bits[static_cast<std::size_t>(b)] =
        static_cast<std::uint8_t>(rbits[static_cast<std::size_t>(bin_of(v0(b), prefs))]);

  // Susceptible cells: inside +-window_sigma of any boundary of this page.
  std::vector<int> cell_boundary(static_cast<std::size_t>(B), -1);
  for (std::size_t i = 0; i < bidx.size(); ++i) {
    const int bd = bidx[i];
    const double sbar = 0.5 * (dist.states[static_cast<std::size_t>(bd)].stddev +
                               dist.states[static_cast<std::size_t>(bd + 1)].stddev);
    const double lo = prefs[i] - cfg.window_sigma * sbar;
    const double hi = prefs[i] + cfg.window_sigma * sbar;
    for (int b = 0; b < B; ++b)
      if (v0(b) >= lo && v0(b) <= hi) cell_boundary[static_cast<std::size_t>(b)] = static_cast<int>(i);
  }
  std::vector<int> susceptible;
  for (int b = 0; b < B; ++b)
    if (cell_boundary[static_cast<std::size_t>(b)] >= 0) susceptible.push_back(b);
  out.susceptible_cells = static_cast<int>(susceptible.size());
  if (susceptible.empty()) {
    out.no_adjustment = true;
    return out;
  }

  // Induce additional stress and re-measure.
  if (retention_mode) {
    // Advance the retention clock by one calibration key step.
    const DegradationState deg = block.wordline_degradation(w);
    const auto& keys = block.tables().retention.keys;
    double step = 0.0;
    for (double k : keys) {
      if (deg.retention_seconds < k) {
        step = k - deg.retention_seconds;
        break;
      }
    }
    if (step == 0.0 && keys.size() >= 2)
      step = keys.back() - keys[keys.size() - 2];  // beyond the table: last gap
    block.advance_time(step * cfg.retention_step_fraction);
  } else {
    block.add_disturbs(w, cfg.rdr_induced_reads);
  }
  const Eigen::ArrayXd v1 = block.wordline_vth(w);

  std::vector<double> shifts;
  shifts.reserve(susceptible.size());
  for (int b : susceptible) shifts.push_back(std::abs(v1(b) - v0(b)));
  std::vector<double> sorted = shifts;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                   sorted.end());
  const double threshold = sorted[sorted.size() / 2];
  if (threshold <= 1e-12) {
    out.no_adjustment = true;  // no shift contrast to classify against
    return out;
  }

  for (std::size_t i = 0; i < susceptible.size(); ++i) {
    const int b = susceptible[i];
    const int bd = bidx[static_cast<std::size_t>(cell_boundary[static_cast<std::size_t>(b)])];
    const bool prone = shifts[i] > threshold;
    // Retention: prone cells leak fast, so they belong to the upper state.
    // Read disturb: prone cells charge up fast, so they belong to the lower.
    const int st = retention_mode ? (prone ? bd + 1 : bd) : (prone ? bd : bd + 1);
    const std::uint8_t nb = static_cast<std::uint8_t>(g.bit(st, addr.type));
    if (nb != out.bits[static_cast<std::size_t>(b)]) {
      out.bits[static_cast<std::size_t>(b)] = nb;
      ++out.adjusted_cells;
    }
  }
  return out;
}

}  // namespace

RfrResult rfr(FlashBlock& block, const PageAddr& addr, const ReadReferenceSet& refs,
              const RfrConfig& cfg) {
  return rfr_core(block, addr, refs, cfg, true);
}

RfrResult rdr(FlashBlock& block, const PageAddr& addr, const ReadReferenceSet& refs,
              const RfrConfig& cfg) {
  return rfr_core(block, addr, refs, cfg, false);
}

}  // namespace flashsim
