#include "flashsim/flash_array.hpp"

#include <algorithm>
#include <cmath>

namespace flashsim {

std::vector<PageAddr> page_program_order(SequenceMode mode, int wordlines, int bits) {
  if (wordlines <= 0) throw std::invalid_argument("page_program_order: no wordlines");
  std::vector<PageType> steps;
  if (bits == 1) steps = {PageType::LSB};
  else if (bits == 2) steps = {PageType::LSB, PageType::MSB};
  else steps = {PageType::LSB, PageType::CSB, PageType::MSB};

  std::vector<PageAddr> order;
  order.reserve(static_cast<std::size_t>(wordlines * bits));

  if (mode == SequenceMode::BadSequence || bits == 1) {
    for (int w = 0; w < wordlines; ++w)
      for (PageType p : steps) order.push_back({w, p});
    return order;
  }
  if (mode == SequenceMode::ShadowMlc && bits != 2)
    throw std::invalid_argument("shadow_mlc order needs a 2-bit cell mode");
  if (mode == SequenceMode::ShadowTlc && bits != 3)
    throw std::invalid_argument("shadow_tlc order needs a 3-bit cell mode");

  // Staggered rounds: in round r program step s of wordline r-s.  This yields
  // the page numbering of the shadow sequence (MLC: LSB of WL i at 2i-1, MSB
  // at 2i+2, with the first/last exceptions).
  for (int r = 0; r < wordlines + bits - 1; ++r) {
    for (int s = 0; s < bits; ++s) {
      const int w = r - s;
      if (w >= 0 && w < wordlines) order.push_back({w, steps[static_cast<std::size_t>(s)]});
    }
  }
  return order;
}

namespace {

int step_of(PageType p, int bits) {
  switch (p) {
    case PageType::LSB: return 0;
    case PageType::CSB: return 1;
    case PageType::MSB: return bits - 1;
  }
  throw std::invalid_argument("bad page type");
}

}  // namespace

FlashBlock::FlashBlock(BlockConfig cfg, const CalibrationTables& tables)
    : cfg_(cfg),
      tables_(&tables),
      gray_(cfg.mode),
      order_(page_program_order(cfg.sequence_mode, cfg.wordlines, bits_per_cell(cfg.mode))),
      rng_(cfg.seed) {
  const int W = cfg_.wordlines, B = cfg_.bitlines;
  steps_.assign(static_cast<std::size_t>(W), 0);
  prog_time_.assign(static_cast<std::size_t>(W), 0.0);
  disturbs_.assign(static_cast<std::size_t>(W), 0);
  base_vth_.setZero(W, B);
  z_.setZero(W, B);
  interference_.setZero(W, B);
  phys_state_.setZero(W, B);
  lambda_.resize(W, B);
  for (int w = 0; w < W; ++w)
    for (int b = 0; b < B; ++b)
      lambda_(w, b) = std::max(0.05, 1.0 + cfg_.lambda_spread * sample_gaussian(rng_));
  data_bits_.assign(static_cast<std::size_t>(steps_per_cell()),
                    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(W, B));
  for (int w = 0; w < W; ++w) sample_wordline_er(w);
}

DistributionSet FlashBlock::dist_baseline() const {
  return distribution_at(cfg_.mode, {pe_cycles_, 0.0, 0}, *tables_, true);
}

DistributionSet FlashBlock::dist_now(int w) const {
  return distribution_at(cfg_.mode, wordline_degradation(w), *tables_, true);
}

DegradationState FlashBlock::wordline_degradation(int w) const {
  return {pe_cycles_, std::max(0.0, now_ - prog_time_.at(static_cast<std::size_t>(w))),
          disturbs_.at(static_cast<std::size_t>(w))};
}

DistributionSet FlashBlock::wordline_distribution(int w) const { return dist_now(w); }

bool FlashBlock::wordline_fully_programmed(int w) const {
  return steps_.at(static_cast<std::size_t>(w)) == steps_per_cell();
}

void FlashBlock::sample_wordline_er(int w) {
  const DistributionSet d = dist_baseline();
  const double mu = d.states[0].mean;
  const double sd = d.states[0].stddev * cfg_.sigma_scale;
  for (int b = 0; b < cfg_.bitlines; ++b) {
    const double g = sample_gaussian(rng_);
    z_(w, b) = g;
    base_vth_(w, b) = mu + sd * g;
    phys_state_(w, b) = 0;
    interference_(w, b) = 0.0;
  }
}

void FlashBlock::erase() {
  if (pe_cycles_ >= cfg_.endurance)
    throw FlashWornOut("erase: block endurance exhausted at " + std::to_string(pe_cycles_));
  ++pe_cycles_;
  cursor_ = 0;
  ilog_.clear();
  for (auto& s : steps_) s = 0;
  for (auto& d : disturbs_) d = 0;
  for (auto& t : prog_time_) t = now_;
  for (auto& db : data_bits_) db.setZero();
  for (int w = 0; w < cfg_.wordlines; ++w) sample_wordline_er(w);
}

void FlashBlock::format_at(long pe) {
  pe_cycles_ = pe;
  cursor_ = 0;
  ilog_.clear();
  for (auto& s : steps_) s = 0;
  for (auto& d : disturbs_) d = 0;
  for (auto& t : prog_time_) t = now_;
  for (auto& db : data_bits_) db.setZero();
  for (int w = 0; w < cfg_.wordlines; ++w) sample_wordline_er(w);
}

void FlashBlock::set_mode(CellMode m, ProgramMode pm, SequenceMode sm) {
  for (int s : steps_)
    if (s != 0) throw SequencingError("set_mode: block must be erased");
  cfg_.mode = m;
  cfg_.program_mode = pm;
  cfg_.sequence_mode = sm;
  gray_ = GrayMap(m);
  order_ = page_program_order(sm, cfg_.wordlines, bits_per_cell(m));
  data_bits_.assign(static_cast<std::size_t>(steps_per_cell()),
                    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(
                        cfg_.wordlines, cfg_.bitlines));
  for (int w = 0; w < cfg_.wordlines; ++w) sample_wordline_er(w);
}

void FlashBlock::check_geometry(const PageAddr& addr) const {
  if (addr.wordline < 0 || addr.wordline >= cfg_.wordlines)
    throw std::out_of_range("page address outside block");
}

double FlashBlock::cell_vth(int w, int b) const {
  const int st = steps_.at(static_cast<std::size_t>(w));
  double v = base_vth_(w, b);
  if (st == 0 || st == steps_per_cell()) {
    // ER-resident or fully programmed: evolve along the calibration tables.
    const DistributionSet now_d = dist_now(w);
    const DistributionSet base_d =
        distribution_at(cfg_.mode, {pe_cycles_, 0.0, 0}, *tables_, true);
    const int s = phys_state_(w, b);
    const double xb = base_d.states[s].mean + z_(w, b) * base_d.states[s].stddev;
    const double xn = now_d.states[s].mean + z_(w, b) * now_d.states[s].stddev;
    v += lambda_(w, b) * (xn - xb);
  }
  return v + interference_(w, b);
}

Eigen::ArrayXd FlashBlock::wordline_vth(int w) const {
  Eigen::ArrayXd out(cfg_.bitlines);
  const int st = steps_.at(static_cast<std::size_t>(w));
  if (st == 0 || st == steps_per_cell()) {
    const DistributionSet now_d = dist_now(w);
    const DistributionSet base_d =
        distribution_at(cfg_.mode, {pe_cycles_, 0.0, 0}, *tables_, true);
    for (int b = 0; b < cfg_.bitlines; ++b) {
      const int s = phys_state_(w, b);
      const double xb = base_d.states[s].mean + z_(w, b) * base_d.states[s].stddev;
      const double xn = now_d.states[s].mean + z_(w, b) * now_d.states[s].stddev;
      out(b) = base_vth_(w, b) + lambda_(w, b) * (xn - xb) + interference_(w, b);
    }
  } else {
    for (int b = 0; b < cfg_.bitlines; ++b) out(b) = base_vth_(w, b) + interference_(w, b);
  }
  return out;
}

void FlashBlock::apply_interference(int source_w, const Eigen::ArrayXd& delta,
                                    PageType src_page) {
  for (int dw : {-1, 1}) {
    const int w = source_w + dw;
    if (w < 0 || w >= cfg_.wordlines) continue;
    double abs_sum = 0.0;
    for (int b = 0; b < cfg_.bitlines; ++b) {
      double dv = cfg_.coupling.wordline * delta(b);
      if (b > 0) dv += cfg_.coupling.diagonal * delta(b - 1);
      if (b + 1 < cfg_.bitlines) dv += cfg_.coupling.diagonal * delta(b + 1);
      interference_(w, b) += dv;
      abs_sum += std::abs(dv);
    }
    ilog_.push_back({w, source_w, src_page, wordline_fully_programmed(w),
                     abs_sum / cfg_.bitlines});
  }
}

void FlashBlock::program_page(const PageAddr& addr, const std::vector<std::uint8_t>& bits) {
  check_geometry(addr);
  if (static_cast<int>(bits.size()) != cfg_.bitlines)
    throw std::invalid_argument("program_page: bits length != bitlines");
  if (cursor_ >= static_cast<int>(order_.size()))
    throw SequencingError("program_page: block fully programmed; erase first");
  const PageAddr expect = order_[static_cast<std::size_t>(cursor_)];
  if (!(addr == expect))
    throw SequencingError("program_page: out-of-sequence page (expected wordline " +
                          std::to_string(expect.wordline) + ")");

  const int w = addr.wordline;
  const int bits_n = steps_per_cell();
  const int step = steps_.at(static_cast<std::size_t>(w));
  if (step >= bits_n) throw SequencingError("program_page: page already fully programmed");
  if (step_of(addr.type, bits_n) != step)
    throw SequencingError("program_page: wrong page type for wordline step");

  auto& db = data_bits_[static_cast<std::size_t>(step)];
  for (int b = 0; b < cfg_.bitlines; ++b) db(w, b) = bits[static_cast<std::size_t>(b)] & 1;

  const DistributionSet d = dist_baseline();
  const bool final_step = (step == bits_n - 1);
  Eigen::ArrayXd old_base = base_vth_.row(w).transpose();

  auto sample_state = [&](int s) {
    return d.states[s].mean + d.states[s].stddev * cfg_.sigma_scale * sample_gaussian(rng_);
  };

  if (cfg_.program_mode == ProgramMode::OneShot) {
    if (final_step) {
      for (int b = 0; b < cfg_.bitlines; ++b) {
        unsigned code = 0;
        for (int s = 0; s < bits_n; ++s) code |= static_cast<unsigned>(data_bits_[s](w, b)) << s;
        const int st = gray_.state_of(code);
        if (st != 0) {
          base_vth_(w, b) = sample_state(st);
          interference_(w, b) = 0.0;
        }
        phys_state_(w, b) = static_cast<std::uint8_t>(st);
      }
    }
  } else if (cfg_.program_mode == ProgramMode::TwoStep) {
    if (bits_n != 2) throw std::invalid_argument("two-step programming needs a 2-bit mode");
    // TP sits between the first two programmed states, with P1's spread.
    const double tp_mean = 0.5 * (d.states[1].mean + d.states[2].mean);
    const double tp_sd = d.states[1].stddev;
    if (step == 0) {
      for (int b = 0; b < cfg_.bitlines; ++b) {
        if (!db(w, b)) {  // LSB 0 leaves ER for the temporary state
          base_vth_(w, b) = tp_mean + tp_sd * cfg_.sigma_scale * sample_gaussian(rng_);
          interference_(w, b) = 0.0;
        }
      }
    } else {
      // The MSB step re-reads the internal LSB against a fixed reference;
      // a misread ER-tail cell is programmed as if its LSB were 0.
      const double internal_ref = 0.5 * (d.states[0].mean + tp_mean);
      for (int b = 0; b < cfg_.bitlines; ++b) {
        const double v = base_vth_(w, b) + interference_(w, b);
        const int internal_lsb = (v < internal_ref) ? 1 : 0;
        const unsigned code = (static_cast<unsigned>(db(w, b)) << 1) |
                              static_cast<unsigned>(internal_lsb);
        const int st = gray_.state_of(code);
        phys_state_(w, b) = static_cast<std::uint8_t>(st);
        if (st != 0) {
          // ISPP can only raise the voltage.
          const double tgt = sample_state(st);
          if (tgt > v) {
            base_vth_(w, b) = tgt;
            interference_(w, b) = 0.0;
          } else {
            base_vth_(w, b) = v;
            interference_(w, b) = 0.0;
          }
        }
        // An ER target leaves the cell untouched at its current voltage.
      }
    }
  } else {  // FoggyFine
    if (bits_n != 3) throw std::invalid_argument("foggy-fine programming needs a 3-bit mode");
    if (step == 0) {
      // Binary step: large pulses toward the middle of the scale.
      const double bin_mean = 0.5 * (d.states[3].mean + d.states[4].mean);
      const double bin_sd = 1.5 * d.states[1].stddev;
      for (int b = 0; b < cfg_.bitlines; ++b) {
        if (!db(w, b)) {
          base_vth_(w, b) = bin_mean + bin_sd * cfg_.sigma_scale * sample_gaussian(rng_);
          interference_(w, b) = 0.0;
        }
      }
    } else if (step == 1) {
      // Foggy step: rough 4-level placement by (LSB,CSB).  The pair that
      // contains ER stays put until the fine step.
      for (int b = 0; b < cfg_.bitlines; ++b) {
        const unsigned partial = (static_cast<unsigned>(db(w, b)) << 1) |
                                 static_cast<unsigned>(data_bits_[0](w, b));
        int s_lo = -1, s_hi = -1;
        for (int s = 0; s < 8; ++s) {
          if ((gray_.code(s) & 0b011u) == partial) ((s_lo < 0) ? s_lo : s_hi) = s;
        }
        if (s_lo == 0) continue;
        const double mean = 0.5 * (d.states[s_lo].mean + d.states[s_hi].mean);
        const double sd = 1.5 * std::min(d.states[s_lo].stddev, d.states[s_hi].stddev);
        const double tgt = mean + sd * cfg_.sigma_scale * sample_gaussian(rng_);
        if (tgt > base_vth_(w, b)) {
          base_vth_(w, b) = tgt;
          interference_(w, b) = 0.0;
        }
      }
    } else {
      // Fine step: the buffered binary/foggy values are error-free (SLC
      // buffers), so the final state follows the true data bits.
      for (int b = 0; b < cfg_.bitlines; ++b) {
        unsigned code = (static_cast<unsigned>(db(w, b)) << 2) |
                        (static_cast<unsigned>(data_bits_[1](w, b)) << 1) |
                        static_cast<unsigned>(data_bits_[0](w, b));
        const int st = gray_.state_of(code);
        phys_state_(w, b) = static_cast<std::uint8_t>(st);
        if (st != 0) {
          base_vth_(w, b) = sample_state(st);
          interference_(w, b) = 0.0;
        }
      }
    }
  }

  if (final_step) {
    // Retention/disturb clocks restart once the wordline reaches its final
    // distribution; re-anchor the aging quantile at the final sample.
    prog_time_[static_cast<std::size_t>(w)] = now_;
    disturbs_[static_cast<std::size_t>(w)] = 0;
    for (int b = 0; b < cfg_.bitlines; ++b) {
      const int s = phys_state_(w, b);
      z_(w, b) = (base_vth_(w, b) - d.states[s].mean) / d.states[s].stddev;
    }
  }

  Eigen::ArrayXd delta = base_vth_.row(w).transpose() - old_base;
  steps_[static_cast<std::size_t>(w)] = step + 1;
  apply_interference(w, delta, addr.type);
  ++cursor_;
}

PageRead FlashBlock::read_page(const PageAddr& addr, const ReadReferenceSet& refs) {
  check_geometry(addr);
  const int w = addr.wordline;
  const int st = steps_.at(static_cast<std::size_t>(w));
  PageRead out;
  out.bits.resize(static_cast<std::size_t>(cfg_.bitlines));
  out.bins.resize(static_cast<std::size_t>(cfg_.bitlines));
  if (st == 0) {
    // Erased-page convention: all ones, no binning.
    std::fill(out.bits.begin(), out.bits.end(), std::uint8_t{1});
    std::fill(out.bins.begin(), out.bins.end(), std::int16_t{0});
    out.erased_page = true;
  } else if (st < steps_per_cell()) {
    throw SequencingError("read_page: wordline is partially programmed");
  } else {
    const std::vector<Voltage> prefs = refs.page_refs(addr.type);
    const std::vector<int> rbits = region_bits(gray_, addr.type);
    const Eigen::ArrayXd v = wordline_vth(w);
    for (int b = 0; b < cfg_.bitlines; ++b) {
      const int bin = bin_of(v(b), prefs);
      out.bins[static_cast<std::size_t>(b)] = static_cast<std::int16_t>(bin);
      out.bits[static_cast<std::size_t>(b)] =
          static_cast<std::uint8_t>(rbits[static_cast<std::size_t>(bin)]);
    }
  }
  // Pass-through stress lands on every other wordline of the block.
  for (int ow = 0; ow < cfg_.wordlines; ++ow)
    if (ow != w) ++disturbs_[static_cast<std::size_t>(ow)];
  return out;
}

std::vector<std::uint8_t> FlashBlock::written_bits(const PageAddr& addr) const {
  check_geometry(addr);
  const auto& db = data_bits_.at(static_cast<std::size_t>(step_of(addr.type, steps_per_cell())));
  std::vector<std::uint8_t> out(static_cast<std::size_t>(cfg_.bitlines));
  for (int b = 0; b < cfg_.bitlines; ++b) out[static_cast<std::size_t>(b)] = db(addr.wordline, b);
  return out;
}

double FlashBlock::vispp_raise_cell(int w, int b, StateId target_state, double verify_level,
                                    double step) {
  if (step <= 0.0) throw std::invalid_argument("vispp_raise_cell: step must be > 0");
  (void)target_state;
  const double v = cell_vth(w, b);
  if (v >= verify_level) return 0.0;  // inhibit: V-ISPP never decreases
  const double pulses = std::ceil((verify_level - v) / step);
  const double dv = pulses * step;
  interference_(w, b) += dv;  // staged absolute raise; folded in at rebase
  return dv;
}

void FlashBlock::rebase_wordline(int w) {
  const Eigen::ArrayXd v = wordline_vth(w);
  prog_time_[static_cast<std::size_t>(w)] = now_;
  disturbs_[static_cast<std::size_t>(w)] = 0;
  const DistributionSet base_d = dist_baseline();
  for (int b = 0; b < cfg_.bitlines; ++b) {
    const int s = phys_state_(w, b);
    base_vth_(w, b) = v(b);
    interference_(w, b) = 0.0;
    z_(w, b) = (v(b) - base_d.states[s].mean) / base_d.states[s].stddev;
  }
}

std::optional<PageAddr> FlashBlock::last_programmed_page() const {
  if (cursor_ == 0) return std::nullopt;
  return order_[static_cast<std::size_t>(cursor_ - 1)];
}

std::vector<std::int16_t> FlashBlock::read_bins(const PageAddr& addr,
                                                const std::vector<Voltage>& refs) {
  check_geometry(addr);
  const int w = addr.wordline;
  if (steps_.at(static_cast<std::size_t>(w)) != steps_per_cell())
    throw SequencingError("read_bins: wordline not fully programmed");
  const Eigen::ArrayXd v = wordline_vth(w);
  std::vector<std::int16_t> bins(static_cast<std::size_t>(cfg_.bitlines));
  for (int b = 0; b < cfg_.bitlines; ++b)
    bins[static_cast<std::size_t>(b)] = static_cast<std::int16_t>(bin_of(v(b), refs));
  for (int ow = 0; ow < cfg_.wordlines; ++ow)
    if (ow != w) ++disturbs_[static_cast<std::size_t>(ow)];
  return bins;
}

double FlashBlock::fraction_below(int w, Voltage v) {
  const Eigen::ArrayXd vth = wordline_vth(w);
  const auto below = (vth < v).count();
  for (int ow = 0; ow < cfg_.wordlines; ++ow)
    if (ow != w) ++disturbs_[static_cast<std::size_t>(ow)];
  return static_cast<double>(below) / static_cast<double>(cfg_.bitlines);
}

void FlashBlock::dump_vth_csv(std::ostream& os) const {
  os << "wordline,bitline,vth\n";
  os.precision(17);
  for (int w = 0; w < cfg_.wordlines; ++w) {
    const Eigen::ArrayXd v = wordline_vth(w);
    for (int b = 0; b < cfg_.bitlines; ++b) os << w << "," << b << "," << v(b) << "\n";
  }
}

}  // namespace flashsim
