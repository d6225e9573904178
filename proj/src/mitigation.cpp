#include "flashsim/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flashsim {

RetrySchedule RetrySchedule::downward_sweep(const ReadReferenceSet& v_initial, int steps,
                                            double step_units) {
  RetrySchedule s;
  s.attempts.push_back(v_initial);
  for (int i = 1; i <= steps; ++i) {
    std::vector<Voltage> v = v_initial.all();
    for (auto& x : v) x -= i * step_units;
    s.attempts.emplace_back(v_initial.mode(), std::move(v));
  }
  return s;
}

RetryOutcome read_retry(FlashBlock& block, const PageAddr& addr, const RetrySchedule& schedule,
                        const PageCodec& codec) {
  if (schedule.attempts.empty())
    throw std::invalid_argument("read_retry: empty retry schedule");
  RetryOutcome out;
  for (const auto& refs : schedule.attempts) {
    ++out.attempts;
    const PageRead r = block.read_page(addr, refs);
    const auto d = codec.decode_page(r.bits);
    if (d.ok) {
      out.ok = true;
      out.data = d.data;
      out.corrected_bits = d.corrected_bits;
      return out;
    }
  }
  return out;
}

ReadReferenceSet disparity_vref_search(FlashBlock& block, int wordline, double tolerance) {
  const CellMode mode = block.config().mode;
  const int states = state_count(mode);
  const int nb = states - 1;
  std::vector<Voltage> found(static_cast<std::size_t>(nb),
                             std::numeric_limits<double>::quiet_NaN());

  // Middle-out boundary order (Fig.-24 style: V_b, then V_a / V_c, ...).
  std::vector<int> order;
  std::vector<std::pair<int, int>> stack = {{0, nb - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (lo > hi) continue;
    const int mid = (lo + hi) / 2;
    order.push_back(mid);
    stack.push_back({mid + 1, hi});
    stack.push_back({lo, mid - 1});
  }

  for (int b : order) {
    const double target = static_cast<double>(b + 1) / states;
    double lo = -300.0, hi = 650.0;
    double mid = 0.0, frac = 0.0;
    while (hi - lo >= 1.0) {
      mid = 0.5 * (lo + hi);
      frac = block.fraction_below(wordline, mid);
      if (std::abs(frac - target) <= tolerance) break;
      if (frac < target) lo = mid;
      else hi = mid;
    }
    if (std::abs(frac - target) > 3.0 * tolerance)
      throw DisparityError("disparity search: target ratio unreachable (unscrambled data?)");
    found[static_cast<std::size_t>(b)] = mid;
  }
  // Guard strict ascent against sampling jitter on tiny pages.
  for (int b = 1; b < nb; ++b)
    found[static_cast<std::size_t>(b)] =
        std::max(found[static_cast<std::size_t>(b)], found[static_cast<std::size_t>(b - 1)] + 0.5);
  return ReadReferenceSet(mode, std::move(found));
}

namespace {

// Corrected-error count of one page at the given references; a decode
// failure is treated as an uncountable (infinite) error count.
long page_error_count(FlashBlock& block, const PageAddr& addr, const PageCodec& codec,
                      const ReadReferenceSet& refs, int& reads) {
  ++reads;
  const PageRead r = block.read_page(addr, refs);
  const auto d = codec.decode_page(r.bits);
  if (!d.ok) return std::numeric_limits<long>::max();
  return d.corrected_bits;
}

}  // namespace

VoptResult sampling_vopt_discovery(FlashBlock& block, const PageCodec& codec,
                                   BlockVoltageState& state, double step) {
  const auto last = block.last_programmed_page();
  if (!last || !block.wordline_fully_programmed(last->wordline))
    throw std::invalid_argument("vopt discovery: block has no fully-programmed sampling page");
  const int w = last->wordline;
  int reads = 0;

  // V_initial must give a countable error figure; otherwise approximate via
  // disparity first.
  bool countable = true;
  for (PageType pt : page_types(block.config().mode)) {
    if (page_error_count(block, {w, pt}, codec, state.v_initial, reads) ==
        std::numeric_limits<long>::max()) {
      countable = false;
      break;
    }
  }
  if (!countable) {
    state.v_initial = disparity_vref_search(block, w);
    for (PageType pt : page_types(block.config().mode)) {
      if (page_error_count(block, {w, pt}, codec, state.v_initial, reads) ==
          std::numeric_limits<long>::max())
        throw DisparityError("vopt discovery: errors uncountable even after disparity recovery");
    }
  }

  std::vector<Voltage> refs = state.v_initial.all();
  const CellMode mode = block.config().mode;
  for (PageType pt : page_types(mode)) {
    for (int b : state.v_initial.page_boundaries(pt)) {
      auto nerr = [&](double v) {
        std::vector<Voltage> probe = refs;
        probe[static_cast<std::size_t>(b)] = v;
        for (int i = 1; i < static_cast<int>(probe.size()); ++i)
          if (probe[static_cast<std::size_t>(i)] <= probe[static_cast<std::size_t>(i - 1)])
            return std::numeric_limits<long>::max();
        return page_error_count(block, {w, pt}, codec,
                                ReadReferenceSet(mode, probe), reads);
      };
      double v_best = refs[static_cast<std::size_t>(b)];
      long n_best = nerr(v_best);
      // Retention pulls optima down, so descend first; ties keep moving.
      for (int guard = 0; guard < 200; ++guard) {
        const long n = nerr(v_best - step);
        if (n <= n_best) {
          v_best -= step;
          n_best = n;
        } else {
          break;
        }
      }
      // Then probe upward, accepting only strict improvements.
      for (int guard = 0; guard < 200; ++guard) {
        const long n = nerr(v_best + step);
        if (n < n_best) {
          v_best += step;
          n_best = n;
        } else {
          break;
        }
      }
      refs[static_cast<std::size_t>(b)] = v_best;
    }
  }

  VoptResult out{ReadReferenceSet(mode, refs), reads, 0};
  long total = 0;
  for (PageType pt : page_types(mode)) {
    const long n = page_error_count(block, {w, pt}, codec, out.refs, reads);
    if (n != std::numeric_limits<long>::max()) total += n;
  }
  out.final_error_count = static_cast<int>(total);
  out.probe_reads = reads;
  state.v_initial = out.refs;
  state.last_optimized_at = block.now();
  return out;
}

NacOutcome nac_correct(FlashBlock& block, const PageAddr& addr, const PageCodec& codec,
                       const ReadReferenceSet& refs) {
  NacOutcome out;
  const int w = addr.wordline;
  const int wn = w + 1;  // programmed after the victim: the interfering line
  if (wn >= block.wordlines() || !block.wordline_fully_programmed(wn)) {
    out.neighbor_unreadable = true;
    return out;
  }

  const CellMode mode = block.config().mode;
  const GrayMap gray(mode);
  const int B = block.bitlines();

  // Classify neighbor cells by state from their page reads.
  std::vector<unsigned> ncode(static_cast<std::size_t>(B), 0);
  for (PageType pt : page_types(mode)) {
    const PageRead r = block.read_page({wn, pt}, refs);
    for (int b = 0; b < B; ++b)
      ncode[static_cast<std::size_t>(b)] |=
          static_cast<unsigned>(r.bits[static_cast<std::size_t>(b)] & 1) << gray.bit_pos(pt);
  }
  std::vector<int> nstate(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) nstate[static_cast<std::size_t>(b)] = gray.state_of(ncode[static_cast<std::size_t>(b)]);

  const DistributionSet base = block.baseline_distribution();
  const double k_wl = block.config().coupling.wordline;

  PageRead first = block.read_page(addr, refs);
  std::vector<std::uint8_t> merged = first.bits;

  for (int cls = 0; cls < state_count(mode); ++cls) {
    ++out.classes_tried;
    if (cls > 0) {
      // Compensate for the program shift this neighbor class caused.
      const double dv = k_wl * (base.states[static_cast<std::size_t>(cls)].mean -
                                base.states[0].mean);
      std::vector<Voltage> v = refs.all();
      for (auto& x : v) x += dv;
      const ReadReferenceSet shifted(mode, std::move(v));
      const PageRead rr = block.read_page(addr, shifted);
      for (int b = 0; b < B; ++b)
        if (nstate[static_cast<std::size_t>(b)] == cls)
          merged[static_cast<std::size_t>(b)] = rr.bits[static_cast<std::size_t>(b)];
    }
    const auto d = codec.decode_page(merged);
    if (d.ok) {
      out.ok = true;
      out.data = d.data;
      return out;
    }
  }
  return out;
}

double adaptive_refresh_interval(long pe_cycles, double temperature_k,
                                 const RefreshPolicy& policy) {
  double base = policy.beyond_interval_s;
  for (const auto& [limit, interval] : policy.adaptive) {
    if (pe_cycles < limit) {
      base = interval;
      break;
    }
  }
  // Arrhenius acceleration relative to the calibration temperature.
  constexpr double k_ev = 8.617333262e-5;
  const double af = std::exp(policy.arrhenius_ea_ev / k_ev *
                             (1.0 / policy.calibration_temp_k - 1.0 / temperature_k));
  return base / af;
}

RefreshOutcome refresh_block(FlashBlock& block, const RefreshPolicy& policy,
                             const PageCodec& codec, const ReadReferenceSet& refs,
                             FlashBlock* free_block) {
  RefreshOutcome out;
  const CellMode mode = block.config().mode;
  const GrayMap gray(mode);
  const int B = block.bitlines();
  const auto pages = page_types(mode);

  std::vector<int> full_wordlines;
  for (int w = 0; w < block.wordlines(); ++w)
    if (block.wordline_fully_programmed(w)) full_wordlines.push_back(w);
  if (full_wordlines.empty()) return out;

  if (policy.kind == RefreshPolicy::Kind::ReadReclaim) {
    long reads = 0;
    for (int w = 0; w < block.wordlines(); ++w)
      reads = std::max(reads, block.wordline_disturbs(w));
    if (reads <= policy.read_reclaim_threshold) return out;
  }

  // Read and correct everything up front; refresh decisions and rewrites
  // both consume the corrected images.
  struct WordlineImage {
    int w;
    std::vector<std::vector<std::uint8_t>> corrected_pages;  // encoded bits
    std::vector<unsigned> read_code, corrected_code;
  };
  std::vector<WordlineImage> images;
  for (int w : full_wordlines) {
    WordlineImage img;
    img.w = w;
    img.read_code.assign(static_cast<std::size_t>(B), 0);
    img.corrected_code.assign(static_cast<std::size_t>(B), 0);
    for (PageType pt : pages) {
      const PageRead r = block.read_page({w, pt}, refs);
      const auto d = codec.decode_page(r.bits);
      std::vector<std::uint8_t> corrected =
          d.ok ? codec.encode_page(d.data) : r.bits;
      if (!d.ok) ++out.uncorrectable_pages;
      for (int b = 0; b < B; ++b) {
        img.read_code[static_cast<std::size_t>(b)] |=
            static_cast<unsigned>(r.bits[static_cast<std::size_t>(b)] & 1) << gray.bit_pos(pt);
        img.corrected_code[static_cast<std::size_t>(b)] |=
            static_cast<unsigned>(corrected[static_cast<std::size_t>(b)] & 1)
            << gray.bit_pos(pt);
      }
      img.corrected_pages.push_back(std::move(corrected));
    }
    for (int b = 0; b < B; ++b) {
      const int rs = gray.state_of(img.read_code[static_cast<std::size_t>(b)]);
      const int cs = gray.state_of(img.corrected_code[static_cast<std::size_t>(b)]);
      if (rs > cs) ++out.right_shift_errors;
    }
    images.push_back(std::move(img));
  }

  RefreshPolicy::Kind kind = policy.kind;
  if (kind == RefreshPolicy::Kind::Hybrid)
    kind = (out.right_shift_errors <= policy.hybrid_right_shift_threshold)
               ? RefreshPolicy::Kind::InPlace
               : RefreshPolicy::Kind::Remapping;

  if (kind == RefreshPolicy::Kind::InPlace) {
    const DistributionSet base = block.baseline_distribution();
    for (const auto& img : images) {
      for (int b = 0; b < B; ++b) {
        const int s = gray.state_of(img.corrected_code[static_cast<std::size_t>(b)]);
        if (s == 0) continue;  // V-ISPP cannot pull drifted ER cells back down
        const double verify = base.states[static_cast<std::size_t>(s)].mean -
                              policy.verify_margin_sigma *
                                  base.states[static_cast<std::size_t>(s)].stddev;
        if (block.vispp_raise_cell(img.w, b, s, verify, policy.vispp_step) > 0.0)
          ++out.cells_raised;
      }
      block.rebase_wordline(img.w);
    }
    out.action = RefreshOutcome::Action::InPlace;
    return out;
  }

  // Remapping path (also read reclaim past the threshold).
  if (free_block == nullptr) {
    out.action = RefreshOutcome::Action::Deferred;
    return out;
  }
  for (const auto& img : images) {
    for (std::size_t p = 0; p < pages.size(); ++p) {
      const PageAddr dst =
          free_block->program_order()[static_cast<std::size_t>(free_block->program_cursor())];
      free_block->program_page(dst, img.corrected_pages[p]);
      ++out.pages_rewritten;
    }
  }
  out.action = RefreshOutcome::Action::Remap;
  return out;
}

VpassResult tune_vpass(FlashBlock& block, int ecc_capability_bits, const PageCodec& codec,
                       const ReadReferenceSet& refs) {
  VpassResult out;
  int worst = 0;
  bool countable = true;
  for (int w = 0; w < block.wordlines() && countable; ++w) {
    if (!block.wordline_fully_programmed(w)) continue;
    for (PageType pt : page_types(block.config().mode)) {
      const PageRead r = block.read_page({w, pt}, refs);
      const auto d = codec.decode_page(r.bits);
      if (!d.ok) {
        countable = false;
        break;
      }
      worst = std::max(worst, d.corrected_bits);
    }
  }
  const int margin = countable ? ecc_capability_bits - worst : 0;
  out.margin_bits = std::max(0, margin);
  if (out.margin_bits == 0) {
    out.v_pass = kVoltageScaleMax;
    out.expected_pass_errors = 0.0;
    return out;
  }

  // Expected pass-through errors at voltage v: Gaussian upper tails of every
  // programmed wordline's current distribution.
  auto expected_above = [&](double v) {
    double e = 0.0;
    for (int w = 0; w < block.wordlines(); ++w) {
      if (!block.wordline_fully_programmed(w)) continue;
      const DistributionSet d = block.wordline_distribution(w);
      const double per_state = static_cast<double>(block.bitlines()) / d.state_count();
      for (const auto& s : d.states)
        e += per_state * (1.0 - norm_cdf((v - s.mean) / s.stddev));
    }
    return e;
  };

  double lo = 0.0, hi = kVoltageScaleMax;
  if (expected_above(hi) > out.margin_bits) {
    out.v_pass = kVoltageScaleMax;
    out.expected_pass_errors = expected_above(hi);
    return out;
  }
  for (int it = 0; it < 60 && hi - lo > 0.25; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_above(mid) <= out.margin_bits) hi = mid;
    else lo = mid;
  }
  out.v_pass = hi;
  out.expected_pass_errors = expected_above(hi);
  return out;
}

void EccEngineSet::validate() const {
  if (coding_rates.size() < 2 || thresholds.size() != coding_rates.size() - 1)
    throw std::invalid_argument("EccEngineSet: need n engines and n-1 thresholds");
  for (std::size_t i = 1; i < coding_rates.size(); ++i)
    if (coding_rates[i] >= coding_rates[i - 1])
      throw std::invalid_argument("EccEngineSet: coding rates must strictly decrease");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (thresholds[i] <= thresholds[i - 1])
      throw std::invalid_argument("EccEngineSet: thresholds must strictly increase");
}

MultirateDecision multirate_select(double rber_measured, const EccEngineSet& engines,
                                   int current_index) {
  engines.validate();
  MultirateDecision d;
  int idx = -1;
  for (std::size_t i = 0; i < engines.thresholds.size(); ++i) {
    if (engines.thresholds[i] > rber_measured) {
      idx = static_cast<int>(i);
      break;
    }
  }
  if (idx < 0) {
    d.engine_index = engines.engines() - 1;
    d.end_of_life = true;
  } else {
    d.engine_index = idx;
  }
  d.engine_index = std::max(d.engine_index, current_index);  // one-way ratchet
  return d;
}

void downgrade_block(FlashBlock& block) {
  block.set_mode(CellMode::TLC_DOWNGRADED, ProgramMode::TwoStep, SequenceMode::ShadowMlc);
}

std::vector<std::uint32_t> warm_hot_pages(const std::vector<std::uint64_t>& write_counts,
                                          const WarmConfig& cfg) {
  const std::size_t n = write_counts.size();
  if (n == 0) return {};
  const double total =
      std::accumulate(write_counts.begin(), write_counts.end(), 0.0);
  if (total <= 0.0) return {};
  const double mean = total / static_cast<double>(n);
  std::vector<std::uint32_t> candidates;
  for (std::size_t p = 0; p < n; ++p)
    if (static_cast<double>(write_counts[p]) >= cfg.hot_multiplier * mean)
      candidates.push_back(static_cast<std::uint32_t>(p));
  std::sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (write_counts[a] != write_counts[b]) return write_counts[a] > write_counts[b];
    return a < b;
  });
  const std::size_t cap = static_cast<std::size_t>(
      std::floor(cfg.hot_capacity_fraction * static_cast<double>(n)));
  if (candidates.size() > cap) candidates.resize(cap);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

}  // namespace flashsim
