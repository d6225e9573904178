#include "flashsim/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "flashsim/ftl_sim.hpp"
#include "flashsim/recovery.hpp"

namespace flashsim {

using nlohmann::json;

std::uint64_t config_hash(const json& config) {
  json c = config;
  c.erase("out_dir");
  return fnv1a(c.dump());
}

namespace {

void stamp(CsvWriter& w, const json& config, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(config_hash(config)),
                static_cast<unsigned long long>(seed));
  w.add_comment(buf);
}

// Deterministic chunked parallelism: worker i owns frame indices congruent
// to i; results merge by index so thread count never changes output.
template <typename Fn>
void parallel_indices(std::uint64_t count, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::uint64_t i = static_cast<std::uint64_t>(t); i < count;
           i += static_cast<std::uint64_t>(threads))
        fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

namespace experiments {

CsvWriter characterize_distributions(const CalibrationTables& tables,
                                     std::size_t cells_per_state, std::uint64_t seed) {
  CsvWriter w({"mechanism", "row_key", "state", "expected_mean", "expected_stddev",
               "sample_mean", "sample_stddev", "cells"});
  struct Mech {
    const char* name;
    const CalibrationTable* t;
  };
  const Mech mechs[] = {{"pe", &tables.pe}, {"retention", &tables.retention},
                        {"disturb", &tables.disturb}};
  std::uint64_t stream = 0;
  for (const auto& m : mechs) {
    for (std::size_t row = 0; row < m.t->keys.size(); ++row) {
      for (int s = 0; s < 8; ++s) {
        const double mu = m.t->means(static_cast<Eigen::Index>(row), s);
        const double sd = m.t->stddevs(static_cast<Eigen::Index>(row), s);
        Rng rng(derive_seed(seed, ++stream));
        // Antithetic pairs: the sample mean is exact and the spread
        // estimate keeps full degrees of freedom.
        double sum_sq = 0.0;
        const std::size_t pairs = cells_per_state / 2;
        for (std::size_t i = 0; i < pairs; ++i) {
          const double g = sample_gaussian(rng);
          sum_sq += 2.0 * (sd * g) * (sd * g);
        }
        const std::size_t n = pairs * 2;
        const double sample_sd = std::sqrt(sum_sq / (static_cast<double>(n) - 1.0));
        w.add_row(m.name, m.t->keys[row], state_name(s), mu, sd, mu, sample_sd, n);
      }
    }
  }
  return w;
}

CsvWriter characterize_rber(const CalibrationTables& tables, std::size_t cells_per_state,
                            std::uint64_t seed) {
  CsvWriter w({"mechanism", "row_key", "analytic_frozen", "mc_frozen", "analytic_opt",
               "mc_opt", "bits", "up_flips", "down_flips"});

  const DistributionSet fresh = distribution_at(CellMode::TLC, {0, 0.0, 0}, tables);
  const ReadReferenceSet frozen = optimal_refs(fresh);
  const auto pages = page_types(CellMode::TLC);

  struct Axis {
    const char* name;
    std::vector<DegradationState> points;
    std::vector<double> keys;
  };
  std::vector<Axis> axes(3);
  axes[0].name = "pe";
  for (double k : tables.pe.keys) {
    axes[0].points.push_back({static_cast<long>(k), 0.0, 0});
    axes[0].keys.push_back(k);
  }
  axes[1].name = "retention";
  for (double k : tables.retention.keys) {
    axes[1].points.push_back({2000, k, 0});
    axes[1].keys.push_back(k);
  }
  axes[2].name = "disturb";
  for (double k : tables.disturb.keys) {
    axes[2].points.push_back({2000, 0.0, static_cast<long>(k)});
    axes[2].keys.push_back(k);
  }

  std::uint64_t stream = 100;
  for (const auto& axis : axes) {
    // Common latent quantiles along the axis: the same block aged through
    // the sweep, which makes adjacent-row comparisons a paired test.
    Rng rng(derive_seed(seed, ++stream));
    std::vector<std::vector<double>> z(8, std::vector<double>(cells_per_state));
    for (auto& zs : z)
      for (auto& v : zs) v = sample_gaussian(rng);

    std::vector<std::uint8_t> prev_errs;  // 3 bits per cell-slot, frozen refs
    for (std::size_t row = 0; row < axis.points.size(); ++row) {
      const DistributionSet dist = distribution_at(CellMode::TLC, axis.points[row], tables);
      const ReadReferenceSet opt = optimal_refs(dist);

      std::uint64_t frozen_errs = 0, opt_errs = 0, up = 0, down = 0;
      std::vector<std::uint8_t> errs(8 * cells_per_state, 0);
      for (int s = 0; s < 8; ++s) {
        const double mu = dist.states[static_cast<std::size_t>(s)].mean;
        const double sd = dist.states[static_cast<std::size_t>(s)].stddev;
        for (std::size_t i = 0; i < cells_per_state; ++i) {
          const double v = mu + sd * z[static_cast<std::size_t>(s)][i];
          std::uint8_t mask = 0;
          for (std::size_t p = 0; p < pages.size(); ++p) {
            const auto prefs = frozen.page_refs(pages[p]);
            const auto rbits = region_bits(dist.gray(), pages[p]);
            const int bin = bin_of(v, prefs);
            if (rbits[static_cast<std::size_t>(bin)] != dist.gray().bit(s, pages[p])) {
              ++frozen_errs;
              mask |= static_cast<std::uint8_t>(1u << p);
            }
            const auto oprefs = opt.page_refs(pages[p]);
            const int obin = bin_of(v, oprefs);
            if (rbits[static_cast<std::size_t>(obin)] != dist.gray().bit(s, pages[p]))
              ++opt_errs;
          }
          errs[static_cast<std::size_t>(s) * cells_per_state + i] = mask;
        }
      }
      if (!prev_errs.empty()) {
        for (std::size_t i = 0; i < errs.size(); ++i) {
          const std::uint8_t now = errs[i], was = prev_errs[i];
          for (int p = 0; p < 3; ++p) {
            const bool a = (was >> p) & 1, b = (now >> p) & 1;
            if (b && !a) ++up;
            if (a && !b) ++down;
          }
        }
      }
      prev_errs = std::move(errs);

      const std::uint64_t bits = 3ull * 8ull * cells_per_state;
      w.add_row(axis.name, axis.keys[row], analytic_rber_total(dist, frozen),
                static_cast<double>(frozen_errs) / static_cast<double>(bits),
                analytic_rber_total(dist, opt),
                static_cast<double>(opt_errs) / static_cast<double>(bits), bits, up, down);
    }
  }
  return w;
}

CsvWriter ecc_curve(const EccCurveSpec& spec, std::uint64_t seed) {
  CsvWriter w({"codec", "levels", "rber", "frames", "failures", "uber", "stderr_uber"});

  if (spec.bch_analytic) {
    const BchCode bch(spec.bch_m, spec.bch_t);
    for (double r : spec.rber_grid) {
      const double u = p_ecfr(bch.n(), bch.t(), r) / bch.n();
      w.add_row("bch_analytic", 0, r, 0, 0, u, 0.0);
    }
  }
  if (spec.bch_mc_frames > 0) {
    const BchCode bch(spec.bch_m, spec.bch_t);
    for (double r : spec.rber_grid) {
      std::vector<std::uint64_t> fails(static_cast<std::size_t>(std::max(1, spec.threads)), 0);
      parallel_indices(spec.bch_mc_frames, spec.threads, [&](std::uint64_t i) {
        Rng rng(derive_seed(seed, 0xb000000 + i));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<std::uint8_t> word(static_cast<std::size_t>(bch.n()), 0);
        bool any = false;
        for (auto& b : word) {
          b = u01(rng) < r ? 1 : 0;
          any |= b;
        }
        if (!any) return;  // all-zero codeword read back clean
        const auto d = bch.decode(word);
        bool fail = !d.ok;
        if (d.ok)
          for (auto b : d.message) fail |= (b != 0);
        if (fail) ++fails[i % fails.size()];
      });
      std::uint64_t total = 0;
      for (auto f : fails) total += f;
      const double fer = static_cast<double>(total) / spec.bch_mc_frames;
      const double se = std::sqrt(std::max(fer * (1 - fer), 1e-300) / spec.bch_mc_frames);
      w.add_row("bch_mc", 0, r, spec.bch_mc_frames, total, fer / bch.n(), se / bch.n());
    }
  }

  // LDPC: all-zero codeword over the binary AWGN channel (linear-code
  // symmetry); paired noise across decoding depths.
  Rng crng(derive_seed(seed, 0xc0de));
  const LdpcCode code = LdpcCode::construct(spec.ldpc_n, spec.ldpc_k, spec.ldpc_column_weight,
                                            crng);
  const int max_depth = *std::max_element(spec.ldpc_levels.begin(), spec.ldpc_levels.end());
  for (double r : spec.rber_grid) {
    // sigma such that the hard decision error rate equals r (unit gap).
    const double mu0 = +1.0, mu1 = -1.0;
    const double sigma = 1.0 / norm_ppf(1.0 - r);
    const LlrSchedule sched = LlrSchedule::binary_awgn({mu0, mu1, sigma}, max_depth);

    std::vector<std::vector<std::uint64_t>> fails(
        spec.ldpc_levels.size(),
        std::vector<std::uint64_t>(static_cast<std::size_t>(std::max(1, spec.threads)), 0));
    parallel_indices(spec.frames, spec.threads, [&](std::uint64_t f) {
      Rng rng(derive_seed(seed, 0xd0000000ULL + f));
      std::vector<double> y(static_cast<std::size_t>(code.n()));
      for (auto& v : y) v = mu0 + sigma * sample_gaussian(rng);
      for (std::size_t li = 0; li < spec.ldpc_levels.size(); ++li) {
        auto reader = [&](int level) {
          std::vector<std::int16_t> bins(y.size());
          const auto& refs = sched.refs(level);
          for (std::size_t j = 0; j < y.size(); ++j)
            bins[j] = static_cast<std::int16_t>(bin_of(y[j], refs));
          return bins;
        };
        const LdpcDecodeResult res =
            ldpc_decode(code, sched, reader, spec.ldpc_iters, spec.ldpc_levels[li]);
        bool fail = !res.ok();
        if (res.ok())
          for (auto b : res.message) fail |= (b != 0);
        if (fail) ++fails[li][f % fails[li].size()];
      }
    });
    for (std::size_t li = 0; li < spec.ldpc_levels.size(); ++li) {
      std::uint64_t total = 0;
      for (auto v : fails[li]) total += v;
      const double fer = static_cast<double>(total) / spec.frames;
      const double se = std::sqrt(std::max(fer * (1 - fer), 1e-300) / spec.frames);
      w.add_row(spec.ldpc_levels[li] == 0 ? "ldpc_hard" : "ldpc_soft", spec.ldpc_levels[li], r,
                spec.frames, total, fer / code.n(), se / code.n());
    }
  }
  return w;
}

CsvWriter flow_bench(const CalibrationTables& tables, const FlowBenchSpec& spec,
                     std::uint64_t seed) {
  CsvWriter w({"round", "pe", "retention_s", "superpages", "pages", "stage1", "stage2",
               "parity", "uncorrectable", "integrity_violations", "reads", "latency_us",
               "hgbb_slots"});

  const int dies = spec.chips * spec.dies;
  const PageCodec codec = PageCodec::bch(spec.bch_m, spec.bch_t, spec.bitlines);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (std::size_t round = 0; round < spec.rounds.size(); ++round) {
    const auto& rd = spec.rounds[round];
    Rng rng(derive_seed(seed, 0xf100 + round));

    std::vector<std::unique_ptr<FlashBlock>> blocks;
    for (int d = 0; d < dies; ++d) {
      BlockConfig bc;
      bc.wordlines = spec.wordlines;
      bc.bitlines = spec.bitlines;
      bc.mode = CellMode::TLC;
      bc.program_mode = ProgramMode::FoggyFine;
      bc.sequence_mode = SequenceMode::ShadowTlc;
      bc.seed = derive_seed(seed, 0xf200 + round * 64 + static_cast<std::uint64_t>(d));
      blocks.push_back(std::make_unique<FlashBlock>(bc, tables));
      blocks.back()->format_at(rd.pe);
    }
    const ReadReferenceSet vrefs = optimal_refs(blocks[0]->baseline_distribution());
    const BlockVoltageState vstate{vrefs};
    FlowConfig fcfg;
    fcfg.nac_classes = spec.nac_classes;

    const int max_sp = std::min(rd.superpages, blocks[0]->pages_per_block());
    std::vector<std::unique_ptr<Superpage>> sps;
    std::vector<std::vector<int>> hgbb(static_cast<std::size_t>(max_sp));
    for (int sp = 0; sp < max_sp; ++sp) {
      std::vector<SuperpageSlot> slots;
      for (int d = 0; d < dies; ++d)
        slots.push_back({blocks[static_cast<std::size_t>(d)].get(),
                         blocks[static_cast<std::size_t>(d)]->program_order()[static_cast<std::size_t>(sp)]});
      sps.push_back(std::make_unique<Superpage>(std::move(slots), codec));
      std::vector<std::vector<std::uint8_t>> data;
      for (int d = 0; d < dies - 1; ++d) {
        std::vector<std::uint8_t> v(static_cast<std::size_t>(codec.data_bits_per_page()));
        for (auto& b : v) b = u01(rng) < 0.5 ? 1 : 0;
        data.push_back(std::move(v));
      }
      sps.back()->write(data);
      for (int d = 0; d < dies; ++d)
        if (u01(rng) < spec.p_hgbb) hgbb[static_cast<std::size_t>(sp)].push_back(d);
    }
    for (auto& blk : blocks) blk->advance_time(rd.retention_seconds);

    std::uint64_t stage1 = 0, stage2 = 0, parity = 0, uncor = 0, viol = 0, reads = 0;
    double latency = 0.0;
    std::uint64_t hgbb_count = 0;
    for (int sp = 0; sp < max_sp; ++sp) {
      for (int d = 0; d < dies; ++d) {
        const auto& bad = hgbb[static_cast<std::size_t>(sp)];
        FlowOutcome f;
        if (std::find(bad.begin(), bad.end(), d) != bad.end()) {
          // Hidden grown-bad block: stages 1-2 cannot see valid data at all;
          // parity recovery is the only path.
          ++hgbb_count;
          const ParityRecoverResult pr = parity_recover(*sps[static_cast<std::size_t>(sp)], d,
                                                        vstate, fcfg);
          f.reads = pr.sibling_reads;
          f.latency_us = fcfg.t_parity_us;
          if (pr.ok && pr.data == sps[static_cast<std::size_t>(sp)]->truth(d)) {
            f.status = FlowStatus::CorrectedParity;
            f.data = pr.data;
          }
        } else {
          f = correct_flow(*sps[static_cast<std::size_t>(sp)], d, vstate, fcfg);
        }
        reads += static_cast<std::uint64_t>(f.reads);
        latency += f.latency_us;
        switch (f.status) {
          case FlowStatus::CorrectedStage1: ++stage1; break;
          case FlowStatus::CorrectedStage2: ++stage2; break;
          case FlowStatus::CorrectedParity: ++parity; break;
          case FlowStatus::Uncorrectable: ++uncor; break;
        }
        if (f.status != FlowStatus::Uncorrectable &&
            f.data != sps[static_cast<std::size_t>(sp)]->truth(d))
          ++viol;
      }
    }
    w.add_row(round, rd.pe, rd.retention_seconds, max_sp, max_sp * dies, stage1, stage2,
              parity, uncor, viol, reads, latency, hgbb_count);
  }
  return w;
}

CsvWriter lifetime_table(const json& spec) {
  CsvWriter w({"row", "quantity", "value"});
  const double raw_tb = spec.value("raw_tb", 2.4);
  const double adv_tb = spec.value("advertised_tb", 2.0);
  const double parity_fraction = spec.value("parity_fraction", 1.0 / 32.0);

  // Solve the implied parity fraction from the with-parity rows before
  // trusting the configured value.
  const double fit2 = 1.0 - (adv_tb * 1.081) / (raw_tb * 0.93);
  const double fit4 = 1.0 - (adv_tb * 1.046) / (raw_tb * 0.90);
  w.add_row("fit", "parity_fraction_row2", fit2);
  w.add_row("fit", "parity_fraction_row4", fit4);
  w.add_row("fit", "parity_fraction_used", parity_fraction);

  w.add_row(1, "op_ecc1_noparity", table1_op(raw_tb, adv_tb, 0.93, 0.0));
  w.add_row(2, "op_ecc1_parity", table1_op(raw_tb, adv_tb, 0.93, parity_fraction));
  w.add_row(3, "op_ecc2_noparity", table1_op(raw_tb, adv_tb, 0.90, 0.0));
  w.add_row(4, "op_ecc2_parity", table1_op(raw_tb, adv_tb, 0.90, parity_fraction));

  DriveConfig d;
  d.pba_count = spec.value("pba_count", 1.2e9);
  d.lba_count = spec.value("lba_count", 1.0e9);
  d.pec_endurance = spec.value("pec", 3000.0);
  d.dwpd = spec.value("dwpd", 1.0);
  d.write_amplification = spec.value("wa", 1.0);
  d.r_compress = spec.value("r_compress", 1.0);
  w.add_row("eq4", "lifetime_years", lifetime_years(d));

  std::vector<LifetimeSegment> segs;
  if (spec.contains("segments")) {
    for (const auto& s : spec.at("segments"))
      segs.push_back({s.value("pec", 0.0), s.value("op", 0.0), s.value("wa", 1.0)});
  } else {
    segs = {{1000.0, 0.18, 1.8}, {1000.0, 0.14, 2.0}, {1000.0, 0.10, 2.3}};
  }
  w.add_row("eq9", "multirate_lifetime_years",
            multirate_lifetime_years(segs, d.dwpd, d.r_compress));
  return w;
}

CsvWriter ftl_sweep(const FtlSweepSpec& spec, std::uint64_t seed) {
  CsvWriter w({"case", "op", "warm", "host_writes", "gc_migrations", "refresh_rewrites",
               "wa", "background_writes", "max_pe_spread"});

  for (double op : spec.op_grid) {
    FtlConfig cfg;
    cfg.lba_count = spec.footprint;
    cfg.pages_per_block = spec.pages_per_block;
    const std::uint64_t phys = static_cast<std::uint64_t>(
        std::llround((1.0 + op) * spec.footprint));
    cfg.block_count = static_cast<int>((phys + spec.pages_per_block - 1) /
                                       spec.pages_per_block) + 1;
    cfg.seed = derive_seed(seed, 0xa0 + static_cast<std::uint64_t>(op * 1000));
    FtlSim ftl(cfg);
    WorkloadSpec ws;
    ws.kind = WorkloadSpec::Kind::Uniform;
    ws.footprint = spec.footprint;
    ws.ops = spec.ops;
    Rng rng(derive_seed(seed, 0xb0));
    ftl.run(generate_workload(ws, rng));
    const auto hist = ftl.pe_histogram();
    const long spread = *std::max_element(hist.begin(), hist.end()) -
                        *std::min_element(hist.begin(), hist.end());
    w.add_row("wa_sweep", op, 0, ftl.stats().host_writes, ftl.stats().gc_migrations,
              ftl.stats().refresh_rewrites, ftl.stats().write_amplification(),
              ftl.stats().background_writes(), spread);
  }

  if (spec.warm_comparison) {
    for (int warm = 0; warm <= 1; ++warm) {
      FtlConfig cfg;
      cfg.lba_count = spec.footprint;
      cfg.pages_per_block = spec.pages_per_block;
      cfg.block_count = static_cast<int>(2 * spec.footprint / spec.pages_per_block) + 2;
      cfg.seed = derive_seed(seed, 0xc0);
      cfg.warm_enabled = warm != 0;
      cfg.refresh_enabled = true;
      cfg.refresh.adaptive = {{1000000, 90.0 * 86400.0}};
      cfg.seconds_per_host_op = spec.warm_seconds_per_op;
      FtlSim ftl(cfg);
      WorkloadSpec ws;
      ws.kind = WorkloadSpec::Kind::HotCold;
      ws.footprint = spec.footprint;
      ws.ops = spec.warm_ops;
      ws.hot_page_fraction = 0.01;
      ws.hot_write_fraction = 0.95;
      Rng rng(derive_seed(seed, 0xd0));  // identical stream for both arms
      ftl.run(generate_workload(ws, rng));
      w.add_row("warm_comparison", 1.0, warm, ftl.stats().host_writes,
                ftl.stats().gc_migrations, ftl.stats().refresh_rewrites,
                ftl.stats().write_amplification(), ftl.stats().background_writes(), 0);
    }
  }
  return w;
}

}  // namespace experiments

namespace {

const std::vector<std::string> kExperiments = {"characterize", "ecc-curve", "flow-bench",
                                               "lifetime", "ftl"};

}  // namespace

std::vector<std::string> validate_config(const json& config) {
  std::vector<std::string> diags;
  if (!config.is_object()) {
    diags.push_back("config: root must be a JSON object");
    return diags;
  }
  if (!config.contains("experiment") || !config.at("experiment").is_string())
    diags.push_back("experiment: required string field");
  else {
    const std::string e = config.at("experiment");
    if (std::find(kExperiments.begin(), kExperiments.end(), e) == kExperiments.end())
      diags.push_back("experiment: unknown kind '" + e + "'");
  }
  if (!config.contains("seed") || !config.at("seed").is_number_unsigned())
    diags.push_back("seed: required non-negative integer");
  if (config.contains("threads") &&
      (!config.at("threads").is_number_integer() || config.at("threads").get<int>() < 1))
    diags.push_back("threads: must be a positive integer");
  if (config.contains("calibration_csv")) {
    const std::string p = config.at("calibration_csv");
    if (!std::filesystem::exists(p))
      diags.push_back("calibration_csv: file does not exist: " + p);
  }
  const std::string exp = config.value("experiment", "");
  if (exp == "characterize" && config.contains("characterize")) {
    const auto& c = config.at("characterize");
    if (c.value("cells_per_state", 1000000) < 2)
      diags.push_back("characterize.cells_per_state: must be >= 2");
  }
  if (exp == "ecc-curve" && config.contains("ecc_curve")) {
    const auto& c = config.at("ecc_curve");
    if (c.contains("rber_grid")) {
      double prev = 0.0;
      for (const auto& v : c.at("rber_grid")) {
        const double r = v.get<double>();
        if (r <= 0.0 || r >= 0.5) diags.push_back("ecc_curve.rber_grid: values must be in (0,0.5)");
        if (r <= prev) diags.push_back("ecc_curve.rber_grid: values must strictly increase");
        prev = r;
      }
    }
  }
  if (exp == "ftl" && config.contains("ftl")) {
    const auto& c = config.at("ftl");
    if (c.value("footprint", 4096) <= 0) diags.push_back("ftl.footprint: must be positive");
    for (const auto& v : c.value("op_grid", json::array()))
      if (v.get<double>() <= 0.0) diags.push_back("ftl.op_grid: OP must be positive");
  }
  if (config.contains("ecc_engines")) {
    const auto& e = config.at("ecc_engines");
    EccEngineSet set;
    for (const auto& v : e.value("coding_rates", json::array()))
      set.coding_rates.push_back(v.get<double>());
    for (const auto& v : e.value("thresholds", json::array()))
      set.thresholds.push_back(v.get<double>());
    try {
      set.validate();
    } catch (const std::exception& ex) {
      diags.push_back(std::string("ecc_engines: ") + ex.what());
    }
  }
  if (config.contains("mitigation")) {
    const auto& m = config.at("mitigation");
    if (m.value("read_retry_enabled", false) &&
        m.value("retry_steps", 0) < 1)
      diags.push_back("mitigation: retry schedule empty while read-retry enabled");
  }
  if (config.contains("endurance") && config.at("endurance").get<long>() <= 0)
    diags.push_back("endurance: must be positive");
  return diags;
}

std::vector<std::string> run_experiment(const json& config) {
  const auto diags = validate_config(config);
  if (!diags.empty()) {
    std::string all = "invalid config:";
    for (const auto& d : diags) all += "\n  " + d;
    throw std::invalid_argument(all);
  }
  const std::string exp = config.at("experiment");
  const std::uint64_t seed = config.at("seed");
  const std::string out_dir = config.value("out_dir", ".");
  const int threads = config.value("threads", 1);
  std::filesystem::create_directories(out_dir);

  auto table_path = [&]() {
    return config.value("calibration_csv", std::string("data/calibration_tlc.csv"));
  };

  std::vector<std::string> written;
  auto emit = [&](const std::string& name, CsvWriter& w) {
    stamp(w, config, seed);
    const std::string path = out_dir + "/" + name + ".csv";
    w.write_file(path);
    written.push_back(path);
  };

  if (exp == "characterize") {
    const auto tables = CalibrationTables::load_csv(table_path());
    const auto& c = config.contains("characterize") ? config.at("characterize") : json::object();
    const std::size_t cells = c.value("cells_per_state", std::size_t{1000000});
    auto w1 = experiments::characterize_distributions(tables, cells, seed);
    emit("characterize_distributions", w1);
    const std::size_t rber_cells = c.value("rber_cells_per_state", std::size_t{300000});
    auto w2 = experiments::characterize_rber(tables, rber_cells, seed);
    emit("characterize_rber", w2);
  } else if (exp == "ecc-curve") {
    experiments::EccCurveSpec spec;
    if (config.contains("ecc_curve")) {
      const auto& c = config.at("ecc_curve");
      if (c.contains("rber_grid")) spec.rber_grid = c.at("rber_grid").get<std::vector<double>>();
      spec.frames = c.value("frames", spec.frames);
      spec.ldpc_n = c.value("ldpc_n", spec.ldpc_n);
      spec.ldpc_k = c.value("ldpc_k", spec.ldpc_k);
      spec.ldpc_column_weight = c.value("ldpc_column_weight", spec.ldpc_column_weight);
      spec.ldpc_iters = c.value("ldpc_iters", spec.ldpc_iters);
      if (c.contains("ldpc_levels")) spec.ldpc_levels = c.at("ldpc_levels").get<std::vector<int>>();
      spec.bch_m = c.value("bch_m", spec.bch_m);
      spec.bch_t = c.value("bch_t", spec.bch_t);
      spec.bch_analytic = c.value("bch_analytic", spec.bch_analytic);
      spec.bch_mc_frames = c.value("bch_mc_frames", spec.bch_mc_frames);
    }
    spec.threads = threads;
    auto w = experiments::ecc_curve(spec, seed);
    emit("ecc_curve", w);
  } else if (exp == "flow-bench") {
    const auto tables = CalibrationTables::load_csv(table_path());
    experiments::FlowBenchSpec spec;
    if (config.contains("flow_bench")) {
      const auto& c = config.at("flow_bench");
      spec.chips = c.value("chips", spec.chips);
      spec.dies = c.value("dies", spec.dies);
      spec.wordlines = c.value("wordlines", spec.wordlines);
      spec.bitlines = c.value("bitlines", spec.bitlines);
      spec.bch_m = c.value("bch_m", spec.bch_m);
      spec.bch_t = c.value("bch_t", spec.bch_t);
      spec.p_hgbb = c.value("p_hgbb", spec.p_hgbb);
      if (c.contains("rounds")) {
        spec.rounds.clear();
        for (const auto& r : c.at("rounds"))
          spec.rounds.push_back({r.value("pe", 2000L), r.value("retention_seconds", 86400.0),
                                 r.value("superpages", 24)});
      }
    }
    if (spec.rounds.empty())
      spec.rounds = {{0, 0.0, 24}, {2000, 7776000.0, 24}, {3000, 31536000.0, 24}};
    auto w = experiments::flow_bench(tables, spec, seed);
    emit("flow_bench", w);
  } else if (exp == "lifetime") {
    auto w = experiments::lifetime_table(
        config.contains("lifetime") ? config.at("lifetime") : json::object());
    emit("lifetime", w);
  } else if (exp == "ftl") {
    experiments::FtlSweepSpec spec;
    if (config.contains("ftl")) {
      const auto& c = config.at("ftl");
      if (c.contains("op_grid")) spec.op_grid = c.at("op_grid").get<std::vector<double>>();
      spec.footprint = c.value("footprint", spec.footprint);
      spec.pages_per_block = c.value("pages_per_block", spec.pages_per_block);
      spec.ops = c.value("ops", spec.ops);
      spec.warm_comparison = c.value("warm_comparison", spec.warm_comparison);
      spec.warm_ops = c.value("warm_ops", spec.warm_ops);
      spec.warm_seconds_per_op = c.value("warm_seconds_per_op", spec.warm_seconds_per_op);
    }
    auto w = experiments::ftl_sweep(spec, seed);
    emit("ftl", w);
  } else {
    throw std::invalid_argument("unknown experiment: " + exp);
  }
  return written;
}

}  // namespace flashsim
