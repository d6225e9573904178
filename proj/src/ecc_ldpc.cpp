#include "flashsim/ecc_ldpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace flashsim {

namespace {

inline std::uint64_t pair_key(int a, int b, int m) {
  if (a > b) std::swap(a, b);
  return static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(m) +
         static_cast<std::uint64_t>(b);
}

}  // namespace

void LdpcCode::finalize_adjacency() {
  bit_checks_.assign(static_cast<std::size_t>(n_), {});
  for (int i = 0; i < checks(); ++i)
    for (int j : check_bits_[static_cast<std::size_t>(i)])
      bit_checks_[static_cast<std::size_t>(j)].push_back(i);
}

bool LdpcCode::four_cycle_free() const {
  std::set<std::uint64_t> seen;
  for (const auto& row : check_bits_) {
    for (std::size_t a = 0; a < row.size(); ++a)
      for (std::size_t b = a + 1; b < row.size(); ++b) {
        const std::uint64_t key = pair_key(row[a], row[b], n_);
        if (!seen.insert(key).second) return false;
      }
  }
  return true;
}

LdpcCode LdpcCode::construct(int n, int k, int column_weight, Rng& rng) {
  if (n <= k || k <= 0 || column_weight < 2)
    throw std::invalid_argument("LdpcCode::construct: infeasible parameters");
  const int m = n - k;
  if (column_weight > m)
    throw std::invalid_argument("LdpcCode::construct: column weight exceeds check count");

  for (int attempt = 0; attempt < 100; ++attempt) {
    LdpcCode code;
    code.n_ = n;
    code.k_ = k;
    code.check_bits_.assign(static_cast<std::size_t>(m), {});
    std::set<std::uint64_t> pairs;
    std::vector<int> degree(static_cast<std::size_t>(m), 0);

    // Staircase parity section: column k+j checks j and j+1 (last column
    // only the final check).  Keeps the right block invertible and sparse.
    for (int j = 0; j < m; ++j) {
      code.check_bits_[static_cast<std::size_t>(j)].push_back(k + j);
      ++degree[static_cast<std::size_t>(j)];
      if (j + 1 < m) {
        code.check_bits_[static_cast<std::size_t>(j + 1)].push_back(k + j);
        ++degree[static_cast<std::size_t>(j + 1)];
        pairs.insert(pair_key(j, j + 1, m));
      }
    }

    const double target = static_cast<double>(k) * column_weight / m + 2.0;
    bool failed = false;
    for (int col = 0; col < k && !failed; ++col) {
      bool placed = false;
      for (int trial = 0; trial < 500 && !placed; ++trial) {
        // Weighted draw of column_weight distinct rows, lighter rows first.
        std::vector<int> rows;
        std::vector<double> w(static_cast<std::size_t>(m));
        for (int r = 0; r < m; ++r)
          w[static_cast<std::size_t>(r)] =
              std::max(0.05, target - degree[static_cast<std::size_t>(r)]);
        for (int pick = 0; pick < column_weight; ++pick) {
          double total = 0.0;
          for (int r = 0; r < m; ++r)
            if (std::find(rows.begin(), rows.end(), r) == rows.end())
              total += w[static_cast<std::size_t>(r)];
          double x = std::uniform_real_distribution<double>(0.0, total)(rng);
          int chosen = -1;
          for (int r = 0; r < m; ++r) {
            if (std::find(rows.begin(), rows.end(), r) != rows.end()) continue;
            x -= w[static_cast<std::size_t>(r)];
            if (x <= 0.0) {
              chosen = r;
              break;
            }
          }
          if (chosen < 0) chosen = m - 1;
          rows.push_back(chosen);
        }
        bool ok = true;
        for (std::size_t a = 0; a < rows.size() && ok; ++a)
          for (std::size_t b = a + 1; b < rows.size() && ok; ++b)
            if (pairs.count(pair_key(rows[a], rows[b], m))) ok = false;
        if (!ok) continue;
        for (std::size_t a = 0; a < rows.size(); ++a)
          for (std::size_t b = a + 1; b < rows.size(); ++b)
            pairs.insert(pair_key(rows[a], rows[b], m));
        for (int r : rows) {
          code.check_bits_[static_cast<std::size_t>(r)].push_back(col);
          ++degree[static_cast<std::size_t>(r)];
        }
        placed = true;
      }
      if (!placed) failed = true;
    }
    if (failed) continue;

    for (auto& row : code.check_bits_) std::sort(row.begin(), row.end());
    code.finalize_adjacency();
    code.derive_generator();
    return code;
  }
  throw std::runtime_error("LdpcCode::construct: failed after bounded retries");
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> LdpcCode::dense_h() const {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> H(checks(), n_);
  H.setZero();
  for (int i = 0; i < checks(); ++i)
    for (int j : check_bits_[static_cast<std::size_t>(i)]) H(i, j) = 1;
  return H;
}

void LdpcCode::derive_generator() {
  const int m = checks();
  const int words = (n_ + 63) / 64;
  std::vector<std::vector<std::uint64_t>> rows(
      static_cast<std::size_t>(m), std::vector<std::uint64_t>(static_cast<std::size_t>(words), 0));
  auto get = [&](int r, int c) {
    return (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c / 64)] >> (c % 64)) & 1u;
  };
  for (int i = 0; i < m; ++i)
    for (int j : check_bits_[static_cast<std::size_t>(i)])
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j / 64)] ^=
          (1ULL << (j % 64));

  // Reduce the right block to the identity; rows then read B^-1 * [A | I].
  for (int i = 0; i < m; ++i) {
    const int c = k_ + i;
    int pivot = -1;
    for (int r = i; r < m; ++r)
      if (get(r, c)) {
        pivot = r;
        break;
      }
    if (pivot < 0)
      throw std::runtime_error("LdpcCode: right block of H is singular");
    std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pivot)]);
    for (int r = 0; r < m; ++r) {
      if (r == i || !get(r, c)) continue;
      for (int wd = 0; wd < words; ++wd)
        rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(wd)] ^=
            rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(wd)];
    }
  }

  const int kwords = (k_ + 63) / 64;
  parity_rows_.assign(static_cast<std::size_t>(m),
                      std::vector<std::uint64_t>(static_cast<std::size_t>(kwords), 0));
  for (int i = 0; i < m; ++i)
    for (int wd = 0; wd < kwords; ++wd) {
      std::uint64_t word = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(wd)];
      if (wd == kwords - 1 && k_ % 64 != 0) word &= (1ULL << (k_ % 64)) - 1;
      parity_rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(wd)] = word;
    }
}

LdpcCode LdpcCode::from_parity_check(
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& H) {
  const int m = static_cast<int>(H.rows());
  const int n = static_cast<int>(H.cols());
  if (m <= 0 || n <= m) throw std::invalid_argument("from_parity_check: bad H shape");

  // Column-permute (if needed) so the right m x m block is invertible.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> W = H;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const int k = n - m;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> E = W;  // elimination copy
  for (int i = 0; i < m; ++i) {
    int pc = -1;
    // Prefer the natural pivot column; otherwise search the rest.
    for (int cand = k + i; pc < 0 && cand < n; ++cand) {
      for (int r = i; r < m; ++r)
        if (E(r, cand)) {
          pc = cand;
          break;
        }
    }
    for (int cand = 0; pc < 0 && cand < k + i; ++cand) {
      for (int r = i; r < m; ++r)
        if (E(r, cand)) {
          pc = cand;
          break;
        }
    }
    if (pc < 0) throw std::runtime_error("from_parity_check: H is not full rank");
    if (pc != k + i) {
      E.col(k + i).swap(E.col(pc));
      W.col(k + i).swap(W.col(pc));
      std::swap(perm[static_cast<std::size_t>(k + i)], perm[static_cast<std::size_t>(pc)]);
    }
    int pr = -1;
    for (int r = i; r < m; ++r)
      if (E(r, k + i)) {
        pr = r;
        break;
      }
    E.row(i).swap(E.row(pr));
    for (int r = 0; r < m; ++r) {
      if (r == i || !E(r, k + i)) continue;
      for (int c = 0; c < n; ++c) E(r, c) = E(r, c) ^ E(i, c);
    }
  }

  LdpcCode code;
  code.n_ = n;
  code.k_ = k;
  code.check_bits_.assign(static_cast<std::size_t>(m), {});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (W(i, j)) code.check_bits_[static_cast<std::size_t>(i)].push_back(j);
  code.finalize_adjacency();
  code.derive_generator();
  return code;
}

std::vector<std::uint8_t> LdpcCode::encode(const std::vector<std::uint8_t>& msg) const {
  if (static_cast<int>(msg.size()) != k_)
    throw std::invalid_argument("LdpcCode::encode: message length != k");
  const int kwords = (k_ + 63) / 64;
  std::vector<std::uint64_t> mw(static_cast<std::size_t>(kwords), 0);
  for (int i = 0; i < k_; ++i)
    if (msg[static_cast<std::size_t>(i)] & 1)
      mw[static_cast<std::size_t>(i / 64)] |= (1ULL << (i % 64));
  std::vector<std::uint8_t> cw(static_cast<std::size_t>(n_), 0);
  for (int i = 0; i < k_; ++i) cw[static_cast<std::size_t>(i)] = msg[static_cast<std::size_t>(i)] & 1;
  for (int p = 0; p < checks(); ++p) {
    std::uint64_t acc = 0;
    for (int wd = 0; wd < kwords; ++wd)
      acc ^= parity_rows_[static_cast<std::size_t>(p)][static_cast<std::size_t>(wd)] &
             mw[static_cast<std::size_t>(wd)];
    cw[static_cast<std::size_t>(k_ + p)] =
        static_cast<std::uint8_t>(__builtin_popcountll(acc) & 1);
  }
  return cw;
}

bool LdpcCode::syndrome_zero(const std::vector<std::uint8_t>& word) const {
  if (static_cast<int>(word.size()) != n_)
    throw std::invalid_argument("LdpcCode: word length != n");
  for (const auto& row : check_bits_) {
    int x = 0;
    for (int j : row) x ^= word[static_cast<std::size_t>(j)] & 1;
    if (x) return false;
  }
  return true;
}

void LdpcCode::dump_alist(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("dump_alist: cannot open " + path);
  const int m = checks();
  int max_col = 0, max_row = 0;
  for (const auto& v : bit_checks_) max_col = std::max(max_col, static_cast<int>(v.size()));
  for (const auto& v : check_bits_) max_row = std::max(max_row, static_cast<int>(v.size()));
  f << n_ << " " << m << "\n" << max_col << " " << max_row << "\n";
  for (int j = 0; j < n_; ++j)
    f << bit_checks_[static_cast<std::size_t>(j)].size() << (j + 1 < n_ ? " " : "\n");
  for (int i = 0; i < m; ++i)
    f << check_bits_[static_cast<std::size_t>(i)].size() << (i + 1 < m ? " " : "\n");
  for (int j = 0; j < n_; ++j) {
    for (int c = 0; c < max_col; ++c) {
      const auto& v = bit_checks_[static_cast<std::size_t>(j)];
      f << (c < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(c)] + 1 : 0)
        << (c + 1 < max_col ? " " : "\n");
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < max_row; ++c) {
      const auto& v = check_bits_[static_cast<std::size_t>(i)];
      f << (c < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(c)] + 1 : 0)
        << (c + 1 < max_row ? " " : "\n");
    }
  }
}

LdpcCode LdpcCode::load_alist(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_alist: cannot open " + path);
  int n, m, max_col, max_row;
  if (!(f >> n >> m >> max_col >> max_row))
    throw std::runtime_error("load_alist: malformed header");
  std::vector<int> col_deg(static_cast<std::size_t>(n)), row_deg(static_cast<std::size_t>(m));
  for (auto& d : col_deg) f >> d;
  for (auto& d : row_deg) f >> d;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> H(m, n);
  H.setZero();
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < max_col; ++c) {
      int r;
      f >> r;
      if (r > 0) H(r - 1, j) = 1;
    }
  if (!f) throw std::runtime_error("load_alist: truncated column section");
  return from_parity_check(H);
}

LlrSchedule LlrSchedule::binary_awgn(const AwgnLlrModel& model, int max_levels,
                                     double llr_saturation) {
  const double lo = std::min(model.mu0, model.mu1);
  const double hi = std::max(model.mu0, model.mu1);
  const double hard = 0.5 * (lo + hi);
  const double delta = (hi - lo) / 4.0;
  std::vector<std::vector<Voltage>> refs;
  std::vector<Voltage> cur = {hard};
  refs.push_back(cur);
  for (int level = 1; level <= max_levels; ++level) {
    // Alternating symmetric offsets: -d, +d, -2d, +2d, ...
    const int step = (level + 1) / 2;
    const double off = (level % 2 ? -delta : delta) * step;
    cur.push_back(hard + off);
    std::sort(cur.begin(), cur.end());
    refs.push_back(cur);
  }
  return from_refs(std::move(refs), model, llr_saturation);
}

LlrSchedule LlrSchedule::from_tables(std::vector<std::vector<Voltage>> refs_per_level,
                                     std::vector<std::vector<double>> llr_per_level) {
  if (refs_per_level.size() != llr_per_level.size())
    throw std::invalid_argument("LlrSchedule: level count mismatch");
  for (std::size_t l = 0; l < refs_per_level.size(); ++l)
    if (llr_per_level[l].size() != refs_per_level[l].size() + 1)
      throw std::invalid_argument("LlrSchedule: bins != refs+1 at some level");
  LlrSchedule s;
  s.refs_ = std::move(refs_per_level);
  s.llr_ = std::move(llr_per_level);
  return s;
}

LlrSchedule LlrSchedule::from_refs(std::vector<std::vector<Voltage>> refs_per_level,
                                   const AwgnLlrModel& model, double llr_saturation) {
  LlrSchedule s;
  s.refs_ = std::move(refs_per_level);
  for (const auto& refs : s.refs_) {
    std::vector<double> lv;
    for (int b = 0; b <= static_cast<int>(refs.size()); ++b) {
      const double raw = llr_for_bin(b, refs, model);
      lv.push_back(std::clamp(raw, -llr_saturation, llr_saturation));
    }
    s.llr_.push_back(std::move(lv));
  }
  return s;
}

MinSumOutcome min_sum_decode(const LdpcCode& code, const std::vector<double>& channel_llr,
                             int max_iters, double saturation) {
  if (static_cast<int>(channel_llr.size()) != code.n())
    throw std::invalid_argument("min_sum_decode: LLR length != n");
  const auto& checks = code.check_neighbors();
  const int n = code.n();

  // Edge layout: one slot per (check, neighbor) pair in row order.
  std::vector<int> edge_bit;
  std::vector<std::size_t> check_begin(checks.size() + 1, 0);
  for (std::size_t i = 0; i < checks.size(); ++i) {
    check_begin[i + 1] = check_begin[i] + checks[i].size();
    for (int j : checks[i]) edge_bit.push_back(j);
  }
  std::vector<double> R(edge_bit.size(), 0.0), Rnew(edge_bit.size(), 0.0);
  std::vector<double> ptot(channel_llr.begin(), channel_llr.end());

  MinSumOutcome out;
  auto hard_decision = [&]() {
    std::vector<std::uint8_t> h(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) h[static_cast<std::size_t>(j)] = ptot[static_cast<std::size_t>(j)] < 0.0;
    return h;
  };

  out.hard = hard_decision();
  if (code.syndrome_zero(out.hard)) {
    out.parity_ok = true;
    return out;
  }

  for (int it = 1; it <= max_iters; ++it) {
    // Check node update: delta_ij = prod sgn(Q'_Ji), kappa_ij = min |Q'_Ji|
    // over the other neighbors J.
    for (std::size_t i = 0; i < checks.size(); ++i) {
      double min1 = 1e300, min2 = 1e300;
      std::size_t argmin = 0;
      int sign_prod = 1;
      for (std::size_t e = check_begin[i]; e < check_begin[i + 1]; ++e) {
        const double q = ptot[static_cast<std::size_t>(edge_bit[e])] - R[e];
        const double aq = std::abs(q);
        if (q < 0.0) sign_prod = -sign_prod;
        if (aq < min1) {
          min2 = min1;
          min1 = aq;
          argmin = e;
        } else if (aq < min2) {
          min2 = aq;
        }
      }
      for (std::size_t e = check_begin[i]; e < check_begin[i + 1]; ++e) {
        const double q = ptot[static_cast<std::size_t>(edge_bit[e])] - R[e];
        const double kappa = (e == argmin) ? min2 : min1;
        const int self_sign = (q < 0.0) ? -1 : 1;
        const double val = sign_prod * self_sign * kappa;
        Rnew[e] = std::clamp(val, -saturation, saturation);
      }
    }
    std::swap(R, Rnew);

    // Bit node totals: P_j = L_j + sum_i R_ij.
    for (int j = 0; j < n; ++j) ptot[static_cast<std::size_t>(j)] = channel_llr[static_cast<std::size_t>(j)];
    for (std::size_t e = 0; e < edge_bit.size(); ++e)
      ptot[static_cast<std::size_t>(edge_bit[e])] += R[e];

    out.iterations = it;
    out.hard = hard_decision();
    if (code.syndrome_zero(out.hard)) {
      out.parity_ok = true;
      return out;
    }
  }
  return out;
}

LdpcDecodeResult ldpc_decode(
    const LdpcCode& code, const LlrSchedule& schedule,
    const std::function<std::vector<std::int16_t>(int level)>& read_level,
    int max_iters_per_level, int max_levels) {
  LdpcDecodeResult res;
  const int levels = std::min(max_levels, schedule.max_levels());
  for (int level = 0; level <= levels; ++level) {
    const std::vector<std::int16_t> bins = read_level(level);
    if (static_cast<int>(bins.size()) != code.n())
      throw std::invalid_argument("ldpc_decode: observation length != n");
    res.latency_us += schedule.latency_us_per_level();
    const auto& table = schedule.llrs(level);
    std::vector<double> L(static_cast<std::size_t>(code.n()));
    for (int j = 0; j < code.n(); ++j)
      L[static_cast<std::size_t>(j)] = table.at(static_cast<std::size_t>(bins[static_cast<std::size_t>(j)]));
    const MinSumOutcome out = min_sum_decode(code, L, max_iters_per_level);
    res.iterations_per_level.push_back(out.iterations);
    res.levels_used = level;
    if (out.parity_ok) {
      res.status = LdpcDecodeResult::Status::Success;
      res.message.assign(out.hard.begin(), out.hard.begin() + code.k());
      return res;
    }
  }
  res.status = LdpcDecodeResult::Status::LevelExhausted;
  return res;
}

}  // namespace flashsim
