#include "flashsim/ecc_bch.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace flashsim {

namespace {

// Minimal-weight primitive polynomials, bit i = coefficient of x^i.
int primitive_poly(int m) {
  static const std::map<int, int> table = {
      {2, 0b111},           {3, 0b1011},           {4, 0b10011},
      {5, 0b100101},        {6, 0b1000011},        {7, 0b10001001},
      {8, 0b100011101},     {9, 0b1000010001},     {10, 0b10000001001},
      {11, 0b100000000101}, {12, 0b1000001010011}, {13, 0b10000000011011},
      {14, 0b100010001000011}};
  auto it = table.find(m);
  if (it == table.end()) throw std::invalid_argument("Gf2m: unsupported field degree");
  return it->second;
}

}  // namespace

Gf2m::Gf2m(int m) : m_(m), n_((1 << m) - 1) {
  const int poly = primitive_poly(m);
  log_.assign(static_cast<std::size_t>(n_) + 1, -1);
  alog_.assign(static_cast<std::size_t>(n_), 0);
  int x = 1;
  for (int e = 0; e < n_; ++e) {
    alog_[static_cast<std::size_t>(e)] = x;
    log_[static_cast<std::size_t>(x)] = e;
    x <<= 1;
    if (x & (1 << m)) x ^= poly;
  }
}

int Gf2m::inv(int a) const {
  if (a == 0) throw std::domain_error("Gf2m: zero has no inverse");
  return alog_[static_cast<std::size_t>((n_ - log_[static_cast<std::size_t>(a)]) % n_)];
}

int Gf2m::log_alpha(int a) const {
  if (a == 0) throw std::domain_error("Gf2m: log of zero");
  return log_[static_cast<std::size_t>(a)];
}

BchCode::BchCode(int m, int t) : gf_(m), n_(gf_.n()), t_(t) {
  if (t < 1 || 2 * t >= n_) throw std::invalid_argument("BchCode: bad correction capability");

  // Union of cyclotomic cosets of 1..2t gives the generator's roots.
  std::set<int> roots;
  for (int i = 1; i <= 2 * t; ++i) {
    int c = i % n_;
    while (!roots.count(c)) {
      roots.insert(c);
      c = (2 * c) % n_;
    }
  }

  // Expand g(x) = prod (x - alpha^r) over GF(2^m); coefficients end up 0/1.
  std::vector<int> g = {1};
  for (int r : roots) {
    const int a = gf_.alpha_pow(r);
    std::vector<int> next(g.size() + 1, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      next[i + 1] ^= g[i];              // x * g
      next[i] ^= gf_.mul(g[i], a);      // alpha^r * g
    }
    g = std::move(next);
  }
  gen_.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] != 0 && g[i] != 1)
      throw std::logic_error("BchCode: generator polynomial not binary");
    gen_[i] = static_cast<std::uint8_t>(g[i]);
  }
  k_ = n_ - static_cast<int>(gen_.size() - 1);
  if (k_ <= 0) throw std::invalid_argument("BchCode: no data bits at this (m, t)");
}

std::vector<std::uint8_t> BchCode::encode(const std::vector<std::uint8_t>& msg) const {
  if (static_cast<int>(msg.size()) != k_)
    throw std::invalid_argument("BchCode::encode: message length != k");
  // Systematic cyclic encoding: parity = x^(n-k) m(x) mod g(x), computed
  // with the usual LFSR division.  Message bits occupy positions [0, k).
  const int r = n_ - k_;
  std::vector<std::uint8_t> reg(static_cast<std::size_t>(r), 0);
  for (int i = 0; i < k_; ++i) {
    const std::uint8_t fb = static_cast<std::uint8_t>((msg[static_cast<std::size_t>(i)] & 1) ^
                                                      reg[static_cast<std::size_t>(r - 1)]);
    for (int j = r - 1; j > 0; --j)
      reg[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(
          reg[static_cast<std::size_t>(j - 1)] ^ (fb & gen_[static_cast<std::size_t>(j)]));
    reg[0] = static_cast<std::uint8_t>(fb & gen_[0]);
  }
  std::vector<std::uint8_t> cw(static_cast<std::size_t>(n_));
  for (int i = 0; i < k_; ++i) cw[static_cast<std::size_t>(i)] = msg[static_cast<std::size_t>(i)] & 1;
  // Parity register holds coefficients r-1..0; external order is high first.
  for (int j = 0; j < r; ++j)
    cw[static_cast<std::size_t>(k_ + j)] = reg[static_cast<std::size_t>(r - 1 - j)];
  return cw;
}

std::vector<int> BchCode::syndromes(const std::vector<std::uint8_t>& word) const {
  // External bit i is the coefficient of x^(n-1-i); Horner from the top.
  std::vector<int> s(static_cast<std::size_t>(2 * t_) + 1, 0);
  for (int j = 1; j <= 2 * t_; ++j) {
    const int aj = gf_.alpha_pow(j);
    int v = 0;
    for (int i = 0; i < n_; ++i) v = gf_.mul(v, aj) ^ (word[static_cast<std::size_t>(i)] & 1);
    s[static_cast<std::size_t>(j)] = v;
  }
  return s;
}

bool BchCode::syndrome_zero(const std::vector<std::uint8_t>& word) const {
  if (static_cast<int>(word.size()) != n_)
    throw std::invalid_argument("BchCode: word length != n");
  const auto s = syndromes(word);
  for (int j = 1; j <= 2 * t_; ++j)
    if (s[static_cast<std::size_t>(j)] != 0) return false;
  return true;
}

BchDecodeResult BchCode::decode(const std::vector<std::uint8_t>& received) const {
  if (static_cast<int>(received.size()) != n_)
    throw std::invalid_argument("BchCode::decode: word length != n");

  BchDecodeResult res;
  const auto S = syndromes(received);
  bool clean = true;
  for (int j = 1; j <= 2 * t_; ++j)
    if (S[static_cast<std::size_t>(j)] != 0) {
      clean = false;
      break;
    }
  if (clean) {
    res.ok = true;
    res.message.assign(received.begin(), received.begin() + k_);
    return res;
  }

  // Berlekamp-Massey over GF(2^m): build the error location polynomial
  // sigma(x) = 1 + sigma_1 x + ... + sigma_b x^b.
  std::vector<int> sigma = {1}, prev = {1};
  int L = 0, shift = 1, b = 1;
  for (int r = 0; r < 2 * t_; ++r) {
    int d = 0;
    for (int i = 0; i <= L && i < static_cast<int>(sigma.size()); ++i)
      if (r - i >= 0)
        d ^= gf_.mul(sigma[static_cast<std::size_t>(i)], S[static_cast<std::size_t>(r + 1 - i)]);
    if (d == 0) {
      ++shift;
      continue;
    }
    std::vector<int> next = sigma;
    const int coef = gf_.mul(d, gf_.inv(b));
    if (static_cast<int>(next.size()) < static_cast<int>(prev.size()) + shift)
      next.resize(prev.size() + static_cast<std::size_t>(shift), 0);
    for (std::size_t i = 0; i < prev.size(); ++i)
      next[i + static_cast<std::size_t>(shift)] ^= gf_.mul(coef, prev[i]);
    if (2 * L <= r) {
      prev = sigma;
      b = d;
      L = r + 1 - L;
      shift = 1;
    } else {
      ++shift;
    }
    sigma = std::move(next);
  }
  while (!sigma.empty() && sigma.back() == 0) sigma.pop_back();
  const int deg = static_cast<int>(sigma.size()) - 1;
  res.detected_errors = deg;
  if (deg > t_ || deg != L) return res;  // beyond capability: decode failure

  // Chien search across the whole word: sigma(alpha^i) = 0 marks an error
  // at the coefficient with exponent n - i.
  std::vector<int> err_pos;
  for (int i = 0; i < n_; ++i) {
    int v = 0;
    const int ai = gf_.alpha_pow(i);
    for (int j = deg; j >= 0; --j) v = gf_.mul(v, ai) ^ sigma[static_cast<std::size_t>(j)];
    if (v == 0) {
      const int coeff_exp = (n_ - i) % n_;
      err_pos.push_back(n_ - 1 - coeff_exp);
      if (static_cast<int>(err_pos.size()) == deg) break;
    }
  }
  if (static_cast<int>(err_pos.size()) != deg) return res;  // locator has missing roots

  std::vector<std::uint8_t> corrected = received;
  for (int p : err_pos) corrected[static_cast<std::size_t>(p)] ^= 1;
  if (!syndrome_zero(corrected)) return res;

  std::sort(err_pos.begin(), err_pos.end());
  res.ok = true;
  res.flipped_positions = std::move(err_pos);
  res.message.assign(corrected.begin(), corrected.begin() + k_);
  return res;
}

double BchCode::decode_latency(int error_count, int parallelism,
                               const BchLatencyConstants& c) const {
  if (parallelism < 1) throw std::invalid_argument("decode_latency: parallelism must be >= 1");
  if (error_count < 0 || error_count > t_)
    throw std::domain_error("decode_latency: undefined beyond correction capability");
  if (error_count == 0) return c.t_syndrome;  // zero syndrome skips steps 2-4
  const double iters = 0.5 * static_cast<double>(t_ + error_count);
  return c.t_syndrome + iters * c.t_berlekamp +
         (static_cast<double>(k_) / parallelism) * c.t_chien;
}

}  // namespace flashsim
