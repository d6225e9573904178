// Systematic binary BCH codec over GF(2^m): encode, hard-decision decode
// (syndromes -> Berlekamp-Massey -> Chien search -> correction -> message
// extraction) and the decoder latency model.
#pragma once

#include <cstdint>
#include <vector>

#include "flashsim/types.hpp"

namespace flashsim {

// GF(2^m) arithmetic backed by log/antilog tables.  Field elements are
// 0..2^m-1; 0 is the additive zero.
class Gf2m {
 public:
  explicit Gf2m(int m);  // primitive polynomial from the standard table

  int m() const { return m_; }
  int n() const { return n_; }  // multiplicative group order 2^m - 1

  int mul(int a, int b) const {
    if (a == 0 || b == 0) return 0;
    return alog_[(log_[a] + log_[b]) % n_];
  }
  int inv(int a) const;
  int alpha_pow(int e) const {  // alpha^e, any integer e
    e %= n_;
    if (e < 0) e += n_;
    return alog_[e];
  }
  int log_alpha(int a) const;  // discrete log of a nonzero element

 private:
  int m_, n_;
  std::vector<int> log_, alog_;
};

struct BchLatencyConstants {
  double t_syndrome = 1.0;
  double t_berlekamp = 1.0;
  double t_chien = 1.0;
};

struct BchDecodeResult {
  bool ok = false;
  std::vector<std::uint8_t> message;   // first k bits of the corrected word
  std::vector<int> flipped_positions;  // codeword positions that were flipped
  int detected_errors = 0;             // degree of the error locator
};

// Full-length binary BCH code with n = 2^m - 1; k follows from the degree of
// the generator polynomial (lcm of minimal polynomials of alpha^1..alpha^2t).
// Codewords are systematic with the message in positions [0, k).
class BchCode {
 public:
  BchCode(int m, int t);

  int n() const { return n_; }
  int k() const { return k_; }
  int t() const { return t_; }
  const std::vector<std::uint8_t>& generator() const { return gen_; }

  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& msg) const;

  // Corrects up to t errors.  A clean syndrome skips straight to message
  // extraction.  Success is an estimate: beyond t errors the decoder may
  // land on a different valid codeword; it never reports success on a word
  // whose syndrome is nonzero.
  BchDecodeResult decode(const std::vector<std::uint8_t>& received) const;

  bool syndrome_zero(const std::vector<std::uint8_t>& word) const;

  // T_syndrome + N*T_berlekamp + (k/p)*T_chien with N = (t+b)/2 iterations;
  // a zero-error word short-circuits after the syndrome stage.  Throws for
  // b > t (latency undefined beyond the correction capability).
  double decode_latency(int error_count, int parallelism,
                        const BchLatencyConstants& c) const;

 private:
  std::vector<int> syndromes(const std::vector<std::uint8_t>& word) const;

  Gf2m gf_;
  int n_, k_, t_;
  std::vector<std::uint8_t> gen_;  // generator polynomial, low degree first
};

}  // namespace flashsim
