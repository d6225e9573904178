// Maps logical data onto physical flash pages as K systematic codewords per
// page (BCH or LDPC), with spare bits left in the erased state.
#pragma once

#include <memory>
#include <vector>

#include "flashsim/ecc_bch.hpp"
#include "flashsim/ecc_ldpc.hpp"

namespace flashsim {

class PageCodec {
 public:
  enum class Kind { Bch, Ldpc };

  static PageCodec bch(int m, int t, int page_bits);
  static PageCodec ldpc(int n, int k, int column_weight, int page_bits, std::uint64_t seed);

  Kind kind() const { return kind_; }
  int codeword_bits() const { return n_; }
  int data_bits_per_codeword() const { return k_; }
  int codewords_per_page() const { return K_; }
  int page_bits() const { return page_bits_; }
  int data_bits_per_page() const { return K_ * k_; }
  // Guaranteed per-codeword correction capability (BCH t; 0 for LDPC).
  int correctable_per_codeword() const;

  const BchCode* bch_code() const { return bch_.get(); }
  const LdpcCode* ldpc_code() const { return ldpc_.get(); }

  // K*k data bits -> page_bits (codewords concatenated, spare bits = 1).
  std::vector<std::uint8_t> encode_page(const std::vector<std::uint8_t>& data) const;

  struct PageDecode {
    bool ok = false;
    std::vector<std::uint8_t> data;  // valid when ok
    int corrected_bits = 0;          // total flips across codewords (BCH)
    int failed_codewords = 0;
    int worst_codeword_errors = 0;
  };

  // Hard-decision decode of a raw page.  LDPC hard decoding runs min-sum on
  // sign-only channel LLRs.
  PageDecode decode_page(const std::vector<std::uint8_t>& page_bits,
                         int ldpc_max_iters = 20) const;

  // Codeword slice [c*n, (c+1)*n) of a page bit vector.
  template <typename T>
  std::vector<T> codeword_slice(const std::vector<T>& page, int c) const {
    return std::vector<T>(page.begin() + static_cast<long>(c) * n_,
                          page.begin() + static_cast<long>(c + 1) * n_);
  }

 private:
  Kind kind_ = Kind::Bch;
  std::shared_ptr<const BchCode> bch_;
  std::shared_ptr<const LdpcCode> ldpc_;
  int n_ = 0, k_ = 0, K_ = 0, page_bits_ = 0;
};

}  // namespace flashsim
