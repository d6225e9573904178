#include "flashsim/page_codec.hpp"

#include <stdexcept>

namespace flashsim {

PageCodec PageCodec::bch(int m, int t, int page_bits) {
  PageCodec c;
  c.kind_ = Kind::Bch;
  c.bch_ = std::make_shared<BchCode>(m, t);
  c.n_ = c.bch_->n();
  c.k_ = c.bch_->k();
  c.page_bits_ = page_bits;
  c.K_ = page_bits / c.n_;
  if (c.K_ < 1) throw std::invalid_argument("PageCodec: page smaller than one codeword");
  return c;
}

PageCodec PageCodec::ldpc(int n, int k, int column_weight, int page_bits, std::uint64_t seed) {
  PageCodec c;
  c.kind_ = Kind::Ldpc;
  Rng rng(seed);
  c.ldpc_ = std::make_shared<LdpcCode>(LdpcCode::construct(n, k, column_weight, rng));
  c.n_ = n;
  c.k_ = k;
  c.page_bits_ = page_bits;
  c.K_ = page_bits / n;
  if (c.K_ < 1) throw std::invalid_argument("PageCodec: page smaller than one codeword");
  return c;
}

int PageCodec::correctable_per_codeword() const {
  return kind_ == Kind::Bch ? bch_->t() : 0;
}

std::vector<std::uint8_t> PageCodec::encode_page(const std::vector<std::uint8_t>& data) const {
  if (static_cast<int>(data.size()) != data_bits_per_page())
    throw std::invalid_argument("encode_page: data length != K*k");
  std::vector<std::uint8_t> page(static_cast<std::size_t>(page_bits_), 1);  // spare stays erased
  for (int c = 0; c < K_; ++c) {
    std::vector<std::uint8_t> msg(data.begin() + static_cast<long>(c) * k_,
                                  data.begin() + static_cast<long>(c + 1) * k_);
    const std::vector<std::uint8_t> cw =
        kind_ == Kind::Bch ? bch_->encode(msg) : ldpc_->encode(msg);
    std::copy(cw.begin(), cw.end(), page.begin() + static_cast<long>(c) * n_);
  }
  return page;
}

PageCodec::PageDecode PageCodec::decode_page(const std::vector<std::uint8_t>& page_bits,
                                             int ldpc_max_iters) const {
  if (static_cast<int>(page_bits.size()) != page_bits_)
    throw std::invalid_argument("decode_page: page length mismatch");
  PageDecode out;
  out.ok = true;
  out.data.reserve(static_cast<std::size_t>(data_bits_per_page()));
  for (int c = 0; c < K_; ++c) {
    const auto cw = codeword_slice(page_bits, c);
    if (kind_ == Kind::Bch) {
      const BchDecodeResult r = bch_->decode(cw);
      if (!r.ok) {
        out.ok = false;
        ++out.failed_codewords;
        out.data.insert(out.data.end(), cw.begin(), cw.begin() + k_);
      } else {
        out.corrected_bits += static_cast<int>(r.flipped_positions.size());
        out.worst_codeword_errors =
            std::max(out.worst_codeword_errors, static_cast<int>(r.flipped_positions.size()));
        out.data.insert(out.data.end(), r.message.begin(), r.message.end());
      }
    } else {
      // Sign-only LLRs for hard decoding; magnitude is immaterial to plain
      // min-sum as long as it is uniform.
      std::vector<double> llr(cw.size());
      for (std::size_t i = 0; i < cw.size(); ++i) llr[i] = cw[i] ? -4.0 : 4.0;
      const MinSumOutcome r = min_sum_decode(*ldpc_, llr, ldpc_max_iters);
      if (!r.parity_ok) {
        out.ok = false;
        ++out.failed_codewords;
        out.data.insert(out.data.end(), cw.begin(), cw.begin() + k_);
      } else {
        int flips = 0;
        for (std::size_t i = 0; i < cw.size(); ++i)
          if ((r.hard[i] ^ cw[i]) & 1) ++flips;
        out.corrected_bits += flips;
        out.worst_codeword_errors = std::max(out.worst_codeword_errors, flips);
        out.data.insert(out.data.end(), r.hard.begin(), r.hard.begin() + k_);
      }
    }
  }
  return out;
}

}  // namespace flashsim
