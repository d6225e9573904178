// Shared domain vocabulary: cell modes, states, page types, Gray mappings.
//
// Threshold voltages live on a normalized dimensionless scale where 0 is GND
// and 512 is the nominal maximum programmed voltage; erased cells sit below 0.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flashsim {

using Voltage = double;  // normalized units, 0..512 nominal span

constexpr Voltage kVoltageScaleMax = 512.0;

enum class CellMode : std::uint8_t { SLC, MLC, TLC, TLC_DOWNGRADED };

enum class PageType : std::uint8_t { LSB, CSB, MSB };

// State ids index the ordered state list of a DistributionSet (0 = ER).
using StateId = int;

inline int bits_per_cell(CellMode m) {
  switch (m) {
    case CellMode::SLC: return 1;
    case CellMode::MLC: return 2;
    case CellMode::TLC: return 3;
    case CellMode::TLC_DOWNGRADED: return 2;
  }
  throw std::invalid_argument("bits_per_cell: bad mode");
}

inline int state_count(CellMode m) { return 1 << bits_per_cell(m); }

inline const char* to_string(PageType p) {
  switch (p) {
    case PageType::LSB: return "LSB";
    case PageType::CSB: return "CSB";
    case PageType::MSB: return "MSB";
  }
  return "?";
}

inline std::vector<PageType> page_types(CellMode m) {
  switch (bits_per_cell(m)) {
    case 1: return {PageType::LSB};
    case 2: return {PageType::LSB, PageType::MSB};
    default: return {PageType::LSB, PageType::CSB, PageType::MSB};
  }
}

// State-to-bits mapping with the Gray property: adjacent states differ in
// exactly one bit, so one misread boundary corrupts exactly one page type.
//
// TLC assignment (MSB,CSB,LSB), chosen to satisfy the Hamming-1 constraint:
//   ER=111 P1=011 P2=001 P3=101 P4=100 P5=000 P6=010 P7=110
// MLC assignment (MSB,LSB): ER=11 P1=01 P2=00 P3=10.
class GrayMap {
 public:
  explicit GrayMap(CellMode mode) : mode_(mode) {
    switch (mode) {
      case CellMode::SLC:
        codes_ = {0b1, 0b0};
        break;
      case CellMode::MLC:
      case CellMode::TLC_DOWNGRADED:
        codes_ = {0b11, 0b01, 0b00, 0b10};
        break;
      case CellMode::TLC:
        codes_ = {0b111, 0b011, 0b001, 0b101, 0b100, 0b000, 0b010, 0b110};
        break;
    }
  }

  CellMode mode() const { return mode_; }
  int states() const { return static_cast<int>(codes_.size()); }

  // Bit of `state` on the page `p`.  LSB is the lowest stored bit.
  int bit(StateId state, PageType p) const {
    return (codes_.at(static_cast<std::size_t>(state)) >> bit_pos(p)) & 1;
  }

  // Full code word of a state, packed as (MSB..LSB).
  unsigned code(StateId state) const { return codes_.at(static_cast<std::size_t>(state)); }

  // Inverse lookup: bits (packed MSB..LSB) -> state id.
  StateId state_of(unsigned code) const {
    for (std::size_t s = 0; s < codes_.size(); ++s)
      if (codes_[s] == code) return static_cast<StateId>(s);
    throw std::out_of_range("GrayMap::state_of: unmapped code");
  }

  int bit_pos(PageType p) const {
    const int b = bits_per_cell(mode_);
    switch (p) {
      case PageType::LSB: return 0;
      case PageType::CSB:
        if (b != 3) throw std::invalid_argument("CSB page on non-TLC mode");
        return 1;
      case PageType::MSB: return b - 1;
    }
    throw std::invalid_argument("bad page type");
  }

  // Indices i such that the boundary between state i and i+1 flips this
  // page's bit.  By the Gray property every boundary belongs to exactly one
  // page type.
  std::vector<int> boundaries(PageType p) const {
    std::vector<int> out;
    for (int i = 0; i + 1 < states(); ++i)
      if (bit(i, p) != bit(i + 1, p)) out.push_back(i);
    return out;
  }

  bool adjacent_hamming_one() const {
    for (int i = 0; i + 1 < states(); ++i) {
      unsigned x = codes_[i] ^ codes_[i + 1];
      if (x == 0 || (x & (x - 1)) != 0) return false;
    }
    return true;
  }

 private:
  CellMode mode_;
  std::vector<unsigned> codes_;
};

inline const char* state_name(int idx) {
  static const std::array<const char*, 8> names = {"ER", "P1", "P2", "P3",
                                                   "P4", "P5", "P6", "P7"};
  return names.at(static_cast<std::size_t>(idx));
}

}  // namespace flashsim
