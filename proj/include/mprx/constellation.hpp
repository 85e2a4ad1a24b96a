#ifndef MPRX_CONSTELLATION_HPP
#define MPRX_CONSTELLATION_HPP

#include <cstdint>
#include <vector>

#include "mprx/common.hpp"

namespace mprx {

/// Square QAM with multilevel Gray labeling, unit average energy.
///
/// A label is Q bits, the first Q/2 select the I level and the last Q/2 the
/// Q level. Each half is a binary-reflected Gray code over the PAM levels,
/// ordered so the all-zero half maps to the most positive level:
///
///   QPSK   per axis: 0 -> +1, 1 -> -1                      (scale 1/sqrt(2))
///   16QAM  per axis: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3 (scale 1/sqrt(10))
///   64QAM  per axis: 000 +7, 001 +5, 011 +3, 010 +1,
///                    110 -1, 111 -3, 101 -5, 100 -7         (scale 1/sqrt(42))
///
/// point(label) uses the label's integer value with bit 0 of the tuple as the
/// most significant bit.
class Constellation {
 public:
  static Constellation make(int bits_per_symbol);

  int bits_per_symbol() const { return q_; }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<cplx>& points() const { return points_; }
  cplx point(int label) const { return points_[label]; }

  /// Bit q of a point's label (q = 0 is the first, most significant bit).
  static int label_bit(int label, int q, int bits_per_symbol) {
    return (label >> (bits_per_symbol - 1 - q)) & 1;
  }

  /// Maps Q bits (starting at bits[offset]) to a symbol.
  cplx map(const std::vector<std::uint8_t>& bits, std::size_t offset) const;

 private:
  Constellation(int q, std::vector<cplx> pts) : q_(q), points_(std::move(pts)) {}
  int q_ = 0;
  std::vector<cplx> points_;
};

}  // namespace mprx

#endif  // MPRX_CONSTELLATION_HPP
