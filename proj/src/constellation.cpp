#include "mprx/constellation.hpp"

#include <cmath>

namespace mprx {

namespace {

// Binary-reflected Gray decode: g -> index of the level, 0 = most positive.
int gray_decode(int g) {
  int b = 0;
  for (; g; g >>= 1) b ^= g;
  return b;
}

}  // namespace

Constellation Constellation::make(int bits_per_symbol) {
  if (bits_per_symbol != 2 && bits_per_symbol != 4 && bits_per_symbol != 6)
    throw ConfigError("bits per symbol must be 2, 4 or 6 (QPSK/16QAM/64QAM)");
  const int q = bits_per_symbol;
  const int half = q / 2;
  const int levels = 1 << half;
  // E[level^2] over {±1, ±3, ..., ±(levels-1)} is (levels^2 - 1)/3 per axis.
  const double axis_energy = (static_cast<double>(levels) * levels - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(2.0 * axis_energy);
  std::vector<cplx> pts(static_cast<std::size_t>(1) << q);
  for (int label = 0; label < (1 << q); ++label) {
    int gi = label >> half;           // first half of the bits
    int gq = label & (levels - 1);    // second half
    int ii = gray_decode(gi);
    int iq = gray_decode(gq);
    double re = static_cast<double>(levels - 1 - 2 * ii) * scale;
    double im = static_cast<double>(levels - 1 - 2 * iq) * scale;
    pts[label] = {re, im};
  }
  return Constellation(q, std::move(pts));
}

cplx Constellation::map(const std::vector<std::uint8_t>& bits, std::size_t offset) const {
  int label = 0;
  for (int i = 0; i < q_; ++i) label = (label << 1) | (bits[offset + i] & 1);
  return points_[label];
}

}  // namespace mprx
