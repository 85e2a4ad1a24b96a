#ifndef MPRX_DECODER_HPP
#define MPRX_DECODER_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "mprx/txchain.hpp"

namespace mprx {

/// Trellis of the rate-1/2 RSC code: 64 states, input-complete transitions,
/// plus the state-dependent terminating input.
struct Trellis {
  static constexpr int kStates = 1 << CodeConfig::kMemory;
  std::array<std::array<int, 2>, kStates> next_state;
  std::array<std::array<std::uint8_t, 2>, kStates> out_parity;  // systematic bit equals the input
  std::array<std::uint8_t, kStates> term_input;

  explicit Trellis(const CodeConfig& cfg = CodeConfig{});
};

struct DecodeResult {
  std::vector<double> extrinsic;       // per coded bit, posterior LLR minus input LLR
  std::vector<double> app;             // per coded bit, full posterior LLR
  std::vector<std::uint8_t> info_bits; // hard decisions on the information bits
};

/// Log-MAP BCJR over a terminated block. coded_llr holds one LLR per coded
/// bit in (systematic, parity) order including the tail, with the convention
/// LLR = ln P(c=1)/P(c=0). With max_log set, log-sum-exp degrades to max.
DecodeResult bcjr_decode(const std::vector<double>& coded_llr, const Trellis& trellis,
                         bool terminated = true, bool max_log = false);

}  // namespace mprx

#endif  // MPRX_DECODER_HPP
