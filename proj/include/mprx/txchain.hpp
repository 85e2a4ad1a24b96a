#ifndef MPRX_TXCHAIN_HPP
#define MPRX_TXCHAIN_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "mprx/common.hpp"
#include "mprx/constellation.hpp"

namespace mprx {

/// Rate-1/2 recursive systematic convolutional code. Generators are octal,
/// MSB first over D^0..D^6: feedback 117, feedforward 155, constraint
/// length 7 (64 states).
struct CodeConfig {
  int feedback_oct = 0117;
  int feedforward_oct = 0155;
  bool terminate = true;
  static constexpr int kMemory = 6;
  double rate() const { return 0.5; }
};

/// OFDM frame geometry. Pilots occupy one OFDM symbol; each user gets
/// pilot_count subcarriers there, mutually disjoint across users.
struct FrameConfig {
  int symbols = 8;       // T
  int users = 8;         // N
  int subcarriers = 128; // K
  int pilot_count = 16;  // K_p per user
  int cp_len = 16;       // bookkeeping only
  int bits_per_symbol = 4;  // Q
  void validate() const;
};

/// Number of (t,k) positions that carry data for every user:
/// T*K - N*K_p (each pilot subcarrier is lost to all users).
int data_positions_per_user(const FrameConfig& cfg);

/// Info bits per user so that the terminated coded stream exactly fills the
/// data positions: Q * data_positions / 2 - 6.
int info_bits_per_user(const FrameConfig& cfg, const CodeConfig& code);

/// Systematic output: (sys, parity) per input bit, then 6 tail pairs that
/// drive the trellis back to the zero state (when terminate is set).
std::vector<std::uint8_t> rsc_encode(const std::vector<std::uint8_t>& bits,
                                     const CodeConfig& cfg);

/// Seeded uniform random permutation (Fisher-Yates on the library Rng).
std::vector<std::uint32_t> make_interleaver(std::size_t n, std::uint64_t seed);

std::vector<std::uint8_t> interleave(const std::vector<std::uint8_t>& bits,
                                     const std::vector<std::uint32_t>& perm);
std::vector<std::uint8_t> deinterleave(const std::vector<std::uint8_t>& bits,
                                       const std::vector<std::uint32_t>& perm);

/// Pilot layout: all pilots in OFDM symbol 0; user n gets subcarriers
/// n mod S, n mod S + S, ... with S = K / K_p. Values are unit-modulus QPSK
/// from the seed.
struct PilotPattern {
  int symbol_index = 0;
  std::vector<std::vector<int>> carriers;  // per user, 0-based subcarrier ids
  std::vector<std::vector<cplx>> values;   // matching pilot symbols
};

PilotPattern build_pilot_pattern(const FrameConfig& cfg, std::uint64_t seed);

/// Assembled transmit frame. symbol(t,n,k) is a data symbol on data
/// positions, the pilot value on (pilot symbol, own carrier), zero on other
/// users' pilot carriers.
struct Frame {
  FrameConfig cfg;
  PilotPattern pilots;
  std::vector<std::vector<std::uint8_t>> info_bits;    // per user
  std::vector<std::vector<std::uint8_t>> coded_bits;   // per user, interleaved order
  std::vector<std::vector<std::uint32_t>> perms;       // per user interleaver
  std::vector<cplx> x;                                 // T x N x K
  std::vector<std::pair<int, int>> data_pos;           // (t,k) in scan order
  std::size_t x_idx(int t, int n, int k) const {
    return (static_cast<std::size_t>(t) * cfg.users + n) * cfg.subcarriers + k;
  }
  bool is_pilot_position(int t, int k) const;  // some user sends a pilot there
  int pilot_owner(int t, int k) const;         // -1 if none
};

/// Encodes, interleaves, maps and multiplexes all users into one frame.
/// info_bits[n] must have exactly info_bits_per_user entries.
Frame assemble_frame(const std::vector<std::vector<std::uint8_t>>& info_bits,
                     const FrameConfig& cfg, const CodeConfig& code,
                     const Constellation& constellation, std::uint64_t seed);

}  // namespace mprx

#endif  // MPRX_TXCHAIN_HPP
