#include "mprx/txchain.hpp"

#include <algorithm>

#include "mprx/rng.hpp"

namespace mprx {

namespace {

// taps[i] = coefficient of D^i, MSB of the octal literal first
void poly_taps(int oct, int taps[7]) {
  for (int i = 0; i < 7; ++i) taps[i] = (oct >> (6 - i)) & 1;
}

}  // namespace

void FrameConfig::validate() const {
  if (symbols < 1 || users < 1 || subcarriers < 1) throw ConfigError("frame dimensions must be positive");
  if (pilot_count < 1 || pilot_count > subcarriers) throw ConfigError("pilot count out of range");
  if (users * pilot_count > subcarriers)
    throw ConfigError("pilot sets cannot be disjoint: N*K_p > K");
  if (subcarriers % pilot_count != 0)
    throw ConfigError("uniform pilot spacing needs K divisible by K_p");
  if (users > subcarriers / pilot_count)
    throw ConfigError("not enough pilot offsets for all users");
  if (bits_per_symbol != 2 && bits_per_symbol != 4 && bits_per_symbol != 6)
    throw ConfigError("bits per symbol must be 2, 4 or 6");
}

int data_positions_per_user(const FrameConfig& cfg) {
  return cfg.symbols * cfg.subcarriers - cfg.users * cfg.pilot_count;
}

int info_bits_per_user(const FrameConfig& cfg, const CodeConfig& code) {
  long long coded = static_cast<long long>(data_positions_per_user(cfg)) * cfg.bits_per_symbol;
  if (coded % 2 != 0) throw ConfigError("coded bit budget must be even for the rate-1/2 code");
  long long info = coded / 2 - (code.terminate ? CodeConfig::kMemory : 0);
  if (info < 1) throw ConfigError("frame too small to carry any information bits");
  return static_cast<int>(info);
}

std::vector<std::uint8_t> rsc_encode(const std::vector<std::uint8_t>& bits, const CodeConfig& cfg) {
  if (bits.empty()) throw ConfigError("rsc_encode: empty input");
  int g1[7], g2[7];
  poly_taps(cfg.feedback_oct, g1);
  poly_taps(cfg.feedforward_oct, g2);
  std::uint8_t s[CodeConfig::kMemory] = {0};  // s[0] is the most recent register bit
  std::vector<std::uint8_t> out;
  out.reserve(2 * (bits.size() + CodeConfig::kMemory));
  auto feedback = [&]() {
    int fb = 0;
    for (int i = 0; i < CodeConfig::kMemory; ++i) fb ^= g1[i + 1] & s[i];
    return static_cast<std::uint8_t>(fb);
  };
  auto step = [&](std::uint8_t in) {
    std::uint8_t a = static_cast<std::uint8_t>((in ^ feedback()) & 1);
    int p = g2[0] & a;
    for (int i = 0; i < CodeConfig::kMemory; ++i) p ^= g2[i + 1] & s[i];
    out.push_back(in);
    out.push_back(static_cast<std::uint8_t>(p));
    for (int i = CodeConfig::kMemory - 1; i > 0; --i) s[i] = s[i - 1];
    s[0] = a;
  };
  for (std::uint8_t b : bits) step(b & 1);
  if (cfg.terminate) {
    // input equal to the feedback drives the register bit to zero
    for (int i = 0; i < CodeConfig::kMemory; ++i) step(feedback());
  }
  return out;
}

std::vector<std::uint32_t> make_interleaver(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<std::uint8_t> interleave(const std::vector<std::uint8_t>& bits,
                                     const std::vector<std::uint32_t>& perm) {
  std::vector<std::uint8_t> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits[perm[i]];
  return out;
}

std::vector<std::uint8_t> deinterleave(const std::vector<std::uint8_t>& bits,
                                       const std::vector<std::uint32_t>& perm) {
  std::vector<std::uint8_t> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[perm[i]] = bits[i];
  return out;
}

PilotPattern build_pilot_pattern(const FrameConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PilotPattern pat;
  pat.symbol_index = 0;
  pat.carriers.resize(cfg.users);
  pat.values.resize(cfg.users);
  const int spacing = cfg.subcarriers / cfg.pilot_count;
  Rng rng = Rng::derive(seed, {0x70696c6fULL});  // pilot value stream
  const Constellation qpsk = Constellation::make(2);
  for (int n = 0; n < cfg.users; ++n) {
    pat.carriers[n].resize(cfg.pilot_count);
    pat.values[n].resize(cfg.pilot_count);
    for (int j = 0; j < cfg.pilot_count; ++j) {
      pat.carriers[n][j] = (n % spacing) + j * spacing;
      pat.values[n][j] = qpsk.point(static_cast<int>(rng.bounded(4)));
    }
  }
  return pat;
}

bool Frame::is_pilot_position(int t, int k) const { return pilot_owner(t, k) >= 0; }

int Frame::pilot_owner(int t, int k) const {
  if (t != pilots.symbol_index) return -1;
  const int spacing = cfg.subcarriers / cfg.pilot_count;
  const int off = k % spacing;
  return off < cfg.users ? off : -1;
}

Frame assemble_frame(const std::vector<std::vector<std::uint8_t>>& info_bits,
                     const FrameConfig& cfg, const CodeConfig& code,
                     const Constellation& constellation, std::uint64_t seed) {
  cfg.validate();
  if (constellation.bits_per_symbol() != cfg.bits_per_symbol)
    throw ConfigError("constellation does not match frame config");
  if (static_cast<int>(info_bits.size()) != cfg.users)
    throw ConfigError("assemble_frame: need one bit vector per user");
  const int want = info_bits_per_user(cfg, code);
  Frame fr;
  fr.cfg = cfg;
  fr.pilots = build_pilot_pattern(cfg, seed);
  fr.info_bits = info_bits;
  fr.x.assign(static_cast<std::size_t>(cfg.symbols) * cfg.users * cfg.subcarriers, cplx(0, 0));

  for (int t = 0; t < cfg.symbols; ++t)
    for (int k = 0; k < cfg.subcarriers; ++k)
      if (fr.pilot_owner(t, k) < 0) fr.data_pos.emplace_back(t, k);

  const int q = cfg.bits_per_symbol;
  for (int n = 0; n < cfg.users; ++n) {
    if (static_cast<int>(info_bits[n].size()) != want)
      throw ConfigError("assemble_frame: wrong info bit count for user");
    std::vector<std::uint8_t> coded = rsc_encode(info_bits[n], code);
    std::vector<std::uint32_t> perm =
        make_interleaver(coded.size(), Rng::derive(seed, {0x696c76ULL, static_cast<std::uint64_t>(n)}).next());
    std::vector<std::uint8_t> inter = interleave(coded, perm);
    if (inter.size() != fr.data_pos.size() * static_cast<std::size_t>(q))
      throw ConfigError("assemble_frame: coded length does not fill the data positions");
    fr.coded_bits.push_back(inter);
    fr.perms.push_back(std::move(perm));
    for (std::size_t i = 0; i < fr.data_pos.size(); ++i) {
      auto [t, k] = fr.data_pos[i];
      fr.x[fr.x_idx(t, n, k)] = constellation.map(inter, i * q);
    }
    for (int j = 0; j < cfg.pilot_count; ++j)
      fr.x[fr.x_idx(fr.pilots.symbol_index, n, fr.pilots.carriers[n][j])] = fr.pilots.values[n][j];
  }
  return fr;
}

}  // namespace mprx
