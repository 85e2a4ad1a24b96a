#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mprx/link.hpp"

using namespace mprx;

namespace {

FrameConfig small_cfg() {
  FrameConfig fc;
  fc.symbols = 2;
  fc.users = 2;
  fc.subcarriers = 16;
  fc.pilot_count = 4;
  fc.cp_len = 4;
  fc.bits_per_symbol = 2;
  return fc;
}

Frame make_frame(const FrameConfig& fc, std::uint64_t seed) {
  CodeConfig code;
  auto cons = Constellation::make(fc.bits_per_symbol);
  const int n_info = info_bits_per_user(fc, code);
  Rng rng(seed);
  std::vector<std::vector<std::uint8_t>> bits(fc.users, std::vector<std::uint8_t>(n_info));
  for (auto& u : bits)
    for (auto& b : u) b = static_cast<std::uint8_t>(rng.next() & 1);
  return assemble_frame(bits, fc, code, cons, seed + 1);
}

ChannelRealization make_channel(const FrameConfig& fc, int taps, std::uint64_t seed) {
  Rng rng(seed);
  return sample_channel(rng, ArrayGeometry{1, 3, 1.0, 1.0}, fc.users, taps, fc.subcarriers,
                        exponential_pdp(taps));
}

}  // namespace

TEST_CASE("synthesize_rx: noiseless matches triple-loop oracle") {
  auto fc = small_cfg();
  Frame fr = make_frame(fc, 3);
  ChannelRealization ch = make_channel(fc, 4, 4);
  Rng rng(5);
  RxObservation rx = synthesize_rx(ch, fr, 0.0, rng);
  for (int t = 0; t < fc.symbols; ++t)
    for (int m = 0; m < ch.M; ++m)
      for (int k = 0; k < fc.subcarriers; ++k) {
        cplx acc(0, 0);
        for (int n = 0; n < fc.users; ++n)
          acc += ch.cfr[ch.cfr_idx(m, n, k)] * fr.x[fr.x_idx(t, n, k)];
        CHECK(std::abs(rx.y[rx.idx(t, m, k)] - acc) < 1e-12);
      }
}

TEST_CASE("synthesize_rx: noiseless single-user pilot is the channel") {
  FrameConfig fc = small_cfg();
  fc.users = 1;
  fc.pilot_count = 16;  // every subcarrier of the pilot symbol
  Frame fr = make_frame(fc, 6);
  ChannelRealization ch = make_channel(fc, 4, 7);
  Rng rng(8);
  RxObservation rx = synthesize_rx(ch, fr, 0.0, rng);
  for (int m = 0; m < ch.M; ++m)
    for (int j = 0; j < fc.pilot_count; ++j) {
      int k = fr.pilots.carriers[0][j];
      cplx w = rx.y[rx.idx(0, m, k)] / fr.pilots.values[0][j];
      CHECK(std::abs(w - ch.cfr[ch.cfr_idx(m, 0, k)]) < 1e-12);
    }
}

TEST_CASE("synthesize_rx: pure noise variance") {
  auto fc = small_cfg();
  Frame fr = make_frame(fc, 9);
  // zero channel: y is pure noise
  ChannelRealization ch = make_channel(fc, 4, 10);
  for (auto& v : ch.cfr) v = 0;
  Rng rng(11);
  const double s2 = 0.73;
  double acc = 0.0;
  long count = 0;
  while (count < 1000000) {
    RxObservation rx = synthesize_rx(ch, fr, s2, rng);
    for (auto& v : rx.y) {
      acc += std::norm(v);
      ++count;
    }
  }
  CHECK(std::fabs(acc / count - s2) / s2 < 0.02);
}

TEST_CASE("synthesize_rx: superposition in x and in W at zero noise") {
  auto fc = small_cfg();
  Frame fa = make_frame(fc, 12), fb = make_frame(fc, 13);
  ChannelRealization ch = make_channel(fc, 4, 14);
  Rng rng(15);
  RxObservation ya = synthesize_rx(ch, fa, 0.0, rng);
  RxObservation yb = synthesize_rx(ch, fb, 0.0, rng);
  Frame fsum = fa;
  for (std::size_t i = 0; i < fsum.x.size(); ++i) fsum.x[i] += fb.x[i];
  RxObservation ys = synthesize_rx(ch, fsum, 0.0, rng);
  for (std::size_t i = 0; i < ys.y.size(); ++i)
    CHECK(std::abs(ys.y[i] - (ya.y[i] + yb.y[i])) < 1e-12);

  ChannelRealization ch2 = ch;
  for (auto& v : ch2.cfr) v *= 2.0;
  RxObservation y2 = synthesize_rx(ch2, fa, 0.0, rng);
  for (std::size_t i = 0; i < y2.y.size(); ++i)
    CHECK(std::abs(y2.y[i] - 2.0 * ya.y[i]) < 1e-12);
}

TEST_CASE("spectral efficiency: reference values") {
  FrameConfig fc;
  fc.symbols = 8;
  fc.users = 8;
  fc.subcarriers = 128;
  fc.pilot_count = 16;
  CHECK(spectral_efficiency(fc, 16) == doctest::Approx(0.778).epsilon(0.0007));
  CHECK(spectral_efficiency(fc, 16) == doctest::Approx(0.7777777778).epsilon(1e-9));

  FrameConfig no;
  no.symbols = 4;
  no.users = 2;
  no.subcarriers = 32;
  no.pilot_count = 0;  // no overhead (bypasses validate, formula only)
  CHECK(spectral_efficiency(no, 0) == doctest::Approx(1.0));

  FrameConfig one;
  one.symbols = 1;
  one.users = 1;
  one.subcarriers = 64;
  one.pilot_count = 8;
  CHECK(spectral_efficiency(one, 8) == doctest::Approx(56.0 / 72.0).epsilon(1e-12));
}

TEST_CASE("ebn0 offset: reference values") {
  FrameConfig fc;
  fc.symbols = 8;
  fc.users = 8;
  fc.subcarriers = 128;
  fc.pilot_count = 16;
  const double eta = spectral_efficiency(fc, 16);
  CHECK(ebn0_offset_db(64, eta, 0.5, 8, 4) == doctest::Approx(7.112044607530303).epsilon(1e-9));
  // offset 0 when M = eta R N Q
  CHECK(ebn0_offset_db(16, 1.0, 0.5, 8, 4) == doctest::Approx(0.0).epsilon(1e-12));
  // doubling M adds 3.01 dB
  double d = ebn0_offset_db(128, eta, 0.5, 8, 4) - ebn0_offset_db(64, eta, 0.5, 8, 4);
  CHECK(d == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("ebn0_to_symbol_noise: documented normalization") {
  FrameConfig fc;
  fc.symbols = 8;
  fc.users = 8;
  fc.subcarriers = 128;
  fc.pilot_count = 16;
  fc.bits_per_symbol = 4;
  const double eta = spectral_efficiency(fc, 16);
  const double ebn0 = 10.0;
  const double s2 = ebn0_to_symbol_noise(ebn0, fc, 64, 0.5, eta);
  const double esn0_db = ebn0 - ebn0_offset_db(64, eta, 0.5, 8, 4);
  CHECK(s2 == doctest::Approx(8.0 / std::pow(10.0, esn0_db / 10.0)).epsilon(1e-12));
}
