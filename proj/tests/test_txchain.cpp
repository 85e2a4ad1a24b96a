#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "mprx/rng.hpp"
#include "mprx/txchain.hpp"

using namespace mprx;

namespace {

// independent reference encoder: polynomial arithmetic over bit vectors,
// structured differently from the production shift-register version
std::vector<std::uint8_t> reference_rsc(const std::vector<std::uint8_t>& u_in) {
  const int g1[7] = {1, 0, 0, 1, 1, 1, 1};  // 117 octal, D^0..D^6
  const int g2[7] = {1, 1, 0, 1, 1, 0, 1};  // 155 octal
  std::vector<std::uint8_t> u = u_in;
  std::vector<std::uint8_t> a;  // internal sequence: a_t = u_t ^ sum_{i>=1} g1_i a_{t-i}
  std::vector<std::uint8_t> out;
  auto fb_at = [&](std::size_t t) {
    int fb = 0;
    for (int i = 1; i < 7; ++i)
      if (g1[i] && t >= static_cast<std::size_t>(i)) fb ^= a[t - i];
    return fb;
  };
  std::size_t total = u.size() + 6;
  for (std::size_t t = 0; t < total; ++t) {
    std::uint8_t ut;
    if (t < u.size()) {
      ut = u[t];
    } else {
      ut = static_cast<std::uint8_t>(fb_at(t));  // termination
    }
    std::uint8_t at = static_cast<std::uint8_t>(ut ^ fb_at(t));
    a.push_back(at);
    int p = 0;
    for (int i = 0; i < 7; ++i)
      if (g2[i] && t >= static_cast<std::size_t>(i)) p ^= a[t - i];
    out.push_back(ut);
    out.push_back(static_cast<std::uint8_t>(p));
  }
  return out;
}

}  // namespace

TEST_CASE("rsc_encode: all zero input stays zero") {
  std::vector<std::uint8_t> u(20, 0);
  for (auto b : rsc_encode(u, CodeConfig{})) CHECK(b == 0);
}

TEST_CASE("rsc_encode: output length with termination") {
  for (int len : {1, 7, 64}) {
    std::vector<std::uint8_t> u(len, 1);
    CHECK(rsc_encode(u, CodeConfig{}).size() == 2u * (len + 6));
  }
}

TEST_CASE("rsc_encode: impulse response matches the reference encoder") {
  std::vector<std::uint8_t> u(32, 0);
  u[0] = 1;
  CHECK(rsc_encode(u, CodeConfig{}) == reference_rsc(u));
}

TEST_CASE("rsc_encode: random blocks match the reference encoder") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> u(40);
    for (auto& b : u) b = static_cast<std::uint8_t>(rng.next() & 1);
    CHECK(rsc_encode(u, CodeConfig{}) == reference_rsc(u));
  }
}

TEST_CASE("rsc_encode: linear over GF(2) without termination") {
  CodeConfig open;
  open.terminate = false;
  Rng rng(9);
  std::vector<std::uint8_t> a(50), b(50), ab(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = static_cast<std::uint8_t>(rng.next() & 1);
    b[i] = static_cast<std::uint8_t>(rng.next() & 1);
    ab[i] = a[i] ^ b[i];
  }
  auto ca = rsc_encode(a, open), cb = rsc_encode(b, open), cab = rsc_encode(ab, open);
  for (std::size_t i = 0; i < cab.size(); ++i) CHECK(cab[i] == (ca[i] ^ cb[i]));
}

TEST_CASE("rsc_encode: empty input rejected") {
  CHECK_THROWS_AS(rsc_encode({}, CodeConfig{}), ConfigError);
}

TEST_CASE("interleaver: identity for length 1, roundtrip, determinism") {
  CHECK(make_interleaver(1, 5) == std::vector<std::uint32_t>{0});

  Rng rng(10);
  std::vector<std::uint8_t> bits(10000);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next() & 1);
  auto perm = make_interleaver(bits.size(), 77);
  CHECK(deinterleave(interleave(bits, perm), perm) == bits);

  CHECK(make_interleaver(512, 123) == make_interleaver(512, 123));
  CHECK(make_interleaver(512, 123) != make_interleaver(512, 124));
}

TEST_CASE("gray map: QPSK 00 maps to (1+j)/sqrt(2)") {
  auto c = Constellation::make(2);
  CHECK(std::abs(c.point(0) - cplx(M_SQRT1_2, M_SQRT1_2)) < 1e-15);
}

TEST_CASE("gray map: unit average energy, distinct points") {
  for (int q : {2, 4, 6}) {
    auto c = Constellation::make(q);
    double e = 0.0;
    std::set<std::pair<double, double>> seen;
    for (int a = 0; a < c.size(); ++a) {
      e += std::norm(c.point(a));
      seen.insert({c.point(a).real(), c.point(a).imag()});
    }
    CHECK(std::fabs(e / c.size() - 1.0) < 1e-12);
    CHECK(static_cast<int>(seen.size()) == c.size());
  }
}

TEST_CASE("gray map: single-bit flips move along one axis only") {
  for (int q : {2, 4, 6}) {
    auto c = Constellation::make(q);
    for (int a = 0; a < c.size(); ++a)
      for (int bit = 0; bit < q; ++bit) {
        int b = a ^ (1 << (q - 1 - bit));
        double dre = std::fabs(c.point(a).real() - c.point(b).real());
        double dim = std::fabs(c.point(a).imag() - c.point(b).imag());
        CHECK((dre < 1e-12 || dim < 1e-12));
      }
  }
}

TEST_CASE("gray map: invalid Q rejected") {
  CHECK_THROWS_AS(Constellation::make(3), ConfigError);
  CHECK_THROWS_AS(Constellation::make(8), ConfigError);
}

TEST_CASE("gray map: Gray property along each axis") {
  // walking the PAM levels in amplitude order flips exactly one label bit
  for (int q : {2, 4, 6}) {
    auto c = Constellation::make(q);
    const int half = q / 2;
    const int levels = 1 << half;
    // collect labels of the I axis at fixed Q half (all zero)
    std::vector<std::pair<double, int>> axis;
    for (int g = 0; g < levels; ++g) {
      int label = g << half;
      axis.push_back({c.point(label).real(), g});
    }
    std::sort(axis.begin(), axis.end());
    for (std::size_t i = 1; i < axis.size(); ++i) {
      int x = axis[i - 1].second ^ axis[i].second;
      CHECK(__builtin_popcount(static_cast<unsigned>(x)) == 1);
    }
  }
}

TEST_CASE("pilot pattern: single user, full pilots") {
  FrameConfig fc;
  fc.symbols = 2;
  fc.users = 1;
  fc.subcarriers = 8;
  fc.pilot_count = 8;
  fc.bits_per_symbol = 2;
  auto pat = build_pilot_pattern(fc, 1);
  REQUIRE(pat.carriers.size() == 1);
  CHECK(pat.carriers[0].size() == 8);
  for (int j = 0; j < 8; ++j) CHECK(pat.carriers[0][j] == j);
}

TEST_CASE("pilot pattern: paper geometry covers the pilot symbol") {
  FrameConfig fc;
  fc.symbols = 8;
  fc.users = 8;
  fc.subcarriers = 128;
  fc.pilot_count = 16;
  fc.bits_per_symbol = 4;
  auto pat = build_pilot_pattern(fc, 2);
  std::set<int> all;
  for (int n = 0; n < 8; ++n) {
    CHECK(pat.carriers[n].size() == 16);
    for (int k : pat.carriers[n]) CHECK(all.insert(k).second);  // disjoint
  }
  CHECK(all.size() == 128);  // full coverage
  for (int n = 0; n < 8; ++n)
    for (auto v : pat.values[n]) CHECK(std::fabs(std::abs(v) - 1.0) < 1e-12);
}

TEST_CASE("pilot pattern: infeasible geometry rejected") {
  FrameConfig fc;
  fc.symbols = 2;
  fc.users = 8;
  fc.subcarriers = 32;
  fc.pilot_count = 8;  // N*K_p = 64 > K
  fc.bits_per_symbol = 2;
  CHECK_THROWS_AS(build_pilot_pattern(fc, 1), ConfigError);
  fc.pilot_count = 5;  // K not divisible
  CHECK_THROWS_AS(build_pilot_pattern(fc, 1), ConfigError);
}

TEST_CASE("assemble_frame: paper config data position count") {
  FrameConfig fc;
  fc.symbols = 8;
  fc.users = 8;
  fc.subcarriers = 128;
  fc.pilot_count = 16;
  fc.bits_per_symbol = 4;
  CHECK(data_positions_per_user(fc) == 896);
}

TEST_CASE("assemble_frame: symbol roundtrip and pilot placement") {
  FrameConfig fc;
  fc.symbols = 2;
  fc.users = 2;
  fc.subcarriers = 16;
  fc.pilot_count = 4;
  fc.bits_per_symbol = 2;
  CodeConfig code;
  auto cons = Constellation::make(2);
  const int n_info = info_bits_per_user(fc, code);
  CHECK(n_info == (2 * 16 - 2 * 4) * 2 / 2 - 6);
  Rng rng(12);
  std::vector<std::vector<std::uint8_t>> bits(2, std::vector<std::uint8_t>(n_info));
  for (auto& u : bits)
    for (auto& b : u) b = static_cast<std::uint8_t>(rng.next() & 1);
  Frame fr = assemble_frame(bits, fc, code, cons, 7);

  // data symbols reproduce the interleaved coded bits
  for (int n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < fr.data_pos.size(); ++i) {
      auto [t, k] = fr.data_pos[i];
      cplx want = cons.map(fr.coded_bits[n], i * 2);
      CHECK(std::abs(fr.x[fr.x_idx(t, n, k)] - want) < 1e-15);
    }
  // pilots on own carriers, zeros on the other user's carriers
  for (int n = 0; n < 2; ++n)
    for (int j = 0; j < fc.pilot_count; ++j) {
      int k = fr.pilots.carriers[n][j];
      CHECK(std::abs(fr.x[fr.x_idx(0, n, k)] - fr.pilots.values[n][j]) < 1e-15);
      CHECK(std::abs(fr.x[fr.x_idx(0, 1 - n, k)]) == 0.0);
    }
  // frame energy on data positions is 1 on average (unit energy constellation)
  double e = 0.0;
  for (int n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < fr.data_pos.size(); ++i) {
      auto [t, k] = fr.data_pos[i];
      e += std::norm(fr.x[fr.x_idx(t, n, k)]);
    }
  CHECK(e / (2 * fr.data_pos.size()) == doctest::Approx(1.0));  // QPSK is constant modulus
}

TEST_CASE("assemble_frame: wrong bit count rejected") {
  FrameConfig fc;
  fc.symbols = 2;
  fc.users = 1;
  fc.subcarriers = 16;
  fc.pilot_count = 4;
  fc.bits_per_symbol = 2;
  std::vector<std::vector<std::uint8_t>> bits(1, std::vector<std::uint8_t>(3, 0));
  CHECK_THROWS_AS(assemble_frame(bits, fc, CodeConfig{}, Constellation::make(2), 1),
                  ConfigError);
}
