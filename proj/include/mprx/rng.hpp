#ifndef MPRX_RNG_HPP
#define MPRX_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>

namespace mprx {

/// xoshiro256++ generator with splitmix64 seeding.
///
/// The standard library distributions are implementation-defined, so every
/// draw used by the simulator (uniform, bounded int, Gaussian) is produced
/// here to keep results byte-identical across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
    cached_valid_ = false;
  }

  /// Derives an independent stream from a master seed and a list of ids
  /// (e.g. {ebn0_index, trial_index}). Same inputs, same stream.
  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t x = master;
    for (std::uint64_t id : ids) {
      std::uint64_t t = id + 0x9e3779b97f4a7c15ULL;
      x = mix(x ^ mix(t));
    }
    return Rng(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0,n), rejection method.
  std::uint64_t bounded(std::uint64_t n) {
    if (n < 2) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller (pairs cached).
  double gauss() {
    if (cached_valid_) {
      cached_valid_ = false;
      return cached_;
    }
    // u1 in (0,1] so the log is finite
    double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    cached_valid_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex normal, E|z|^2 = 1.
  std::complex<double> cgauss() {
    double re = gauss();
    double im = gauss();
    return {re * 0.7071067811865475244, im * 0.7071067811865475244};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    return mix(state);
  }

  std::uint64_t s_[4]{};
  double cached_ = 0.0;
  bool cached_valid_ = false;
};

}  // namespace mprx

#endif  // MPRX_RNG_HPP
