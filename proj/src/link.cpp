#include "mprx/link.hpp"

#include <cmath>

namespace mprx {

RxObservation synthesize_rx(const ChannelRealization& ch, const Frame& frame,
                            double noise_var, Rng& rng) {
  const int T = frame.cfg.symbols, N = frame.cfg.users, K = frame.cfg.subcarriers;
  if (ch.N != N || ch.K != K) throw ConfigError("channel does not match frame");
  RxObservation rx;
  rx.T = T;
  rx.M = ch.M;
  rx.K = K;
  rx.noise_var = noise_var;
  rx.y.resize(static_cast<std::size_t>(T) * ch.M * K);
  const double ns = std::sqrt(noise_var);
  for (int t = 0; t < T; ++t)
    for (int m = 0; m < ch.M; ++m)
      for (int k = 0; k < K; ++k) {
        cplx acc(0, 0);
        for (int n = 0; n < N; ++n)
          acc += ch.cfr[ch.cfr_idx(m, n, k)] * frame.x[frame.x_idx(t, n, k)];
        if (noise_var > 0) acc += ns * rng.cgauss();
        rx.y[rx.idx(t, m, k)] = acc;
      }
  return rx;
}

double spectral_efficiency(const FrameConfig& cfg, int cp_len) {
  const double T = cfg.symbols, N = cfg.users, K = cfg.subcarriers, Kp = cfg.pilot_count;
  return (T * N * K - N * N * Kp) / (T * N * (cp_len + K));
}

double ebn0_offset_db(int antennas, double eta, double rate, int users, int bits_per_symbol) {
  return 10.0 * std::log10(antennas / (eta * rate * users * bits_per_symbol));
}

double ebn0_to_symbol_noise(double ebn0_db, const FrameConfig& cfg, int antennas,
                            double rate, double eta) {
  const double esn0_db =
      ebn0_db - ebn0_offset_db(antennas, eta, rate, cfg.users, cfg.bits_per_symbol);
  return cfg.users / std::pow(10.0, esn0_db / 10.0);
}

}  // namespace mprx
