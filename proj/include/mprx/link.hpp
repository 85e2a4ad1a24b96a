#ifndef MPRX_LINK_HPP
#define MPRX_LINK_HPP

#include <vector>

#include "mprx/channel_model.hpp"
#include "mprx/common.hpp"
#include "mprx/rng.hpp"
#include "mprx/txchain.hpp"

namespace mprx {

/// Frequency-domain received tensor y (T x M x K) plus the noise power.
struct RxObservation {
  int T = 0, M = 0, K = 0;
  std::vector<cplx> y;
  double noise_var = 0.0;
  std::size_t idx(int t, int m, int k) const {
    return (static_cast<std::size_t>(t) * M + m) * K + k;
  }
};

/// y_tmk = sum_n w_mnk x_tnk + CN(0, noise_var).
RxObservation synthesize_rx(const ChannelRealization& ch, const Frame& frame,
                            double noise_var, Rng& rng);

/// eta = (T N K - N^2 K_p) / (T N (L_cp + K)).
double spectral_efficiency(const FrameConfig& cfg, int cp_len);

/// 10 log10(M / (eta R N Q)), the gap between Eb/N0 and Es/N0.
double ebn0_offset_db(int antennas, double eta, double rate, int users, int bits_per_symbol);

/// Noise power for a target Eb/N0. Es is the total received symbol energy
/// per subcarrier use summed over the N unit-power users, so
/// sigma^2 = N / 10^(EsN0/10) with EsN0 = EbN0 - offset.
double ebn0_to_symbol_noise(double ebn0_db, const FrameConfig& cfg, int antennas,
                            double rate, double eta);

}  // namespace mprx

#endif  // MPRX_LINK_HPP
