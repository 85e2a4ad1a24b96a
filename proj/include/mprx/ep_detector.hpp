#ifndef MPRX_EP_DETECTOR_HPP
#define MPRX_EP_DETECTOR_HPP

#include <cstdint>
#include <vector>

#include "mprx/constellation.hpp"
#include "mprx/gaussian_msg.hpp"
#include "mprx/link.hpp"
#include "mprx/txchain.hpp"

namespace mprx {

/// Probability vector over the constellation.
struct DiscreteMsg {
  std::vector<double> p;
  void normalize();
};

/// Extrinsic LLRs are clamped to this magnitude before they leave the
/// detector or the decoder feedback path.
inline constexpr double kLlrClamp = 50.0;

struct DetectorDims {
  int T = 0, M = 0, N = 0, K = 0;
  std::size_t edges() const { return static_cast<std::size_t>(T) * M * K * N; }
  std::size_t symbols() const { return static_cast<std::size_t>(T) * N * K; }
  std::size_t links() const { return static_cast<std::size_t>(M) * N * K; }
  std::size_t edge(int t, int m, int k, int n) const {
    return ((static_cast<std::size_t>(t) * M + m) * K + k) * N + n;
  }
  std::size_t sym(int t, int n, int k) const {
    return (static_cast<std::size_t>(t) * N + n) * K + k;
  }
  std::size_t link(int m, int n, int k) const {
    return (static_cast<std::size_t>(m) * N + n) * K + k;
  }
};

/// All per-edge messages and per-variable beliefs carried across turbo
/// iterations. Means/variances are stored as parallel flat arrays.
struct DetectorState {
  DetectorDims dim;
  // symbol -> transition messages (moments of the incoming symbol message)
  std::vector<cplx> x2f_mean;
  std::vector<double> x2f_var;
  // channel -> transition messages (from the estimator)
  std::vector<cplx> w2f_mean;
  std::vector<double> w2f_var;
  // transition -> symbol / channel messages
  std::vector<cplx> f2x_mean;
  std::vector<double> f2x_var;
  std::vector<cplx> f2w_mean;
  std::vector<double> f2w_var;
  std::vector<std::uint8_t> f2w_valid;  // pilot entries fixed, data entries set per pass
  // interference Gaussianization per edge
  std::vector<cplx> z;
  std::vector<double> tau;
  // per-symbol posterior moments and the combined message to the mapper
  std::vector<cplx> x_post_mean;
  std::vector<double> x_post_var;
  std::vector<cplx> mapper_mean;   // zeta
  std::vector<double> mapper_var;  // gamma
  // channel posterior means/vars from the previous estimation pass
  std::vector<cplx> w_post_mean;
  std::vector<double> w_post_var;
  // data-position mask per (t,k)
  std::vector<std::uint8_t> active;
  // fraction of the previous f->x / f->w message kept per update (0 = off)
  double damping = 0.0;
  std::size_t pos(int t, int k) const { return static_cast<std::size_t>(t) * dim.K + k; }
};

/// Cold-start values: x2f = (0,1), w2f = (0,1), posteriors (0,1).
DetectorState init_detector(const DetectorDims& dim, const std::vector<std::uint8_t>& active);

/// z and tau for every edge of the active positions, O(N) per (t,m,k) via
/// sum-minus-self.
void interference_stats(DetectorState& st, const RxObservation& rx, double noise_var);

/// Quadratic-approximation messages toward the channel weights (fills f2w).
void ep_msg_to_w(DetectorState& st);

/// Mirror messages toward the symbols (fills f2x).
void ep_msg_to_x(DetectorState& st);

/// Gaussian product across antennas: (zeta, gamma) per active symbol.
void combine_to_mapper(DetectorState& st);

/// Per-bit Bernoulli product of a priori LLRs under the Gray labeling.
DiscreteMsg mapper_to_symbol_prior(const std::vector<double>& la_bits,
                                   const Constellation& cons);

/// Extrinsic LLRs of one symbol from channel log-weights logw[a] (any
/// additive normalization), a priori LLRs la, under the Gray labeling.
void extrinsic_llrs_logw(const std::vector<double>& logw, const std::vector<double>& la_bits,
                         const Constellation& cons, double* le_out);

/// Extrinsic LLRs for the Gaussian mapper message N(zeta, gamma).
void extrinsic_llrs(cplx zeta, double gamma, const std::vector<double>& la_bits,
                    const Constellation& cons, double* le_out);

struct SymbolPosterior {
  DiscreteMsg belief;
  cplx mean;
  double var;
};

/// beta(a) proportional to prior(a) * N(a; zeta, gamma), with exact first
/// two moments (log-domain normalization).
SymbolPosterior symbol_posterior_project(const DiscreteMsg& prior, cplx zeta, double gamma,
                                         const Constellation& cons);

/// EP division of the symbol belief by one f->x message. Falls back to the
/// posterior when the division is invalid.
GaussianMsg ep_msg_x_to_f(const GaussianMsg& posterior, const GaussianMsg& f2x);

/// Phase after decoding: new priors -> posteriors -> x->f messages.
void detector_update_symbols(DetectorState& st, const Frame& frame, const Constellation& cons,
                             const std::vector<std::vector<double>>& la);

/// Extrinsic LLRs for all users from the current mapper messages
/// (la/le indexed per user in interleaved coded-bit order).
void detector_extrinsic_llrs(const DetectorState& st, const Frame& frame,
                             const Constellation& cons,
                             const std::vector<std::vector<double>>& la,
                             std::vector<std::vector<double>>* le);

// ---------------------------------------------------------------------------
// BP-GA baseline: discrete symbol messages with exclusion sums and a
// Gaussian-mixture collapse toward the channel weights.

struct BpgaState {
  int points = 0;                 // |A|
  std::vector<double> delta;      // per edge x |A|: Delta_{f->x}(a)
  std::vector<double> msg;        // per edge x |A|: normalized mu_{x->f}(a)
  std::size_t at(std::size_t e, int a) const { return e * points + a; }
};

BpgaState init_bpga(const DetectorDims& dim, const Constellation& cons);

/// Moment-matched collapse of sum_a theta(a) N(w; z/a, tau/|a|^2).
GaussianMsg bpga_mixture_collapse(cplx z, double tau, const std::vector<double>& theta,
                                  const Constellation& cons);

/// f->w messages: mixture collapse weighted by the previous discrete
/// messages (run against the interference stats of the same vintage).
void bpga_msg_to_w(DetectorState& st, const BpgaState& bp, const Constellation& cons);

/// Delta table for the symbol side of the pass.
void bpga_deltas(DetectorState& st, BpgaState& bp, const Constellation& cons);

/// Extrinsic LLRs from the Delta exclusion sums (all antennas).
void bpga_extrinsic_llrs(const DetectorState& st, const BpgaState& bp, const Frame& frame,
                         const Constellation& cons, const std::vector<std::vector<double>>& la,
                         std::vector<std::vector<double>>* le);

/// Post-decode half: per-edge discrete messages with the new priors and
/// their moments (fills x2f and the symbol posterior).
void bpga_update_symbols(DetectorState& st, BpgaState& bp, const Frame& frame,
                         const Constellation& cons, const std::vector<std::vector<double>>& la);

// ---------------------------------------------------------------------------
// Second-order expansion of H(z, tau, u) = |z|^2/tau + ln tau + |u|^2/nu
// in conjugate coordinates.

struct WirtingerExpansion {
  double value;  // H at the expansion point
  cplx dz;       // z0*/tau0, inside 2 Re{ dz * (z - z0) }
  cplx du;       // u0*/nu, inside 2 Re{ du * (u - u0) }
  double dtau;   // 1/tau0 - |z0|^2/tau0^2, times (tau - tau0)
  double dzz;    // 1/tau0, times |z - z0|^2
  double duu;    // 1/nu, times |u - u0|^2

  double eval(cplx delta_z, double delta_tau, cplx delta_u) const {
    return value + 2.0 * (dz * delta_z).real() + dtau * delta_tau +
           2.0 * (du * delta_u).real() + dzz * std::norm(delta_z) + duu * std::norm(delta_u);
  }
};

WirtingerExpansion wirtinger_expand(cplx z0, double tau0, cplx u0, double nu);

}  // namespace mprx

#endif  // MPRX_EP_DETECTOR_HPP
