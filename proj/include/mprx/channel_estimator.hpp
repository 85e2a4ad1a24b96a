#ifndef MPRX_CHANNEL_ESTIMATOR_HPP
#define MPRX_CHANNEL_ESTIMATOR_HPP

#include <iosfwd>
#include <vector>

#include "mprx/channel_model.hpp"
#include "mprx/ep_detector.hpp"

namespace mprx {

/// Gaussian message passing over the CIR taps, driven by the f->w messages
/// stored in the detector state (pilot entries are fixed, data entries are
/// refreshed by each detection pass). Learns the PDP by variational EM
/// unless oracle powers are installed.
struct EstimatorState {
  int M = 0, N = 0, K = 0, L = 0;
  // tap beliefs and their precision-scaled means
  std::vector<cplx> h_mean;   // M x N x L
  std::vector<double> h_var;
  std::vector<cplx> xi;
  // residual correction per subcarrier
  std::vector<cplx> eps;      // M x N x K
  // g -> w messages and the CFR posterior
  std::vector<cplx> gw_mean;  // M x N x K
  std::vector<double> gw_var;
  std::vector<cplx> w_post_mean;
  std::vector<double> w_post_var;
  std::vector<double> inv_tau_g;  // last 1/tau_g (0 where no information)
  // prior precision per (n,l): learned 1/p_nl or oracle 1/alpha_nl
  std::vector<double> prior_prec;
  // Gamma belief of the precision variables: shape M, rate per (n,l)
  std::vector<double> gamma_rate;
  bool oracle_pdp = false;

  std::size_t tap(int m, int n, int l) const {
    return (static_cast<std::size_t>(m) * N + n) * L + l;
  }
  std::size_t sc(int m, int n, int k) const {
    return (static_cast<std::size_t>(m) * N + n) * K + k;
  }
  std::size_t nl(int n, int l) const { return static_cast<std::size_t>(n) * L + l; }
};

/// h = 0, |h|^2 + nu = 1/L, xi = 0, eps = 0; prior precision L per tap.
EstimatorState init_estimator(int M, int N, int K, int L);

/// Installs the true tap powers: the tap prior becomes CN(0, alpha_nl)
/// instead of the learned one (same profile for every user).
void oracle_pdp_mode(EstimatorState& st, const PowerDelayProfile& pdp);

/// Learned power p_nl = (1/M) sum_m (|h|^2 + nu) and the Gamma belief
/// Gam(gamma; M, sum_m(|h|^2 + nu)); refreshes prior_prec unless oracle.
void pdp_update(EstimatorState& st);

double learned_power(const EstimatorState& st, int n, int l);

/// Fixed channel messages on the pilot positions:
/// N(w; y/x, sigma^2/|x|^2), written into the detector's f2w grid.
void pilot_messages(const RxObservation& rx, const Frame& frame, double noise_var,
                    DetectorState& det);

/// Runs inner_iters sweeps of the tap-domain message passing for every
/// (m,n) link, then refreshes the w posterior and the w->f messages in the
/// detector state.
void gmp_pass(EstimatorState& st, DetectorState& det, int inner_iters,
              bool zero_based_taps = false);

/// The DFT weighting matrix (K x L, row-major) used by the estimator.
std::vector<cplx> dft_weights(int K, int L, bool zero_based_taps = false);

/// Diagnostic dump: one CSV row per (user, tap) with the current learned
/// power (header written when turbo_iter == 1).
void append_learned_pdp_csv(const EstimatorState& st, int turbo_iter, std::ostream& out);

}  // namespace mprx

#endif  // MPRX_CHANNEL_ESTIMATOR_HPP
