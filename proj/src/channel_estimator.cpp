#include "mprx/channel_estimator.hpp"

#include <cmath>
#include <ostream>

namespace mprx {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::vector<cplx> dft_weights(int K, int L, bool zero_based_taps) {
  std::vector<cplx> phi(static_cast<std::size_t>(K) * L);
  for (int k = 1; k <= K; ++k)
    for (int l = 0; l < L; ++l) {
      const double delay = zero_based_taps ? l : l + 1;
      phi[static_cast<std::size_t>(k - 1) * L + l] = std::polar(1.0, -kTwoPi * delay * k / K);
    }
  return phi;
}

EstimatorState init_estimator(int M, int N, int K, int L) {
  EstimatorState st;
  st.M = M;
  st.N = N;
  st.K = K;
  st.L = L;
  const std::size_t taps = static_cast<std::size_t>(M) * N * L;
  const std::size_t scs = static_cast<std::size_t>(M) * N * K;
  st.h_mean.assign(taps, cplx(0, 0));
  st.h_var.assign(taps, 1.0 / L);
  st.xi.assign(taps, cplx(0, 0));
  st.eps.assign(scs, cplx(0, 0));
  st.gw_mean.assign(scs, cplx(0, 0));
  st.gw_var.assign(scs, 1.0);
  st.w_post_mean.assign(scs, cplx(0, 0));
  st.w_post_var.assign(scs, 1.0);
  st.inv_tau_g.assign(scs, 0.0);
  st.prior_prec.assign(static_cast<std::size_t>(N) * L, static_cast<double>(L));
  st.gamma_rate.assign(static_cast<std::size_t>(N) * L, static_cast<double>(M) / L);
  return st;
}

void oracle_pdp_mode(EstimatorState& st, const PowerDelayProfile& pdp) {
  if (pdp.taps() != st.L) throw ConfigError("oracle pdp has wrong tap count");
  st.oracle_pdp = true;
  for (int n = 0; n < st.N; ++n)
    for (int l = 0; l < st.L; ++l) st.prior_prec[st.nl(n, l)] = 1.0 / pdp.power[l];
}

void pdp_update(EstimatorState& st) {
  for (int n = 0; n < st.N; ++n)
    for (int l = 0; l < st.L; ++l) {
      double rate = 0.0;
      for (int m = 0; m < st.M; ++m)
        rate += std::norm(st.h_mean[st.tap(m, n, l)]) + st.h_var[st.tap(m, n, l)];
      st.gamma_rate[st.nl(n, l)] = rate;
      if (!st.oracle_pdp) st.prior_prec[st.nl(n, l)] = static_cast<double>(st.M) / rate;
    }
}

double learned_power(const EstimatorState& st, int n, int l) {
  return st.gamma_rate[st.nl(n, l)] / static_cast<double>(st.M);
}

void append_learned_pdp_csv(const EstimatorState& st, int turbo_iter, std::ostream& out) {
  if (turbo_iter == 1) out << "turbo_iter,user,tap,learned_power\n";
  for (int n = 0; n < st.N; ++n)
    for (int l = 0; l < st.L; ++l)
      out << turbo_iter << ',' << n << ',' << l << ',' << learned_power(st, n, l) << '\n';
}

void pilot_messages(const RxObservation& rx, const Frame& frame, double noise_var,
                    DetectorState& det) {
  const auto& d = det.dim;
  const int tp = frame.pilots.symbol_index;
  for (int n = 0; n < frame.cfg.users; ++n) {
    for (int j = 0; j < frame.cfg.pilot_count; ++j) {
      const int k = frame.pilots.carriers[n][j];
      const cplx x = frame.pilots.values[n][j];
      if (std::norm(x) == 0.0) throw ConfigError("pilot symbol must be nonzero");
      for (int m = 0; m < d.M; ++m) {
        const std::size_t e = d.edge(tp, m, k, n);
        det.f2w_mean[e] = rx.y[rx.idx(tp, m, k)] / x;
        det.f2w_var[e] = noise_var / std::norm(x);
        det.f2w_valid[e] = 1;
      }
    }
  }
}

void gmp_pass(EstimatorState& st, DetectorState& det, int inner_iters, bool zero_based_taps) {
  const auto& d = det.dim;
  const int K = st.K, L = st.L;
  const std::vector<cplx> phi = dft_weights(K, L, zero_based_taps);

  std::vector<double> rho(K);
  std::vector<cplx> qv(K), zq(K);
  std::vector<std::uint8_t> pinned(K);
  std::vector<cplx> pin_mean(K);

  for (int m = 0; m < st.M; ++m)
    for (int n = 0; n < st.N; ++n) {
      // accumulate the w -> g combine (all f -> w products) once per link;
      // a zero-variance message (noiseless pilot) pins the subcarrier
      for (int k = 0; k < K; ++k) {
        double p = 0.0;
        cplx q(0, 0);
        pinned[k] = 0;
        for (int t = 0; t < d.T; ++t) {
          const std::size_t e = d.edge(t, m, k, n);
          if (!det.f2w_valid[e]) continue;
          if (det.f2w_var[e] <= 0.0) {
            pinned[k] = 1;
            pin_mean[k] = det.f2w_mean[e];
            continue;
          }
          const double w = 1.0 / det.f2w_var[e];
          p += w;
          q += det.f2w_mean[e] * w;
        }
        rho[k] = p;
        qv[k] = q;
      }

      for (int it = 0; it < inner_iters; ++it) {
        double s = 0.0;
        for (int l = 0; l < L; ++l) s += st.h_var[st.tap(m, n, l)];
        // z_g / tau_g without forming either explicitly:
        // z = q/rho - (Phi h) + eps, tau = 1/rho + s
        double inv_tau_sum = 0.0;
        for (int k = 0; k < K; ++k) {
          cplx pred(0, 0);
          const cplx* row = &phi[static_cast<std::size_t>(k) * L];
          for (int l = 0; l < L; ++l) pred += row[l] * st.h_mean[st.tap(m, n, l)];
          double inv_tau;
          if (pinned[k]) {
            inv_tau = 1.0 / s;
            zq[k] = (pin_mean[k] - pred + st.eps[st.sc(m, n, k)]) * inv_tau;
          } else if (rho[k] > 0.0) {
            const double denom = 1.0 + rho[k] * s;
            inv_tau = rho[k] / denom;
            zq[k] = (qv[k] - rho[k] * (pred - st.eps[st.sc(m, n, k)])) / denom;
          } else {
            inv_tau = 0.0;
            zq[k] = cplx(0, 0);
          }
          st.inv_tau_g[st.sc(m, n, k)] = inv_tau;
          inv_tau_sum += inv_tau;
        }
        double s_new = 0.0;
        for (int l = 0; l < L; ++l) {
          cplx acc(0, 0);
          for (int k = 0; k < K; ++k)
            acc += std::conj(phi[static_cast<std::size_t>(k) * L + l]) * zq[k];
          const std::size_t i = st.tap(m, n, l);
          const cplx xi = acc + st.h_mean[i] * inv_tau_sum;
          const double nu = 1.0 / (st.prior_prec[st.nl(n, l)] + inv_tau_sum);
          st.xi[i] = xi;
          st.h_var[i] = nu;
          st.h_mean[i] = nu * xi;
          s_new += nu;
        }
        for (int k = 0; k < K; ++k) {
          cplx pred(0, 0);
          const cplx* row = &phi[static_cast<std::size_t>(k) * L];
          for (int l = 0; l < L; ++l) pred += row[l] * st.h_mean[st.tap(m, n, l)];
          const std::size_t i = st.sc(m, n, k);
          st.eps[i] = zq[k] * s_new;
          st.gw_mean[i] = pred - st.eps[i];
          st.gw_var[i] = s_new;
        }
      }

      // posterior and w -> f messages
      for (int k = 0; k < K; ++k) {
        const std::size_t i = st.sc(m, n, k);
        if (pinned[k]) {
          st.w_post_mean[i] = pin_mean[k];
          st.w_post_var[i] = kVarFloor;
        } else {
          const double prec = 1.0 / st.gw_var[i] + rho[k];
          const cplx qp = st.gw_mean[i] / st.gw_var[i] + qv[k];
          st.w_post_var[i] = 1.0 / prec;
          st.w_post_mean[i] = qp / prec;
        }
        const GaussianMsg post{st.w_post_mean[i], st.w_post_var[i]};
        for (int t = 0; t < d.T; ++t) {
          const std::size_t e = d.edge(t, m, k, n);
          GaussianMsg out = det.f2w_valid[e]
                                ? gaussian_divide(post, {det.f2w_mean[e], det.f2w_var[e]})
                                : post;
          det.w2f_mean[e] = out.mean;
          det.w2f_var[e] = out.var;
        }
        det.w_post_mean[d.link(m, n, k)] = st.w_post_mean[i];
        det.w_post_var[d.link(m, n, k)] = st.w_post_var[i];
      }
    }
}

}  // namespace mprx
