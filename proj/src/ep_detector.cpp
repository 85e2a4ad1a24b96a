#include "mprx/ep_detector.hpp"

#include <algorithm>
#include <cmath>

namespace mprx {

namespace {

inline double clamp_llr(double v) {
  return v > kLlrClamp ? kLlrClamp : (v < -kLlrClamp ? -kLlrClamp : v);
}

// ln P(c = bit) for LLR la = ln P(1)/P(0), computed stably for large |la|
inline double log_bit_prob(double la, int bit) {
  // ln(e^(bit*la) / (1 + e^la))
  double m = la > 0 ? la : 0.0;
  double lse = m + std::log(std::exp(-m) + std::exp(la - m));
  return bit ? la - lse : -lse;
}

}  // namespace

void DiscreteMsg::normalize() {
  double s = 0.0;
  for (double v : p) s += v;
  if (s <= 0.0) {
    double u = 1.0 / static_cast<double>(p.size());
    for (double& v : p) v = u;
    return;
  }
  for (double& v : p) v /= s;
}

DetectorState init_detector(const DetectorDims& dim, const std::vector<std::uint8_t>& active) {
  DetectorState st;
  st.dim = dim;
  const std::size_t e = dim.edges(), s = dim.symbols(), c = dim.links();
  st.x2f_mean.assign(e, cplx(0, 0));
  st.x2f_var.assign(e, 1.0);
  st.w2f_mean.assign(e, cplx(0, 0));
  st.w2f_var.assign(e, 1.0);
  st.f2x_mean.assign(e, cplx(0, 0));
  st.f2x_var.assign(e, 1.0);
  st.f2w_mean.assign(e, cplx(0, 0));
  st.f2w_var.assign(e, kLargeVar);
  st.f2w_valid.assign(e, 0);
  st.z.assign(e, cplx(0, 0));
  st.tau.assign(e, 1.0);
  st.x_post_mean.assign(s, cplx(0, 0));
  st.x_post_var.assign(s, 1.0);
  st.mapper_mean.assign(s, cplx(0, 0));
  st.mapper_var.assign(s, 1.0);
  st.w_post_mean.assign(c, cplx(0, 0));
  st.w_post_var.assign(c, 1.0);
  st.active = active;
  return st;
}

void interference_stats(DetectorState& st, const RxObservation& rx, double noise_var) {
  const auto& d = st.dim;
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int m = 0; m < d.M; ++m) {
        const cplx y = rx.y[rx.idx(t, m, k)];
        const std::size_t base = d.edge(t, m, k, 0);
        cplx mean_sum(0, 0);
        double var_sum = 0.0;
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = base + n;
          mean_sum += st.w2f_mean[e] * st.x2f_mean[e];
          var_sum += std::norm(st.w2f_mean[e]) * st.x2f_var[e] +
                     st.w2f_var[e] * std::norm(st.x2f_mean[e]) +
                     st.w2f_var[e] * st.x2f_var[e];
        }
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = base + n;
          const double own = std::norm(st.w2f_mean[e]) * st.x2f_var[e] +
                             st.w2f_var[e] * std::norm(st.x2f_mean[e]) +
                             st.w2f_var[e] * st.x2f_var[e];
          st.z[e] = y - (mean_sum - st.w2f_mean[e] * st.x2f_mean[e]);
          st.tau[e] = noise_var + (var_sum - own);
        }
      }
    }
}

void ep_msg_to_w(DetectorState& st) {
  const auto& d = st.dim;
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int m = 0; m < d.M; ++m)
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = d.edge(t, m, k, n);
          const cplx w_prev = st.w_post_mean[d.link(m, n, k)];
          const cplx zh = st.z[e] - st.x2f_mean[e] * w_prev;
          const double th = st.tau[e] + st.x2f_var[e] * std::norm(w_prev);
          const double den =
              std::norm(st.x2f_mean[e]) + st.x2f_var[e] * (1.0 - std::norm(zh) / th);
          const double nu = den > 0.0 ? floor_var(th / den) : kLargeVar;
          const cplx mean = nu * std::conj(st.x2f_mean[e]) * st.z[e] / th;
          if (st.damping > 0.0 && st.f2w_valid[e]) {
            st.f2w_var[e] = st.damping * st.f2w_var[e] + (1.0 - st.damping) * nu;
            st.f2w_mean[e] = st.damping * st.f2w_mean[e] + (1.0 - st.damping) * mean;
          } else {
            st.f2w_var[e] = nu;
            st.f2w_mean[e] = mean;
          }
          st.f2w_valid[e] = 1;
        }
    }
}

void ep_msg_to_x(DetectorState& st) {
  const auto& d = st.dim;
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int m = 0; m < d.M; ++m)
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = d.edge(t, m, k, n);
          const cplx x_prev = st.x_post_mean[d.sym(t, n, k)];
          const cplx zh = st.z[e] - st.w2f_mean[e] * x_prev;
          const double th = st.tau[e] + st.w2f_var[e] * std::norm(x_prev);
          const double den =
              std::norm(st.w2f_mean[e]) + st.w2f_var[e] * (1.0 - std::norm(zh) / th);
          const double nu = den > 0.0 ? floor_var(th / den) : kLargeVar;
          const cplx mean = nu * std::conj(st.w2f_mean[e]) * st.z[e] / th;
          if (st.damping > 0.0) {
            st.f2x_var[e] = st.damping * st.f2x_var[e] + (1.0 - st.damping) * nu;
            st.f2x_mean[e] = st.damping * st.f2x_mean[e] + (1.0 - st.damping) * mean;
          } else {
            st.f2x_var[e] = nu;
            st.f2x_mean[e] = mean;
          }
        }
    }
}

void combine_to_mapper(DetectorState& st) {
  const auto& d = st.dim;
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int n = 0; n < d.N; ++n) {
        double prec = 0.0;
        cplx wsum(0, 0);
        for (int m = 0; m < d.M; ++m) {
          const std::size_t e = d.edge(t, m, k, n);
          prec += 1.0 / st.f2x_var[e];
          wsum += st.f2x_mean[e] / st.f2x_var[e];
        }
        const std::size_t s = d.sym(t, n, k);
        st.mapper_var[s] = 1.0 / prec;
        st.mapper_mean[s] = wsum / prec;
      }
    }
}

DiscreteMsg mapper_to_symbol_prior(const std::vector<double>& la_bits, const Constellation& cons) {
  const int q = cons.bits_per_symbol();
  DiscreteMsg msg;
  msg.p.resize(cons.size());
  for (int a = 0; a < cons.size(); ++a) {
    double lp = 0.0;
    for (int b = 0; b < q; ++b)
      lp += log_bit_prob(la_bits[b], Constellation::label_bit(a, b, q));
    msg.p[a] = std::exp(lp);
  }
  msg.normalize();
  return msg;
}

void extrinsic_llrs_logw(const std::vector<double>& logw, const std::vector<double>& la_bits,
                         const Constellation& cons, double* le_out) {
  const int q = cons.bits_per_symbol();
  const int sz = cons.size();
  std::vector<double> lp(sz);
  for (int a = 0; a < sz; ++a) {
    double v = logw[a];
    for (int b = 0; b < q; ++b)
      v += log_bit_prob(la_bits[b], Constellation::label_bit(a, b, q));
    lp[a] = v;
  }
  for (int b = 0; b < q; ++b) {
    double m1 = -1e300, m0 = -1e300;
    for (int a = 0; a < sz; ++a) {
      if (Constellation::label_bit(a, b, q))
        m1 = std::max(m1, lp[a]);
      else
        m0 = std::max(m0, lp[a]);
    }
    double s1 = 0.0, s0 = 0.0;
    for (int a = 0; a < sz; ++a) {
      if (Constellation::label_bit(a, b, q))
        s1 += std::exp(lp[a] - m1);
      else
        s0 += std::exp(lp[a] - m0);
    }
    const double full = (m1 + std::log(s1)) - (m0 + std::log(s0));
    le_out[b] = clamp_llr(full - la_bits[b]);
  }
}

void extrinsic_llrs(cplx zeta, double gamma, const std::vector<double>& la_bits,
                    const Constellation& cons, double* le_out) {
  std::vector<double> logw(cons.size());
  for (int a = 0; a < cons.size(); ++a) logw[a] = -std::norm(cons.point(a) - zeta) / gamma;
  extrinsic_llrs_logw(logw, la_bits, cons, le_out);
}

SymbolPosterior symbol_posterior_project(const DiscreteMsg& prior, cplx zeta, double gamma,
                                         const Constellation& cons) {
  const int sz = cons.size();
  std::vector<double> lp(sz);
  double peak = -1e300;
  for (int a = 0; a < sz; ++a) {
    const double pr = prior.p[a] > 0.0 ? std::log(prior.p[a]) : -1e300;
    lp[a] = pr - std::norm(cons.point(a) - zeta) / gamma;
    peak = std::max(peak, lp[a]);
  }
  SymbolPosterior out;
  out.belief.p.resize(sz);
  double sum = 0.0;
  for (int a = 0; a < sz; ++a) {
    out.belief.p[a] = std::exp(lp[a] - peak);
    sum += out.belief.p[a];
  }
  cplx mean(0, 0);
  double e2 = 0.0;
  for (int a = 0; a < sz; ++a) {
    out.belief.p[a] /= sum;
    mean += out.belief.p[a] * cons.point(a);
    e2 += out.belief.p[a] * std::norm(cons.point(a));
  }
  out.mean = mean;
  out.var = std::max(e2 - std::norm(mean), 0.0);
  return out;
}

GaussianMsg ep_msg_x_to_f(const GaussianMsg& posterior, const GaussianMsg& f2x) {
  const double diff = f2x.var - posterior.var;
  if (diff <= 0.0) return {posterior.mean, floor_var(posterior.var)};
  const double nu = posterior.var * f2x.var / diff;
  const cplx mean = posterior.mean + posterior.var * (posterior.mean - f2x.mean) / diff;
  return {mean, floor_var(nu)};
}

void detector_update_symbols(DetectorState& st, const Frame& frame, const Constellation& cons,
                             const std::vector<std::vector<double>>& la) {
  const auto& d = st.dim;
  const int q = cons.bits_per_symbol();
  std::vector<double> la_bits(q);
  for (std::size_t i = 0; i < frame.data_pos.size(); ++i) {
    const auto [t, k] = frame.data_pos[i];
    for (int n = 0; n < d.N; ++n) {
      for (int b = 0; b < q; ++b) la_bits[b] = la[n][i * q + b];
      const std::size_t s = d.sym(t, n, k);
      const DiscreteMsg prior = mapper_to_symbol_prior(la_bits, cons);
      const SymbolPosterior post =
          symbol_posterior_project(prior, st.mapper_mean[s], st.mapper_var[s], cons);
      st.x_post_mean[s] = post.mean;
      st.x_post_var[s] = floor_var(post.var);
      const GaussianMsg pg{post.mean, floor_var(post.var)};
      for (int m = 0; m < d.M; ++m) {
        const std::size_t e = d.edge(t, m, k, n);
        const GaussianMsg msg = ep_msg_x_to_f(pg, {st.f2x_mean[e], st.f2x_var[e]});
        st.x2f_mean[e] = msg.mean;
        st.x2f_var[e] = msg.var;
      }
    }
  }
}

void detector_extrinsic_llrs(const DetectorState& st, const Frame& frame,
                             const Constellation& cons,
                             const std::vector<std::vector<double>>& la,
                             std::vector<std::vector<double>>* le) {
  const auto& d = st.dim;
  const int q = cons.bits_per_symbol();
  std::vector<double> la_bits(q);
  for (std::size_t i = 0; i < frame.data_pos.size(); ++i) {
    const auto [t, k] = frame.data_pos[i];
    for (int n = 0; n < d.N; ++n) {
      for (int b = 0; b < q; ++b) la_bits[b] = la[n][i * q + b];
      const std::size_t s = d.sym(t, n, k);
      extrinsic_llrs(st.mapper_mean[s], st.mapper_var[s], la_bits, cons, &(*le)[n][i * q]);
    }
  }
}

// ---------------------------------------------------------------------------
// BP-GA

BpgaState init_bpga(const DetectorDims& dim, const Constellation& cons) {
  BpgaState bp;
  bp.points = cons.size();
  bp.delta.assign(dim.edges() * cons.size(), 0.0);
  bp.msg.assign(dim.edges() * cons.size(), 1.0 / cons.size());
  return bp;
}

GaussianMsg bpga_mixture_collapse(cplx z, double tau, const std::vector<double>& theta,
                                  const Constellation& cons) {
  cplx inv_mean(0, 0);
  double inv_sq = 0.0;
  for (int a = 0; a < cons.size(); ++a) {
    inv_mean += theta[a] / cons.point(a);
    inv_sq += theta[a] / std::norm(cons.point(a));
  }
  GaussianMsg out;
  out.mean = z * inv_mean;
  out.var = (tau + std::norm(z)) * inv_sq - std::norm(out.mean);
  out.var = out.var > 0.0 ? floor_var(out.var) : kLargeVar;
  return out;
}

void bpga_msg_to_w(DetectorState& st, const BpgaState& bp, const Constellation& cons) {
  const auto& d = st.dim;
  const int sz = cons.size();
  std::vector<double> theta(sz);
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int m = 0; m < d.M; ++m)
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = d.edge(t, m, k, n);
          // mixture weights from the previous discrete message
          double wsum = 0.0;
          for (int a = 0; a < sz; ++a) {
            theta[a] = bp.msg[bp.at(e, a)] / std::norm(cons.point(a));
            wsum += theta[a];
          }
          for (int a = 0; a < sz; ++a) theta[a] /= wsum;
          const GaussianMsg fw = bpga_mixture_collapse(st.z[e], st.tau[e], theta, cons);
          st.f2w_mean[e] = fw.mean;
          st.f2w_var[e] = fw.var;
          st.f2w_valid[e] = 1;
        }
    }
}

void bpga_deltas(DetectorState& st, BpgaState& bp, const Constellation& cons) {
  const auto& d = st.dim;
  const int sz = cons.size();
  for (int t = 0; t < d.T; ++t)
    for (int k = 0; k < d.K; ++k) {
      if (!st.active[st.pos(t, k)]) continue;
      for (int m = 0; m < d.M; ++m)
        for (int n = 0; n < d.N; ++n) {
          const std::size_t e = d.edge(t, m, k, n);
          for (int a = 0; a < sz; ++a) {
            const double den = st.tau[e] + st.w2f_var[e] * std::norm(cons.point(a));
            bp.delta[bp.at(e, a)] =
                std::norm(st.z[e] - st.w2f_mean[e] * cons.point(a)) / den + std::log(den);
          }
        }
    }
}

void bpga_extrinsic_llrs(const DetectorState& st, const BpgaState& bp, const Frame& frame,
                         const Constellation& cons, const std::vector<std::vector<double>>& la,
                         std::vector<std::vector<double>>* le) {
  const auto& d = st.dim;
  const int q = cons.bits_per_symbol();
  const int sz = cons.size();
  std::vector<double> la_bits(q), logw(sz);
  for (std::size_t i = 0; i < frame.data_pos.size(); ++i) {
    const auto [t, k] = frame.data_pos[i];
    for (int n = 0; n < d.N; ++n) {
      for (int b = 0; b < q; ++b) la_bits[b] = la[n][i * q + b];
      for (int a = 0; a < sz; ++a) {
        double s = 0.0;
        for (int m = 0; m < d.M; ++m) s += bp.delta[bp.at(d.edge(t, m, k, n), a)];
        logw[a] = -s;
      }
      extrinsic_llrs_logw(logw, la_bits, cons, &(*le)[n][i * q]);
    }
  }
}

void bpga_update_symbols(DetectorState& st, BpgaState& bp, const Frame& frame,
                         const Constellation& cons, const std::vector<std::vector<double>>& la) {
  const auto& d = st.dim;
  const int q = cons.bits_per_symbol();
  const int sz = cons.size();
  std::vector<double> la_bits(q), logprior(sz), dsum(sz), lm(sz);
  for (std::size_t i = 0; i < frame.data_pos.size(); ++i) {
    const auto [t, k] = frame.data_pos[i];
    for (int n = 0; n < d.N; ++n) {
      for (int b = 0; b < q; ++b) la_bits[b] = la[n][i * q + b];
      for (int a = 0; a < sz; ++a) {
        double lp = 0.0;
        for (int b = 0; b < q; ++b)
          lp += log_bit_prob(la_bits[b], Constellation::label_bit(a, b, q));
        logprior[a] = lp;
      }
      for (int a = 0; a < sz; ++a) {
        double s = 0.0;
        for (int m = 0; m < d.M; ++m) s += bp.delta[bp.at(d.edge(t, m, k, n), a)];
        dsum[a] = s;
      }
      // symbol posterior (all antennas) for bookkeeping
      {
        double peak = -1e300;
        for (int a = 0; a < sz; ++a) {
          lm[a] = logprior[a] - dsum[a];
          peak = std::max(peak, lm[a]);
        }
        double sum = 0.0;
        cplx mean(0, 0);
        double e2 = 0.0;
        for (int a = 0; a < sz; ++a) {
          const double p = std::exp(lm[a] - peak);
          sum += p;
          mean += p * cons.point(a);
          e2 += p * std::norm(cons.point(a));
        }
        mean /= sum;
        e2 /= sum;
        const std::size_t s = d.sym(t, n, k);
        st.x_post_mean[s] = mean;
        st.x_post_var[s] = floor_var(e2 - std::norm(mean));
      }
      // per-edge exclusion messages and moments
      for (int m = 0; m < d.M; ++m) {
        const std::size_t e = d.edge(t, m, k, n);
        double peak = -1e300;
        for (int a = 0; a < sz; ++a) {
          lm[a] = logprior[a] - (dsum[a] - bp.delta[bp.at(e, a)]);
          peak = std::max(peak, lm[a]);
        }
        double sum = 0.0;
        cplx mean(0, 0);
        double e2 = 0.0;
        for (int a = 0; a < sz; ++a) {
          const double p = std::exp(lm[a] - peak);
          bp.msg[bp.at(e, a)] = p;
          sum += p;
          mean += p * cons.point(a);
          e2 += p * std::norm(cons.point(a));
        }
        for (int a = 0; a < sz; ++a) bp.msg[bp.at(e, a)] /= sum;
        mean /= sum;
        e2 /= sum;
        st.x2f_mean[e] = mean;
        st.x2f_var[e] = floor_var(e2 - std::norm(mean));
      }
    }
  }
}

WirtingerExpansion wirtinger_expand(cplx z0, double tau0, cplx u0, double nu) {
  WirtingerExpansion w;
  w.value = std::norm(z0) / tau0 + std::log(tau0) + std::norm(u0) / nu;
  w.dz = std::conj(z0) / tau0;
  w.du = std::conj(u0) / nu;
  w.dtau = 1.0 / tau0 - std::norm(z0) / (tau0 * tau0);
  w.dzz = 1.0 / tau0;
  w.duu = 1.0 / nu;
  return w;
}

}  // namespace mprx
