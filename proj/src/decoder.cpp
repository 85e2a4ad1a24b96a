#include "mprx/decoder.hpp"

#include <cmath>
#include <limits>

namespace mprx {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logsum(double a, double b, bool max_log) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = a > b ? a : b;
  if (max_log) return m;
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// one-sided hypotheses can occur on tail steps; keep the LLR finite
inline double safe_llr(double log1, double log0) {
  if (log1 == kNegInf && log0 == kNegInf) return 0.0;
  if (log0 == kNegInf) return 300.0;
  if (log1 == kNegInf) return -300.0;
  return log1 - log0;
}

}  // namespace

Trellis::Trellis(const CodeConfig& cfg) {
  int g1[7], g2[7];
  for (int i = 0; i < 7; ++i) {
    g1[i] = (cfg.feedback_oct >> (6 - i)) & 1;
    g2[i] = (cfg.feedforward_oct >> (6 - i)) & 1;
  }
  constexpr int mem = CodeConfig::kMemory;
  for (int st = 0; st < kStates; ++st) {
    int s[mem];
    for (int i = 0; i < mem; ++i) s[i] = (st >> (mem - 1 - i)) & 1;  // s[0] newest
    int fb = 0;
    for (int i = 0; i < mem; ++i) fb ^= g1[i + 1] & s[i];
    term_input[st] = static_cast<std::uint8_t>(fb);
    for (int b = 0; b < 2; ++b) {
      int a = (b ^ fb) & 1;
      int p = g2[0] & a;
      for (int i = 0; i < mem; ++i) p ^= g2[i + 1] & s[i];
      int ns = (a << (mem - 1));
      for (int i = 0; i < mem - 1; ++i) ns |= s[i] << (mem - 2 - i);
      next_state[st][b] = ns;
      out_parity[st][b] = static_cast<std::uint8_t>(p);
    }
  }
}

DecodeResult bcjr_decode(const std::vector<double>& coded_llr, const Trellis& trellis,
                         bool terminated, bool max_log) {
  if (coded_llr.size() % 2 != 0) throw ConfigError("bcjr_decode: odd coded length");
  const int steps = static_cast<int>(coded_llr.size() / 2);
  const int tail = terminated ? CodeConfig::kMemory : 0;
  if (steps <= tail) throw ConfigError("bcjr_decode: block shorter than the tail");
  const int n_info = steps - tail;
  constexpr int S = Trellis::kStates;

  // gamma(t, st, b) = c_sys * llr_sys + c_par * llr_par over allowed inputs
  std::vector<double> alpha(static_cast<std::size_t>(steps + 1) * S, kNegInf);
  std::vector<double> beta(static_cast<std::size_t>(steps + 1) * S, kNegInf);
  alpha[0] = 0.0;
  auto allowed = [&](int t, int st, int b) {
    return t < n_info || b == trellis.term_input[st];
  };
  auto gamma = [&](int t, int st, int b) {
    double g = 0.0;
    if (b) g += coded_llr[2 * t];
    if (trellis.out_parity[st][b]) g += coded_llr[2 * t + 1];
    return g;
  };

  for (int t = 0; t < steps; ++t) {
    double* a0 = &alpha[static_cast<std::size_t>(t) * S];
    double* a1 = &alpha[static_cast<std::size_t>(t + 1) * S];
    double peak = kNegInf;
    for (int st = 0; st < S; ++st) {
      if (a0[st] == kNegInf) continue;
      for (int b = 0; b < 2; ++b) {
        if (!allowed(t, st, b)) continue;
        int ns = trellis.next_state[st][b];
        a1[ns] = logsum(a1[ns], a0[st] + gamma(t, st, b), max_log);
      }
    }
    for (int st = 0; st < S; ++st) peak = peak > a1[st] ? peak : a1[st];
    for (int st = 0; st < S; ++st)
      if (a1[st] != kNegInf) a1[st] -= peak;
  }

  if (terminated) {
    beta[static_cast<std::size_t>(steps) * S] = 0.0;  // zero state
  } else {
    for (int st = 0; st < S; ++st) beta[static_cast<std::size_t>(steps) * S + st] = 0.0;
  }
  for (int t = steps - 1; t >= 0; --t) {
    double* b1 = &beta[static_cast<std::size_t>(t + 1) * S];
    double* b0 = &beta[static_cast<std::size_t>(t) * S];
    double peak = kNegInf;
    for (int st = 0; st < S; ++st) {
      for (int b = 0; b < 2; ++b) {
        if (!allowed(t, st, b)) continue;
        int ns = trellis.next_state[st][b];
        if (b1[ns] == kNegInf) continue;
        b0[st] = logsum(b0[st], gamma(t, st, b) + b1[ns], max_log);
      }
    }
    for (int st = 0; st < S; ++st) peak = peak > b0[st] ? peak : b0[st];
    for (int st = 0; st < S; ++st)
      if (b0[st] != kNegInf) b0[st] -= peak;
  }

  DecodeResult res;
  res.app.resize(coded_llr.size());
  res.extrinsic.resize(coded_llr.size());
  res.info_bits.resize(n_info);
  for (int t = 0; t < steps; ++t) {
    const double* a0 = &alpha[static_cast<std::size_t>(t) * S];
    const double* b1 = &beta[static_cast<std::size_t>(t + 1) * S];
    double sys1 = kNegInf, sys0 = kNegInf, par1 = kNegInf, par0 = kNegInf;
    double in1 = kNegInf, in0 = kNegInf;
    for (int st = 0; st < S; ++st) {
      if (a0[st] == kNegInf) continue;
      for (int b = 0; b < 2; ++b) {
        if (!allowed(t, st, b)) continue;
        int ns = trellis.next_state[st][b];
        if (b1[ns] == kNegInf) continue;
        double m = a0[st] + gamma(t, st, b) + b1[ns];
        if (b) {
          sys1 = logsum(sys1, m, max_log);
          in1 = logsum(in1, m, max_log);
        } else {
          sys0 = logsum(sys0, m, max_log);
          in0 = logsum(in0, m, max_log);
        }
        if (trellis.out_parity[st][b])
          par1 = logsum(par1, m, max_log);
        else
          par0 = logsum(par0, m, max_log);
      }
    }
    res.app[2 * t] = safe_llr(sys1, sys0);
    res.app[2 * t + 1] = safe_llr(par1, par0);
    res.extrinsic[2 * t] = res.app[2 * t] - coded_llr[2 * t];
    res.extrinsic[2 * t + 1] = res.app[2 * t + 1] - coded_llr[2 * t + 1];
    if (t < n_info) res.info_bits[t] = in1 > in0 ? 1 : 0;
  }
  return res;
}

}  // namespace mprx
