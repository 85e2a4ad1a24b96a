#include "mprx/channel_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>

namespace mprx {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using EMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

EMat to_eigen(const CMat& m) {
  EMat e(m.n, m.n);
  for (int r = 0; r < m.n; ++r)
    for (int c = 0; c < m.n; ++c) e(r, c) = m.at(r, c);
  return e;
}

CMat from_eigen(const EMat& e) {
  CMat m(static_cast<int>(e.rows()));
  for (int r = 0; r < m.n; ++r)
    for (int c = 0; c < m.n; ++c) m.at(r, c) = e(r, c);
  return m;
}

}  // namespace

PowerDelayProfile exponential_pdp(int taps, double decay) {
  if (taps < 1) throw ConfigError("pdp needs at least one tap");
  if (decay <= 0) throw ConfigError("pdp decay must be positive");
  PowerDelayProfile pdp;
  pdp.power.resize(taps);
  double sum = 0.0;
  for (int l = 0; l < taps; ++l) {
    pdp.power[l] = std::exp(-static_cast<double>(l + 1) / decay);
    sum += pdp.power[l];
  }
  for (double& p : pdp.power) p /= sum;
  return pdp;
}

cplx azimuth_correlation(const ArrayGeometry& geom, const PathAngles& ang, int w, int w2) {
  const double dw = static_cast<double>(w2 - w);
  const double a = kTwoPi * geom.spacing_az * std::sqrt(ang.el_var) * dw * std::cos(ang.el_mean);
  const double s_az = std::sin(ang.az_mean);
  const double c_az = std::cos(ang.az_mean);
  const double b = ang.az_var * a * a * s_az * s_az + 1.0;
  const double c = kTwoPi * geom.spacing_az * dw * std::sin(ang.el_mean);
  const cplx expo(a * a * c_az * c_az + ang.az_var * (c * s_az) * (c * s_az), -2.0 * c * c_az);
  return std::exp(-expo / (2.0 * b)) / std::sqrt(b);
}

cplx elevation_correlation(const ArrayGeometry& geom, const PathAngles& ang, int d, int d2) {
  const double dd = static_cast<double>(d2 - d);
  // spacing is in wavelengths, so the lambda factors cancel:
  // exp(2 (j pi d_el dd cos - nu (pi d_el dd sin)^2))
  const double phase = kTwoPi * geom.spacing_el * dd * std::cos(ang.el_mean);
  const double sp = M_PI * geom.spacing_el * dd * std::sin(ang.el_mean);
  const double decay = 2.0 * ang.el_var * sp * sp;
  return std::polar(std::exp(-decay), phase);
}

CMat build_receive_correlation(const ArrayGeometry& geom, const PathAngles& ang) {
  const int D = geom.rows, W = geom.cols, M = D * W;
  CMat raz(W), rel(D);
  for (int i = 0; i < W; ++i)
    for (int j = 0; j < W; ++j) raz.at(i, j) = azimuth_correlation(geom, ang, i + 1, j + 1);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) rel.at(i, j) = elevation_correlation(geom, ang, i + 1, j + 1);
  // Kronecker product: antenna m = (w, d) with d fastest.
  CMat r(M);
  for (int wi = 0; wi < W; ++wi)
    for (int di = 0; di < D; ++di)
      for (int wj = 0; wj < W; ++wj)
        for (int dj = 0; dj < D; ++dj)
          r.at(wi * D + di, wj * D + dj) = raz.at(wi, wj) * rel.at(di, dj);

  // PSD repair: clip negative eigenvalues, then renormalize the diagonal.
  EMat e = to_eigen(r);
  e = (e + e.adjoint().eval()) * 0.5;
  Eigen::SelfAdjointEigenSolver<EMat> es(e);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  EMat repaired = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  for (int i = 0; i < M; ++i) {
    double di = repaired(i, i).real();
    double s = di > 1e-12 ? 1.0 / std::sqrt(di) : 1.0;
    for (int j = 0; j < M; ++j) {
      repaired(i, j) *= s;
      repaired(j, i) *= s;
    }
  }
  return from_eigen(repaired);
}

CMat matrix_sqrt_psd(const CMat& r) {
  EMat e = to_eigen(r);
  e = (e + e.adjoint().eval()) * 0.5;
  Eigen::SelfAdjointEigenSolver<EMat> es(e);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return from_eigen(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
}

double min_eigenvalue_hermitian(const CMat& r) {
  Eigen::SelfAdjointEigenSolver<EMat> es(to_eigen(r), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<cplx> sample_cir_with_sqrt(Rng& rng, const CMat& sqrt_r, double tap_power) {
  const int m = sqrt_r.n;
  std::vector<cplx> g(m), h(m, cplx(0, 0));
  const double s = std::sqrt(tap_power);
  for (int i = 0; i < m; ++i) g[i] = s * rng.cgauss();
  for (int r = 0; r < m; ++r) {
    cplx acc(0, 0);
    for (int c = 0; c < m; ++c) acc += sqrt_r.at(r, c) * g[c];
    h[r] = acc;
  }
  return h;
}

std::vector<cplx> sample_cir(Rng& rng, const CMat& r, double tap_power) {
  return sample_cir_with_sqrt(rng, matrix_sqrt_psd(r), tap_power);
}

std::vector<cplx> cir_to_cfr(const std::vector<cplx>& h, int subcarriers, bool zero_based_taps) {
  const int L = static_cast<int>(h.size());
  const int K = subcarriers;
  std::vector<cplx> w(K);
  for (int k = 1; k <= K; ++k) {
    cplx acc(0, 0);
    for (int l = 0; l < L; ++l) {
      const double delay = zero_based_taps ? l : l + 1;
      acc += h[l] * std::polar(1.0, -kTwoPi * delay * k / K);
    }
    w[k - 1] = acc;
  }
  return w;
}

ChannelRealization sample_channel(Rng& rng, const ArrayGeometry& geom, int users, int taps,
                                  int subcarriers, const PowerDelayProfile& pdp,
                                  const AngleRanges& ranges, bool zero_based_taps) {
  if (pdp.taps() != taps) throw ConfigError("pdp size does not match tap count");
  ChannelRealization ch;
  ch.M = geom.antennas();
  ch.N = users;
  ch.L = taps;
  ch.K = subcarriers;
  ch.cir.resize(static_cast<std::size_t>(ch.M) * ch.N * ch.L);
  ch.cfr.resize(static_cast<std::size_t>(ch.M) * ch.N * ch.K);
  for (int n = 0; n < users; ++n) {
    // one angle set per user per realization, shared by all taps
    PathAngles ang;
    ang.az_mean = rng.uniform(ranges.az_mean_lo, ranges.az_mean_hi);
    ang.el_mean = rng.uniform(ranges.el_mean_lo, ranges.el_mean_hi);
    double saz = rng.uniform(ranges.std_lo, ranges.std_hi);
    double sel = rng.uniform(ranges.std_lo, ranges.std_hi);
    ang.az_var = saz * saz;
    ang.el_var = sel * sel;
    CMat sqrt_r = matrix_sqrt_psd(build_receive_correlation(geom, ang));
    for (int l = 0; l < taps; ++l) {
      std::vector<cplx> col = sample_cir_with_sqrt(rng, sqrt_r, pdp.power[l]);
      for (int m = 0; m < ch.M; ++m) ch.cir[ch.cir_idx(m, n, l)] = col[m];
    }
    for (int m = 0; m < ch.M; ++m) {
      std::vector<cplx> taps_mn(taps);
      for (int l = 0; l < taps; ++l) taps_mn[l] = ch.cir[ch.cir_idx(m, n, l)];
      std::vector<cplx> w = cir_to_cfr(taps_mn, subcarriers, zero_based_taps);
      for (int k = 0; k < subcarriers; ++k) ch.cfr[ch.cfr_idx(m, n, k)] = w[k];
    }
  }
  return ch;
}

void write_channel_binary(const ChannelRealization& ch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  auto put_u32 = [&f](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(static_cast<std::uint32_t>(ch.M));
  put_u32(static_cast<std::uint32_t>(ch.N));
  put_u32(static_cast<std::uint32_t>(ch.L));
  put_u32(static_cast<std::uint32_t>(ch.K));
  auto put_tensor = [&f](const std::vector<cplx>& t) {
    for (const cplx& v : t) {
      float re = static_cast<float>(v.real());
      float im = static_cast<float>(v.imag());
      f.write(reinterpret_cast<const char*>(&re), 4);
      f.write(reinterpret_cast<const char*>(&im), 4);
    }
  };
  put_tensor(ch.cir);
  put_tensor(ch.cfr);
  if (!f) throw std::runtime_error("write failed: " + path);
}

void write_channel_csv(const ChannelRealization& ch, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "tensor,m,n,idx,re,im\n";
  for (int m = 0; m < ch.M; ++m)
    for (int n = 0; n < ch.N; ++n)
      for (int l = 0; l < ch.L; ++l) {
        const cplx& v = ch.cir[ch.cir_idx(m, n, l)];
        f << "cir," << m << ',' << n << ',' << l << ',' << v.real() << ',' << v.imag() << '\n';
      }
  for (int m = 0; m < ch.M; ++m)
    for (int n = 0; n < ch.N; ++n)
      for (int k = 0; k < ch.K; ++k) {
        const cplx& v = ch.cfr[ch.cfr_idx(m, n, k)];
        f << "cfr," << m << ',' << n << ',' << k << ',' << v.real() << ',' << v.imag() << '\n';
      }
}

}  // namespace mprx
