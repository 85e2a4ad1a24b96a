#ifndef MPRX_CHANNEL_MODEL_HPP
#define MPRX_CHANNEL_MODEL_HPP

#include <string>
#include <vector>

#include "mprx/common.hpp"
#include "mprx/rng.hpp"

namespace mprx {

/// Uniform planar array at the base station: rows x cols antennas,
/// spacings given in carrier wavelengths.
struct ArrayGeometry {
  int rows = 1;          // D
  int cols = 1;          // W
  double spacing_el = 1.0;
  double spacing_az = 1.0;
  int antennas() const { return rows * cols; }
};

/// Departure-angle statistics of one propagation path (radians, radians^2).
struct PathAngles {
  double az_mean = 0.0;
  double el_mean = 0.0;
  double az_var = 0.0;
  double el_var = 0.0;
};

/// Ranges the per-user angle draws are taken from (uniform).
struct AngleRanges {
  double az_mean_lo = M_PI / 6, az_mean_hi = 5 * M_PI / 6;
  double el_mean_lo = M_PI / 12, el_mean_hi = M_PI / 3;
  double std_lo = M_PI / 12, std_hi = M_PI / 6;  // std dev of both AoDs
};

/// Per-tap average powers of one user, normalized to sum 1.
struct PowerDelayProfile {
  std::vector<double> power;
  int taps() const { return static_cast<int>(power.size()); }
};

/// alpha_l proportional to exp(-l/decay), l = 1..taps, normalized.
PowerDelayProfile exponential_pdp(int taps, double decay = 6.0);

/// Small dense complex matrix, row-major.
struct CMat {
  int n = 0;
  std::vector<cplx> a;
  CMat() = default;
  explicit CMat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim) {}
  cplx& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  const cplx& at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }
};

/// Azimuth correlation entry [R_az]_{w,w2}; indices are 1-based columns.
cplx azimuth_correlation(const ArrayGeometry& geom, const PathAngles& ang, int w, int w2);

/// Elevation correlation entry [R_el]_{d,d2}; indices are 1-based rows.
cplx elevation_correlation(const ArrayGeometry& geom, const PathAngles& ang, int d, int d2);

/// Receive correlation R = R_az (x) R_el, projected onto the PSD cone
/// (negative eigenvalues clipped) with the diagonal renormalized to 1.
CMat build_receive_correlation(const ArrayGeometry& geom, const PathAngles& ang);

/// Hermitian PSD square root via eigendecomposition.
CMat matrix_sqrt_psd(const CMat& r);

/// Minimum eigenvalue of a Hermitian matrix (for tests and validation).
double min_eigenvalue_hermitian(const CMat& r);

/// One correlated CIR draw: sqrt(R) * g with g ~ CN(0, tap_power * I).
std::vector<cplx> sample_cir(Rng& rng, const CMat& r, double tap_power);

/// Same, with the square root precomputed.
std::vector<cplx> sample_cir_with_sqrt(Rng& rng, const CMat& sqrt_r, double tap_power);

/// CFR from CIR: w_k = sum_{l=1..L} h_l exp(-j 2 pi l k / K), k = 1..K.
/// Taps occupy delays 1..L as in the source model; zero_based_taps switches
/// the exponent to l = 0..L-1 for interop.
std::vector<cplx> cir_to_cfr(const std::vector<cplx>& h, int subcarriers,
                             bool zero_based_taps = false);

/// Per-frame channel: CIR tensor (M x N x L) and derived CFR tensor (M x N x K).
struct ChannelRealization {
  int M = 0, N = 0, L = 0, K = 0;
  std::vector<cplx> cir;  // [m][n][l]
  std::vector<cplx> cfr;  // [m][n][k]
  std::size_t cir_idx(int m, int n, int l) const {
    return (static_cast<std::size_t>(m) * N + n) * L + l;
  }
  std::size_t cfr_idx(int m, int n, int k) const {
    return (static_cast<std::size_t>(m) * N + n) * K + k;
  }
};

/// Draws angles for every user (one set per user, shared by all taps),
/// builds per-user correlation matrices, and samples the full realization.
ChannelRealization sample_channel(Rng& rng, const ArrayGeometry& geom, int users,
                                  int taps, int subcarriers, const PowerDelayProfile& pdp,
                                  const AngleRanges& ranges = {},
                                  bool zero_based_taps = false);

/// Flat binary export: header M, N, L, K as uint32 little-endian, then the
/// CIR and CFR tensors as interleaved complex64 (float re, float im).
void write_channel_binary(const ChannelRealization& ch, const std::string& path);

/// CSV export (one row per tensor entry) for inspection.
void write_channel_csv(const ChannelRealization& ch, const std::string& path);

}  // namespace mprx

#endif  // MPRX_CHANNEL_MODEL_HPP
