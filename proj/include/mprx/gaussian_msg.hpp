#ifndef MPRX_GAUSSIAN_MSG_HPP
#define MPRX_GAUSSIAN_MSG_HPP

#include "mprx/common.hpp"

namespace mprx {

/// Complex Gaussian message (mean, variance). The variance of anything a
/// module emits is kept in (kVarFloor, kLargeVar]; invalid divisions are
/// repaired rather than propagated.
struct GaussianMsg {
  cplx mean{0.0, 0.0};
  double var = 1.0;
};

inline constexpr double kVarFloor = 1e-12;
inline constexpr double kLargeVar = 1e6;

inline double floor_var(double v) { return v < kVarFloor ? kVarFloor : v; }

/// Product of two Gaussian densities (precision-weighted combine).
inline GaussianMsg gaussian_product(const GaussianMsg& a, const GaussianMsg& b) {
  double pa = 1.0 / a.var, pb = 1.0 / b.var;
  double p = pa + pb;
  return {(a.mean * pa + b.mean * pb) / p, 1.0 / p};
}

/// Gaussian division post / msg. When the result would have non-positive
/// variance the message is made uninformative: variance kLargeVar, mean kept
/// at the posterior mean.
inline GaussianMsg gaussian_divide(const GaussianMsg& post, const GaussianMsg& msg) {
  double p = 1.0 / post.var - 1.0 / msg.var;
  if (p <= 1.0 / kLargeVar) return {post.mean, kLargeVar};
  cplx q = post.mean / post.var - msg.mean / msg.var;
  double v = 1.0 / p;
  return {q * v, floor_var(v)};
}

}  // namespace mprx

#endif  // MPRX_GAUSSIAN_MSG_HPP
