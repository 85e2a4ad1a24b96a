#ifndef MPRX_COMMON_HPP
#define MPRX_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace mprx {

using cplx = std::complex<double>;

/// Raised for invalid user-supplied configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mprx

#endif  // MPRX_COMMON_HPP
