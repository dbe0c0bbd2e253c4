#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace microloc {

using cplx = std::complex<double>;

/// Point in R^n for n <= 2. One-dimensional quantities leave the second slot at zero.
using Vec = std::array<double, 2>;

inline constexpr double pi = std::numbers::pi;

/// Stamped into every artifact so downstream readers know which Fourier and
/// time conventions produced the numbers.
inline constexpr std::string_view kConventionTag =
    "fourier=semiclassical(phase=-i x.xi/h,inverse=(2 pi h)^-n);quantization=kohn-nirenberg;"
    "time=classical(generator scaled by 1/h)";

/// Input or precondition violation. The CLI maps it to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical guard tripped during a computation. The CLI maps it to exit status 3.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline bool is_finite(const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline std::string vec_to_string(const Vec& v, int dim) {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace microloc
