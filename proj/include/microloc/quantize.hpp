#pragma once

#include <vector>

#include "microloc/detail/parallel.hpp"
#include "microloc/grid.hpp"
#include "microloc/symbol.hpp"

namespace microloc {

enum class QuantizationPath {
  automatic,  // separable fast path when the symbol declares it, dense otherwise
  dense,
  separable,
};

/// Largest N^(2 dim) the dense path will run.
inline constexpr std::size_t kDenseWorkLimit = std::size_t(1) << 26;

namespace detail {

inline cplx checked_symbol_value(const Symbol& a, const Vec& x, const Vec& xi, int dim) {
  cplx v = a(x, xi);
  if (!is_finite(v))
    throw ValidationError("quantize: non-finite symbol value at x=" + vec_to_string(x, dim) +
                          " xi=" + vec_to_string(xi, dim));
  return v;
}

inline Field apply_separable(const Symbol& a, const Field& u, double h) {
  const Grid& g = u.grid();
  SpectralField v = forward_transform(u, h);
  for (std::size_t m = 0; m < v.size(); ++m) {
    Vec xi = v.xi(m);
    cplx gv = a.separable->g(xi);
    if (!is_finite(gv))
      throw ValidationError("quantize: non-finite symbol value at xi=" + vec_to_string(xi, g.dim()));
    v[m] *= gv;
  }
  Field out = inverse_transform(v, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Vec x = g.point(i);
    cplx fv = a.separable->f(x);
    if (!is_finite(fv))
      throw ValidationError("quantize: non-finite symbol value at x=" + vec_to_string(x, g.dim()));
    out[i] *= fv;
  }
  return out;
}

// P u(x_j) = (2 pi h)^{-n} dxi^n sum_k e^{i x_j.xi_k/h} a(x_j, xi_k) u_hat(xi_k),
// with e^{i x_j xi_k / h} = (-1)^k e^{2 pi i j k / N} per axis. One x-row at a time.
inline Field apply_dense(const Symbol& a, const Field& u, double h) {
  const Grid& g = u.grid();
  const int n = g.points_per_axis();
  const int dim = g.dim();
  const std::size_t work = g.size() * g.size();
  if (work > kDenseWorkLimit) {
    const int max_n = dim == 1 ? (1 << 13) : 64;
    throw ValidationError("quantize: dense path needs N^(2 dim) <= 2^26; reduce N from " + std::to_string(n) +
                          " to at most " + std::to_string(max_n));
  }
  SpectralField v = forward_transform(u, h);
  std::vector<cplx> twiddle(n);
  for (int t = 0; t < n; ++t) twiddle[t] = std::polar(1.0, 2.0 * pi * t / n);
  // (2 pi h)^{-1} dxi = 1 / (2L) per axis.
  const double per_axis = 1.0 / (2.0 * g.half_length());
  const double scale = dim == 1 ? per_axis : per_axis * per_axis;

  Field out(g);
  parallel_for(g.size(), [&](std::size_t row) {
    const Vec x = g.point(row);
    const auto jx = g.indices(row);
    cplx acc = 0.0;
    for (std::size_t m = 0; m < v.size(); ++m) {
      const auto km = g.indices(m);
      cplx phase = 1.0;
      for (int ax = 0; ax < dim; ++ax) {
        const int k = km[ax] - n / 2;
        const int t = static_cast<int>(((static_cast<long long>(jx[ax]) * k) % n + n) % n);
        phase *= (k & 1) ? -twiddle[t] : twiddle[t];
      }
      acc += phase * checked_symbol_value(a, x, v.xi(m), dim) * v[m];
    }
    out[row] = acc * scale;
  });
  return out;
}

}  // namespace detail

/// Kohn-Nirenberg quantization P_h u = Op_h(a) u on the grid.
inline Field apply(const Symbol& a, const Field& u, double h, QuantizationPath path = QuantizationPath::automatic) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("quantize: h must be finite and > 0");
  detail::require_finite(u, "quantize");
  switch (path) {
    case QuantizationPath::separable:
      if (!a.separable) throw ValidationError("quantize: symbol '" + a.name + "' is not separable");
      return detail::apply_separable(a, u, h);
    case QuantizationPath::dense:
      return detail::apply_dense(a, u, h);
    case QuantizationPath::automatic:
      break;
  }
  return a.separable ? detail::apply_separable(a, u, h) : detail::apply_dense(a, u, h);
}

/// sum_k h^k Op_h(a_k) u over the stored terms.
inline Field apply_expansion(const SymbolExpansion& expansion, const Field& u, double h) {
  expansion.validate();
  Field out = apply(expansion.terms.front(), u, h);
  double weight = 1.0;
  for (std::size_t k = 1; k < expansion.terms.size(); ++k) {
    weight *= h;
    Field term = apply(expansion.terms[k], u, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * term[i];
  }
  return out;
}

}  // namespace microloc
