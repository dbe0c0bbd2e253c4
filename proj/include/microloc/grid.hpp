#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microloc/core.hpp"
#include "microloc/detail/fft.hpp"

namespace microloc {

/// Uniform periodic grid on the box [-L, L)^dim with N points per axis.
class Grid {
 public:
  Grid(int dim, int points_per_axis, double half_length)
      : dim_(dim), n_(points_per_axis), half_length_(half_length) {
    if (dim != 1 && dim != 2) throw ValidationError("grid: dim must be 1 or 2, got " + std::to_string(dim));
    if (n_ < 16 || (n_ & (n_ - 1)) != 0)
      throw ValidationError("grid: points_per_axis must be a power of two >= 16, got " + std::to_string(n_));
    if (!(half_length > 0.0) || !std::isfinite(half_length))
      throw ValidationError("grid: half_length must be finite and > 0");
    // N is a power of two, so this division is exact and spacing * N == 2L.
    spacing_ = 2.0 * half_length_ / n_;
  }

  int dim() const { return dim_; }
  int points_per_axis() const { return n_; }
  double half_length() const { return half_length_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return dim_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }
  double cell_volume() const { return dim_ == 1 ? spacing_ : spacing_ * spacing_; }

  double coordinate(int i) const { return -half_length_ + i * spacing_; }

  /// Axis indices of a row-major flat index (second entry is 0 in 1D).
  std::array<int, 2> indices(std::size_t flat) const {
    if (dim_ == 1) return {static_cast<int>(flat), 0};
    return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
  }

  Vec point(std::size_t flat) const {
    auto [i, j] = indices(flat);
    return dim_ == 1 ? Vec{coordinate(i), 0.0} : Vec{coordinate(i), coordinate(j)};
  }

  // Dual lattice xi_k = h (pi / L) k, k in [-N/2, N/2), stored in centred order m = k + N/2.
  double dual_spacing(double h) const { return h * pi / half_length_; }
  double dual_cell_volume(double h) const {
    double d = dual_spacing(h);
    return dim_ == 1 ? d : d * d;
  }
  double nyquist(double h) const { return h * pi * n_ / (2.0 * half_length_); }
  double dual_coordinate(int m, double h) const { return dual_spacing(h) * (m - n_ / 2); }
  Vec dual_point(std::size_t flat, double h) const {
    auto [i, j] = indices(flat);
    return dim_ == 1 ? Vec{dual_coordinate(i, h), 0.0} : Vec{dual_coordinate(i, h), dual_coordinate(j, h)};
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_;
  int n_;
  double half_length_;
  double spacing_ = 0.0;
};

/// Complex samples of u(x) on a grid.
class Field {
 public:
  explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}
  Field(Grid grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw ValidationError("field: expected " + std::to_string(grid_.size()) + " values, got " +
                            std::to_string(values_.size()));
  }

  static Field sample(const Grid& grid, const std::function<cplx(const Vec&)>& fn) {
    Field f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values_[i] = fn(grid.point(i));
    return f;
  }

  const Grid& grid() const { return grid_; }
  const std::vector<cplx>& values() const { return values_; }
  std::vector<cplx>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  const cplx& operator[](std::size_t i) const { return values_[i]; }
  cplx& operator[](std::size_t i) { return values_[i]; }

  /// Trapezoid-on-torus approximation of the squared L^2 norm.
  double norm_squared() const {
    double s = 0.0;
    for (const auto& v : values_) s += std::norm(v);
    return s * grid_.cell_volume();
  }

  std::optional<std::size_t> first_non_finite() const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!is_finite(values_[i])) return i;
    return std::nullopt;
  }

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

/// Samples of the semiclassical Fourier transform on the dual lattice fixed by (grid, h).
class SpectralField {
 public:
  SpectralField(Grid grid, double h) : grid_(std::move(grid)), h_(h), values_(grid_.size()) {
    if (!(h > 0.0)) throw ValidationError("spectral field: h must be > 0");
  }
  SpectralField(Grid grid, double h, std::vector<cplx> values)
      : grid_(std::move(grid)), h_(h), values_(std::move(values)) {
    if (!(h > 0.0)) throw ValidationError("spectral field: h must be > 0");
    if (values_.size() != grid_.size()) throw ValidationError("spectral field: length does not match grid");
  }

  const Grid& grid() const { return grid_; }
  double h() const { return h_; }
  Vec xi(std::size_t flat) const { return grid_.dual_point(flat, h_); }
  const std::vector<cplx>& values() const { return values_; }
  std::vector<cplx>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  const cplx& operator[](std::size_t i) const { return values_[i]; }
  cplx& operator[](std::size_t i) { return values_[i]; }

  /// sum |v|^2 dxi^n
  double norm_squared() const {
    double s = 0.0;
    for (const auto& v : values_) s += std::norm(v);
    return s * grid_.dual_cell_volume(h_);
  }

 private:
  Grid grid_;
  double h_;
  std::vector<cplx> values_;
};

namespace detail {

inline std::string index_label(const Grid& grid, std::size_t flat) {
  auto [i, j] = grid.indices(flat);
  return grid.dim() == 1 ? "[" + std::to_string(i) + "]"
                         : "[" + std::to_string(i) + ", " + std::to_string(j) + "]";
}

inline void require_finite(const Field& u, const char* context) {
  if (auto bad = u.first_non_finite())
    throw ValidationError(std::string(context) + ": non-finite value at index " + index_label(u.grid(), *bad));
}

// Permutes between FFT order (k mod N) and centred order (m = k + N/2), applying
// the (-1)^k phase that comes from the grid starting at x = -L.
inline std::size_t fft_to_centred(const Grid& g, std::size_t flat) {
  const int n = g.points_per_axis();
  auto [i, j] = g.indices(flat);
  auto shift = [n](int k) { return (k + n / 2) % n; };
  return g.dim() == 1 ? std::size_t(shift(i)) : std::size_t(shift(i)) * n + shift(j);
}

inline double centred_sign(const Grid& g, std::size_t centred_flat) {
  // k = m - N/2 and N/2 is even, so (-1)^k = (-1)^m.
  auto [i, j] = g.indices(centred_flat);
  return ((i + j) & 1) ? -1.0 : 1.0;
}

}  // namespace detail

/// u_hat_h(xi_k) = dx^n sum_x e^{-i x.xi_k/h} u(x).
inline SpectralField forward_transform(const Field& u, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("forward_transform: h must be finite and > 0");
  detail::require_finite(u, "forward_transform");
  const Grid& g = u.grid();
  std::vector<cplx> buf = u.values();
  detail::dft(buf, g.dim(), g.points_per_axis(), -1);
  SpectralField out(g, h);
  const double scale = g.cell_volume();
  for (std::size_t f = 0; f < buf.size(); ++f) {
    std::size_t m = detail::fft_to_centred(g, f);
    out[m] = buf[f] * (scale * detail::centred_sign(g, m));
  }
  return out;
}

/// u(x) = (2 pi h)^{-n} sum_xi e^{i x.xi/h} v(xi) dxi^n.
inline Field inverse_transform(const SpectralField& v, double h) {
  if (!(h > 0.0)) throw ValidationError("inverse_transform: h must be > 0");
  if (std::abs(v.h() - h) > 1e-14 * h)
    throw ValidationError("inverse_transform: spectral field was built for h=" + std::to_string(v.h()) +
                          ", requested h=" + std::to_string(h));
  const Grid& g = v.grid();
  std::vector<cplx> buf(g.size());
  for (std::size_t f = 0; f < buf.size(); ++f) {
    std::size_t m = detail::fft_to_centred(g, f);
    buf[f] = v[m] * detail::centred_sign(g, m);
  }
  detail::dft(buf, g.dim(), g.points_per_axis(), +1);
  // (2 pi h)^{-1} dxi = 1 / (2L) per axis.
  const double per_axis = 1.0 / (2.0 * g.half_length());
  const double scale = g.dim() == 1 ? per_axis : per_axis * per_axis;
  for (auto& z : buf) z *= scale;
  return Field(g, std::move(buf));
}

/// Spectral gradient components d u / d x_axis, Nyquist mode dropped.
inline std::vector<Field> spectral_gradient(const Field& u) {
  const Grid& g = u.grid();
  const int n = g.points_per_axis();
  std::vector<cplx> hat = u.values();
  detail::dft(hat, g.dim(), n, -1);
  std::vector<Field> grad;
  for (int axis = 0; axis < g.dim(); ++axis) {
    std::vector<cplx> buf(hat.size());
    for (std::size_t f = 0; f < hat.size(); ++f) {
      auto idx = g.indices(f);
      int k = idx[axis] < n / 2 ? idx[axis] : idx[axis] - n;
      if (k == -n / 2) continue;
      double kappa = pi * k / g.half_length();
      buf[f] = hat[f] * cplx(0.0, kappa) / double(g.size());
    }
    detail::dft(buf, g.dim(), n, +1);
    grad.emplace_back(g, std::move(buf));
  }
  return grad;
}

}  // namespace microloc
