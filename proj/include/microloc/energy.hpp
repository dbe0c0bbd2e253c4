#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "microloc/detail/parallel.hpp"
#include "microloc/grid.hpp"
#include "microloc/partition.hpp"
#include "microloc/quantize.hpp"
#include "microloc/symbol.hpp"

namespace microloc {

/// epsilon_h = dx^n sum_x |P_h u(x)|^2.
inline double dissipation_rate(const Symbol& a, const Field& u, double h) {
  return apply(a, u, h).norm_squared();
}

/// Per-patch integrals of chi_j |P_h u|^2; they sum to dissipation_rate.
inline std::vector<double> localized_dissipation(const Symbol& a, const Field& u, double h,
                                                 const PartitionOfUnity& pu) {
  if (!(pu.grid() == u.grid())) throw ValidationError("localized_dissipation: partition and field grids differ");
  return decompose(pu, energy_density(apply(a, u, h)));
}

struct KernelOracleResult {
  double value = 0.0;
  /// |Im| of the Hermitian form before taking the real part.
  double imaginary_residue = 0.0;
};

/// Largest grid the brute-force kernel oracle accepts.
inline constexpr int kKernelOracleMaxPoints = 64;

/// Brute-force evaluation of epsilon_h through the operator kernel, independent of the FFT.
///
/// K(x, y) = (2 pi h)^{-1} sum_xi e^{i (x - y) xi / h} a(x, xi) dxi is built by
/// direct summation, then
///   epsilon = sum_{y, y'} conj(u(y')) M(y', y) u(y) dy dy',
///   M(y', y) = sum_x conj(K(x, y')) K(x, y) dx,
/// which is the squared modulus of P_h u integrated over x.
inline KernelOracleResult kernel_oracle(const Symbol& a, const Field& u, double h) {
  const Grid& g = u.grid();
  if (g.dim() != 1) throw ValidationError("kernel_oracle: only 1D grids are supported");
  if (g.points_per_axis() > kKernelOracleMaxPoints)
    throw ValidationError("kernel_oracle: N=" + std::to_string(g.points_per_axis()) + " exceeds the limit " +
                          std::to_string(kKernelOracleMaxPoints) + " (cost is N^3)");
  if (!(h > 0.0)) throw ValidationError("kernel_oracle: h must be > 0");
  detail::require_finite(u, "kernel_oracle");
  const int n = g.points_per_axis();
  const double dx = g.spacing();
  const double dxi = g.dual_spacing(h);
  const double prefactor = dxi / (2.0 * pi * h);

  // kernel[x * n + y]
  std::vector<cplx> kernel(std::size_t(n) * n);
  detail::parallel_for(std::size_t(n), [&](std::size_t ix) {
    const double x = g.coordinate(static_cast<int>(ix));
    std::vector<cplx> symbol_row(n);
    for (int m = 0; m < n; ++m)
      symbol_row[m] = detail::checked_symbol_value(a, Vec{x, 0.0}, Vec{g.dual_coordinate(m, h), 0.0}, 1);
    for (int iy = 0; iy < n; ++iy) {
      const double y = g.coordinate(iy);
      cplx acc = 0.0;
      for (int m = 0; m < n; ++m) acc += std::polar(1.0, (x - y) * g.dual_coordinate(m, h) / h) * symbol_row[m];
      kernel[ix * n + iy] = acc * prefactor;
    }
  });

  std::vector<cplx> gram(std::size_t(n) * n);
  detail::parallel_for(std::size_t(n), [&](std::size_t yp) {
    for (int y = 0; y < n; ++y) {
      cplx acc = 0.0;
      for (int x = 0; x < n; ++x) acc += std::conj(kernel[x * n + yp]) * kernel[x * n + y];
      gram[yp * n + y] = acc * dx;
    }
  });

  cplx form = 0.0;
  for (int yp = 0; yp < n; ++yp) {
    cplx row = 0.0;
    for (int y = 0; y < n; ++y) row += gram[std::size_t(yp) * n + y] * u[y];
    form += std::conj(u[yp]) * row;
  }
  form *= dx * dx;
  return {form.real(), std::abs(form.imag())};
}

struct PhaseSpaceLimit {
  double value = 0.0;
  double tail_bound = 0.0;           // absolute
  double relative_tail_bound = 0.0;  // tail_bound / value
  double truncation_radius = 0.0;
  std::size_t frequency_nodes = 0;
};

namespace detail {

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kGaussNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                      0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066833683828,
                                                        0.3626837833783620, 0.3626837833783620, 0.3137066833683828,
                                                        0.2223810344533745, 0.1012285362903763};

struct RadialNode {
  double r;
  double weight;  // includes the Jacobian of r = sinh(t)
};

// Composite Gauss-Legendre in t on [0, asinh R] with r = sinh t, which clusters
// nodes near the origin where symbols vary on the unit scale.
inline std::vector<RadialNode> radial_nodes(double radius, double panel = 0.05) {
  const double tmax = std::asinh(radius);
  const int panels = std::max(1, static_cast<int>(std::ceil(tmax / panel)));
  const double w = tmax / panels;
  std::vector<RadialNode> nodes;
  nodes.reserve(panels * kGaussNodes.size());
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * w;
    for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
      const double t = mid + 0.5 * w * kGaussNodes[k];
      nodes.push_back({std::sinh(t), 0.5 * w * kGaussWeights[k] * std::cosh(t)});
    }
  }
  return nodes;
}

}  // namespace detail

/// The asymptotic functional int int |a(x, xi)|^2 |u(x)|^2 dxi dx, with xi
/// restricted to the ball |xi| <= truncation_radius.
///
/// Requires order < -dim/2 so |a|^2 is integrable in xi. The tail beyond the
/// ball is bounded by assuming |a(x, xi)| <= |a(x, R w)| (|xi| / R)^m and must
/// stay below 1e-8 of the result.
inline PhaseSpaceLimit phase_space_limit_paper(const Symbol& a, const Field& u, double truncation_radius) {
  const Grid& g = u.grid();
  const int n = g.dim();
  if (!(a.order < -0.5 * n))
    throw ValidationError("phase_space_limit_paper: symbol order " + std::to_string(a.order) +
                          " is not < -dim/2, so |a|^2 is not integrable in xi");
  if (!(truncation_radius > 0.0)) throw ValidationError("phase_space_limit_paper: truncation_radius must be > 0");
  detail::require_finite(u, "phase_space_limit_paper");

  PhaseSpaceLimit out;
  out.truncation_radius = truncation_radius;
  const double mass = u.norm_squared();
  if (mass == 0.0) return out;

  const auto radial = detail::radial_nodes(truncation_radius);
  const int angles = n == 1 ? 2 : 64;
  std::vector<Vec> dirs;
  for (int k = 0; k < angles; ++k) {
    if (n == 1) dirs.push_back(Vec{k == 0 ? 1.0 : -1.0, 0.0});
    else dirs.push_back(Vec{std::cos(2 * pi * k / angles), std::sin(2 * pi * k / angles)});
  }
  const double angle_weight = n == 1 ? 1.0 : 2.0 * pi / angles;
  out.frequency_nodes = radial.size() * dirs.size();

  // Per grid point: weighted |u|^2 times the xi-integral of |a(x, .)|^2, and the
  // sphere maximum at |xi| = R for the tail bound.
  auto xi_integral = [&](const Vec& x) {
    double s = 0.0;
    for (const auto& node : radial) {
      const double radial_weight = node.weight * (n == 2 ? node.r : 1.0);
      for (const auto& w : dirs)
        s += radial_weight * std::norm(detail::checked_symbol_value(a, x, Vec{node.r * w[0], node.r * w[1]}, n));
    }
    return s * angle_weight;
  };
  auto sphere_max = [&](const Vec& x) {
    double best = 0.0;
    for (const auto& w : dirs)
      best = std::max(best, std::norm(detail::checked_symbol_value(
                                a, x, Vec{truncation_radius * w[0], truncation_radius * w[1]}, n)));
    return best;
  };

  std::vector<double> value_parts(g.size(), 0.0), tail_parts(g.size(), 0.0);
  if (a.separable) {
    double g_integral = 0.0;
    for (const auto& node : radial) {
      const double radial_weight = node.weight * (n == 2 ? node.r : 1.0);
      for (const auto& w : dirs) {
        const cplx gv = a.separable->g(Vec{node.r * w[0], node.r * w[1]});
        if (!is_finite(gv)) throw ValidationError("phase_space_limit_paper: non-finite symbol value");
        g_integral += radial_weight * std::norm(gv);
      }
    }
    g_integral *= angle_weight;
    double g_sphere = 0.0;
    for (const auto& w : dirs)
      g_sphere = std::max(g_sphere, std::norm(a.separable->g(Vec{truncation_radius * w[0], truncation_radius * w[1]})));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double weight = std::norm(a.separable->f(g.point(i))) * std::norm(u[i]);
      value_parts[i] = weight * g_integral;
      tail_parts[i] = weight * g_sphere;
    }
  } else {
    const std::size_t work = g.size() * out.frequency_nodes;
    if (work > (std::size_t(1) << 30))
      throw ValidationError("phase_space_limit_paper: grid x frequency nodes too large for the dense quadrature");
    detail::parallel_for(g.size(), [&](std::size_t i) {
      if (u[i] == cplx(0.0)) return;
      const Vec x = g.point(i);
      value_parts[i] = std::norm(u[i]) * xi_integral(x);
      tail_parts[i] = std::norm(u[i]) * sphere_max(x);
    });
  }

  double value = 0.0, tail_weight = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    value += value_parts[i];
    tail_weight += tail_parts[i];
  }
  value *= g.cell_volume();
  tail_weight *= g.cell_volume();
  // int_{|xi| > R} (|xi| / R)^{2m} dxi = S_n R^n / (-2m - n), S_1 = 2, S_2 = 2 pi.
  const double sphere_area = n == 1 ? 2.0 : 2.0 * pi;
  const double tail_volume = sphere_area * std::pow(truncation_radius, n) / (-2.0 * a.order - n);
  out.value = value;
  out.tail_bound = tail_weight * tail_volume;
  out.relative_tail_bound = value > 0.0 ? out.tail_bound / value : 0.0;
  if (out.relative_tail_bound > 1e-8)
    throw ValidationError("phase_space_limit_paper: tail bound " + std::to_string(out.relative_tail_bound) +
                          " exceeds 1e-8 of the integral; increase truncation_radius beyond " +
                          std::to_string(truncation_radius));
  return out;
}

/// int |a(x, xi0)|^2 |u(x)|^2 dx: the h -> 0 limit of epsilon_h for states concentrated at frequency xi0.
inline double frozen_frequency_limit(const Symbol& a, const Field& u, const Vec& xi0) {
  const Grid& g = u.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    s += std::norm(detail::checked_symbol_value(a, g.point(i), xi0, g.dim())) * std::norm(u[i]);
  return s * g.cell_volume();
}

/// u(x) = (pi h)^{-n/4} e^{i (x - x0).xi0 / h} e^{-|x - x0|^2 / (2h)}.
inline Field coherent_state(const Grid& grid, const Vec& x0, const Vec& xi0, double h) {
  if (!(h > 0.0)) throw ValidationError("coherent_state: h must be > 0");
  const int n = grid.dim();
  const double width = std::sqrt(h);
  if (width < 4.0 * grid.spacing())
    throw ValidationError("coherent_state: width sqrt(h)=" + std::to_string(width) +
                          " is below 4 dx=" + std::to_string(4.0 * grid.spacing()) + "; refine the grid");
  // Gaussian must fall below 1e-12 of its peak before reaching the box edge.
  const double margin = std::sqrt(2.0 * h * std::log(1e12));
  for (int i = 0; i < n; ++i) {
    if (grid.half_length() - std::abs(x0[i]) < margin)
      throw ValidationError("coherent_state: centre " + vec_to_string(x0, n) + " is within " + std::to_string(margin) +
                            " of the box edge");
    if (std::abs(xi0[i]) + 8.0 * width > grid.nyquist(h))
      throw ValidationError("coherent_state: frequency " + vec_to_string(xi0, n) +
                            " is not resolved by the dual lattice (Nyquist " + std::to_string(grid.nyquist(h)) + ")");
  }
  const double amplitude = std::pow(pi * h, -0.25 * n);
  return Field::sample(grid, [&](const Vec& x) {
    Vec d{x[0] - x0[0], x[1] - x0[1]};
    const double r2 = dot(d, d, n);
    return amplitude * std::exp(-r2 / (2.0 * h)) * std::polar(1.0, dot(d, xi0, n) / h);
  });
}

/// nu int |grad u|^2 dx with the gradient computed spectrally.
inline double classical_dissipation(const Field& u, double viscosity) {
  if (!(viscosity >= 0.0)) throw ValidationError("classical_dissipation: viscosity must be >= 0");
  detail::require_finite(u, "classical_dissipation");
  double s = 0.0;
  for (const Field& component : spectral_gradient(u)) s += component.norm_squared();
  return viscosity * s;
}

struct ConvergenceRow {
  double h = 0.0;
  double eps = 0.0;
  std::vector<double> parts;
  /// NaN when the phase-space functional is not computable for this symbol/radius.
  double limit_paper = std::numeric_limits<double>::quiet_NaN();
  double limit_frozen = 0.0;
  double gap_paper = std::numeric_limits<double>::quiet_NaN();
  double gap_frozen = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Why limit_paper is missing, when it is.
  std::string paper_limit_note;
};

struct SweepOptions {
  /// Frequency at which the state family concentrates; feeds frozen_frequency_limit.
  Vec xi0{};
  double truncation_radius = 1024.0;
};

using StateFamily = std::function<Field(double h)>;

inline double relative_gap(double value, double reference) {
  const double diff = std::abs(value - reference);
  return reference != 0.0 ? diff / std::abs(reference) : diff;
}

/// One row per h: epsilon_h, its partition parts, both candidate limits and the relative gaps to them.
inline ConvergenceTable h_sweep(const Symbol& a, const StateFamily& states, const std::vector<double>& h_list,
                                const PartitionOfUnity& pu, const SweepOptions& opt = {}) {
  if (h_list.size() < 4) throw ValidationError("h_sweep: need at least 4 values in h_list");
  for (std::size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1])) throw ValidationError("h_sweep: h_list must be strictly decreasing");
  if (!(h_list.back() > 0.0)) throw ValidationError("h_sweep: h values must be > 0");

  ConvergenceTable table;
  for (double h : h_list) {
    Field u = states(h);
    Field pu_field = apply(a, u, h);
    ConvergenceRow row;
    row.h = h;
    row.eps = pu_field.norm_squared();
    row.parts = decompose(pu, energy_density(pu_field));
    row.limit_frozen = frozen_frequency_limit(a, u, opt.xi0);
    row.gap_frozen = relative_gap(row.eps, row.limit_frozen);
    try {
      row.limit_paper = phase_space_limit_paper(a, u, opt.truncation_radius).value;
      row.gap_paper = relative_gap(row.eps, row.limit_paper);
    } catch (const ValidationError& e) {
      table.paper_limit_note = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace microloc
