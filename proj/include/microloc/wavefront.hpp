#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "microloc/bichar.hpp"
#include "microloc/detail/parallel.hpp"
#include "microloc/energy.hpp"
#include "microloc/grid.hpp"
#include "microloc/symbol.hpp"
#include "microloc/symbol_checks.hpp"

namespace microloc {

// ---------------------------------------------------------------------------
// Gabor phase-space density

/// Box of frequencies [lo, hi] per axis.
struct FrequencyWindow {
  Vec lo{};
  Vec hi{};
};

struct GaborOptions {
  /// Window width; 0 selects sqrt(h).
  double sigma = 0.0;
  /// Subsampling of the grid for window centres.
  int x_stride = 1;
  /// Defaults to the whole dual lattice.
  std::optional<FrequencyWindow> window;
};

/// Gabor energy density on a lattice of window centres x (grid points, strided)
/// times dual-lattice frequencies xi inside the window.
struct PhaseSpaceDensity {
  int dim = 1;
  double h = 0.0;
  double sigma = 0.0;
  std::vector<Vec> x_points;
  std::array<int, 2> x_shape{};  // points per axis
  std::vector<Vec> xi_points;
  std::array<int, 2> xi_shape{};
  /// values[ix * xi_points.size() + ik]
  std::vector<double> values;
  double cell_volume = 0.0;
  double total_mass = 0.0;

  double at(std::size_t ix, std::size_t ik) const { return values[ix * xi_points.size() + ik]; }
  /// total_mass / (2 pi h)^n; approximates ||u||^2 when the window holds the spectrum.
  double normalized_mass() const { return total_mass / std::pow(2.0 * pi * h, dim); }
};

namespace detail {

// Centred dual-lattice indices whose coordinate lies in [lo, hi].
inline std::vector<int> window_indices(const Grid& g, double h, double lo, double hi) {
  std::vector<int> idx;
  for (int m = 0; m < g.points_per_axis(); ++m) {
    const double xi = g.dual_coordinate(m, h);
    if (xi >= lo - 1e-12 * std::abs(lo) && xi <= hi + 1e-12 * std::abs(hi)) idx.push_back(m);
  }
  return idx;
}

}  // namespace detail

/// density(x0, xi0) = |dx^n sum_y e^{-i xi0.y/h} g_sigma(y - x0) u(y)|^2 with g_sigma
/// the L^2-normalized periodic Gaussian window.
inline PhaseSpaceDensity gabor_transform(const Field& u, double h, const GaborOptions& opt = {}) {
  const Grid& g = u.grid();
  const int n = g.dim();
  if (!(h > 0.0)) throw ValidationError("gabor_transform: h must be > 0");
  const double sigma = opt.sigma > 0.0 ? opt.sigma : std::sqrt(h);
  if (sigma < 2.0 * g.spacing())
    throw ValidationError("gabor_transform: window width " + std::to_string(sigma) + " is narrower than 2 dx = " +
                          std::to_string(2.0 * g.spacing()));
  if (opt.x_stride < 1 || g.points_per_axis() % opt.x_stride != 0)
    throw ValidationError("gabor_transform: x_stride must divide N");
  detail::require_finite(u, "gabor_transform");

  const double nyq = g.nyquist(h);
  FrequencyWindow window{Vec{-nyq, -nyq}, Vec{nyq, nyq}};
  if (opt.window) {
    window = *opt.window;
    for (int i = 0; i < n; ++i) {
      if (window.lo[i] < -nyq - 1e-12 || window.hi[i] > nyq + 1e-12 || !(window.lo[i] <= window.hi[i]))
        throw ValidationError("gabor_transform: frequency window must lie inside the dual lattice range [" +
                              std::to_string(-nyq) + ", " + std::to_string(nyq) + "]");
    }
  }

  PhaseSpaceDensity d;
  d.dim = n;
  d.h = h;
  d.sigma = sigma;

  const int nx_axis = g.points_per_axis() / opt.x_stride;
  std::vector<std::size_t> x_flat;
  if (n == 1) {
    d.x_shape = {nx_axis, 1};
    for (int i = 0; i < nx_axis; ++i) x_flat.push_back(std::size_t(i) * opt.x_stride);
  } else {
    d.x_shape = {nx_axis, nx_axis};
    for (int i = 0; i < nx_axis; ++i)
      for (int j = 0; j < nx_axis; ++j)
        x_flat.push_back(std::size_t(i) * opt.x_stride * g.points_per_axis() + std::size_t(j) * opt.x_stride);
  }
  for (auto f : x_flat) d.x_points.push_back(g.point(f));

  const auto idx0 = detail::window_indices(g, h, window.lo[0], window.hi[0]);
  std::vector<std::size_t> xi_flat;
  if (n == 1) {
    d.xi_shape = {static_cast<int>(idx0.size()), 1};
    for (int m : idx0) xi_flat.push_back(std::size_t(m));
  } else {
    const auto idx1 = detail::window_indices(g, h, window.lo[1], window.hi[1]);
    d.xi_shape = {static_cast<int>(idx0.size()), static_cast<int>(idx1.size())};
    for (int a : idx0)
      for (int b : idx1) xi_flat.push_back(std::size_t(a) * g.points_per_axis() + b);
  }
  for (auto f : xi_flat) d.xi_points.push_back(g.dual_point(f, h));

  const double norm = std::pow(pi * sigma * sigma, -0.25 * n);
  const double L = g.half_length();
  d.values.assign(d.x_points.size() * d.xi_points.size(), 0.0);
  detail::parallel_for(d.x_points.size(), [&](std::size_t ix) {
    const Vec c = d.x_points[ix];
    Field windowed(g);
    for (std::size_t f = 0; f < g.size(); ++f) {
      const Vec y = g.point(f);
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dist = periodic_distance(y[i], c[i], L);
        r2 += dist * dist;
      }
      windowed[f] = norm * std::exp(-r2 / (2.0 * sigma * sigma)) * u[f];
    }
    const SpectralField spec = forward_transform(windowed, h);
    double* row = d.values.data() + ix * d.xi_points.size();
    for (std::size_t k = 0; k < xi_flat.size(); ++k) row[k] = std::norm(spec[xi_flat[k]]);
  });

  const double dx_cell = std::pow(g.spacing() * opt.x_stride, n);
  d.cell_volume = dx_cell * g.dual_cell_volume(h);
  double s = 0.0;
  for (double v : d.values) s += v;
  d.total_mass = s * d.cell_volume;
  return d;
}

struct PhaseCentroid {
  Vec x{};
  Vec xi{};
};

/// Density-weighted mean of (x, xi) over the lattice.
inline PhaseCentroid density_centroid(const PhaseSpaceDensity& d) {
  PhaseCentroid c;
  double total = 0.0;
  for (std::size_t ix = 0; ix < d.x_points.size(); ++ix)
    for (std::size_t ik = 0; ik < d.xi_points.size(); ++ik) {
      const double w = d.at(ix, ik);
      total += w;
      for (int i = 0; i < d.dim; ++i) {
        c.x[i] += w * d.x_points[ix][i];
        c.xi[i] += w * d.xi_points[ik][i];
      }
    }
  if (total > 0.0)
    for (int i = 0; i < d.dim; ++i) {
      c.x[i] /= total;
      c.xi[i] /= total;
    }
  return c;
}

// ---------------------------------------------------------------------------
// Thresholded support

struct WavefrontPoint {
  std::size_t ix = 0;
  std::size_t ik = 0;
  Vec x{};
  Vec xi{};
  double density = 0.0;
};

struct WavefrontEstimate {
  double threshold_fraction = 0.1;
  double threshold = 0.0;
  std::vector<WavefrontPoint> points;  // density descending
};

/// Lattice points with density >= delta * max, sorted by density descending.
inline WavefrontEstimate estimate_wavefront(const PhaseSpaceDensity& d, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("estimate_wavefront: delta must lie in (0, 1)");
  WavefrontEstimate est;
  est.threshold_fraction = delta;
  const double peak = d.values.empty() ? 0.0 : *std::max_element(d.values.begin(), d.values.end());
  if (!(peak > 0.0)) return est;
  est.threshold = delta * peak;
  for (std::size_t ix = 0; ix < d.x_points.size(); ++ix)
    for (std::size_t ik = 0; ik < d.xi_points.size(); ++ik) {
      const double v = d.at(ix, ik);
      if (v >= est.threshold) est.points.push_back({ix, ik, d.x_points[ix], d.xi_points[ik], v});
    }
  std::stable_sort(est.points.begin(), est.points.end(),
                   [](const WavefrontPoint& a, const WavefrontPoint& b) { return a.density > b.density; });
  return est;
}

/// Connected components of the estimate under lattice adjacency (each of the
/// 2n lattice indices differs by at most one).
inline std::size_t count_clusters(const WavefrontEstimate& est, const PhaseSpaceDensity& d) {
  using Key = std::array<int, 4>;
  auto key_of = [&](const WavefrontPoint& p) {
    Key k{};
    k[0] = static_cast<int>(p.ix / d.x_shape[1]);
    k[1] = static_cast<int>(p.ix % d.x_shape[1]);
    k[2] = static_cast<int>(p.ik / d.xi_shape[1]);
    k[3] = static_cast<int>(p.ik % d.xi_shape[1]);
    return k;
  };
  std::map<Key, int> label;
  for (const auto& p : est.points) label[key_of(p)] = -1;
  int clusters = 0;
  for (auto& [key, lab] : label) {
    if (lab >= 0) continue;
    lab = clusters;
    std::vector<Key> stack{key};
    while (!stack.empty()) {
      Key cur = stack.back();
      stack.pop_back();
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          for (int c = -1; c <= 1; ++c)
            for (int e = -1; e <= 1; ++e) {
              Key nb{cur[0] + a, cur[1] + b, cur[2] + c, cur[3] + e};
              auto it = label.find(nb);
              if (it != label.end() && it->second < 0) {
                it->second = clusters;
                stack.push_back(nb);
              }
            }
    }
    ++clusters;
  }
  return static_cast<std::size_t>(clusters);
}

// ---------------------------------------------------------------------------
// Split-step evolution of i h du/dt = Op_h(g(xi) + f(x)) u

struct Evolution {
  double h = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Field> snapshots;
  std::string time_convention =
      "classical time = physical time; generator Op_h(p0) scaled by 1/h; compare h*log(mass) with l(t)";

  std::vector<double> masses() const {
    std::vector<double> m;
    for (const auto& s : snapshots) m.push_back(s.norm_squared());
    return m;
  }
};

/// Fraction of spectral mass with some |k| > 3N/8 (centred index), i.e. near Nyquist.
inline double nyquist_band_fraction(const Field& u, double h) {
  const SpectralField v = forward_transform(u, h);
  const Grid& g = u.grid();
  const int n = g.points_per_axis();
  double outer = 0.0, total = 0.0;
  for (std::size_t m = 0; m < v.size(); ++m) {
    const double w = std::norm(v[m]);
    total += w;
    auto idx = g.indices(m);
    bool edge = false;
    for (int ax = 0; ax < g.dim(); ++ax) edge = edge || std::abs(idx[ax] - n / 2) > 3 * n / 8;
    if (edge) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

/// Strang splitting: half step e^{-i f dt/(2h)}, full spectral step e^{-i g(xi) dt/h},
/// half step potential. Returns a snapshot at t = 0 and after every step.
inline Evolution evolve(const SplitSymbol& p0, const Field& u0, double h, double t_end, double dt) {
  const Grid& g = u0.grid();
  const int n = g.dim();
  if (!(h > 0.0)) throw ValidationError("evolve: h must be > 0");
  if (!(t_end > 0.0)) throw ValidationError("evolve: t_end must be > 0");
  if (!(dt > 0.0) || dt > 0.01 * t_end * (1.0 + 1e-12))
    throw ValidationError("evolve: dt must satisfy 0 < dt <= 0.01 t_end");
  detail::require_finite(u0, "evolve");

  // Dissipativity of the generator on the sampled region, and exhaustively on the lattices.
  const double nyq = g.nyquist(h);
  const double L = g.half_length();
  PhaseBox box{n, Vec{-L, n == 2 ? -L : 0.0}, Vec{L, n == 2 ? L : 0.0}, Vec{-nyq, n == 2 ? -nyq : 0.0},
               Vec{nyq, n == 2 ? nyq : 0.0}};
  const auto report = validate_dissipativity(to_symbol(p0), box, 1000);
  if (!report.pass)
    throw ValidationError("evolve: generator is not dissipative (max Im p0 = " + std::to_string(report.max_imag) + ")");

  std::vector<cplx> half_potential(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx f = p0.potential(g.point(i));
    if (!is_finite(f) || f.imag() > 1e-12)
      throw ValidationError("evolve: potential must be finite with Im f <= 0 (index " + detail::index_label(g, i) + ")");
    half_potential[i] = std::exp(cplx(0.0, -1.0) * f * (0.5 * dt / h));
  }
  std::vector<cplx> kinetic(g.size());
  for (std::size_t m = 0; m < g.size(); ++m) {
    const cplx kv = p0.kinetic(g.dual_point(m, h));
    if (!is_finite(kv) || kv.imag() > 1e-12)
      throw ValidationError("evolve: kinetic symbol must be finite with Im g <= 0");
    kinetic[m] = std::exp(cplx(0.0, -1.0) * kv * (dt / h));
  }

  const double outer = nyquist_band_fraction(u0, h);
  if (outer > 1e-10)
    throw ValidationError("evolve: initial spectral content near Nyquist (" + std::to_string(outer) +
                          " of the mass); refine the grid or reduce the frequency");

  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Evolution ev;
  ev.h = h;
  ev.dt = t_end / static_cast<double>(steps);
  if (std::abs(ev.dt - dt) > 1e-9 * dt) {
    for (std::size_t i = 0; i < g.size(); ++i)
      half_potential[i] = std::exp(cplx(0.0, -1.0) * p0.potential(g.point(i)) * (0.5 * ev.dt / h));
    for (std::size_t m = 0; m < g.size(); ++m)
      kinetic[m] = std::exp(cplx(0.0, -1.0) * p0.kinetic(g.dual_point(m, h)) * (ev.dt / h));
  }

  Field u = u0;
  ev.times.push_back(0.0);
  ev.snapshots.push_back(u);
  for (std::size_t s = 1; s <= steps; ++s) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_potential[i];
    SpectralField v = forward_transform(u, h);
    for (std::size_t m = 0; m < v.size(); ++m) v[m] *= kinetic[m];
    u = inverse_transform(v, h);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_potential[i];
    ev.times.push_back(s == steps ? t_end : s * ev.dt);
    ev.snapshots.push_back(u);
  }
  const double final_outer = nyquist_band_fraction(u, h);
  if (final_outer > 1e-6)
    throw GuardError("evolve: spectral content reached the Nyquist band (" + std::to_string(final_outer) +
                     " of the mass at t_end)");
  return ev;
}

// ---------------------------------------------------------------------------
// Propagation check: Gabor centroid of the evolved field versus the bicharacteristic

struct PropagationOptions {
  double dt = 0.0;               // 0 selects t_end / 200
  double sigma = 0.0;            // 0 selects sqrt(h)
  int x_stride = 4;
  std::size_t snapshot_every = 10;  // Gabor centroids every k steps (and at t_end)
  double tol = 1e-8;
};

struct PropagationSample {
  double t = 0.0;
  PhaseCentroid centroid;
  PhasePoint ray;
  double log_mass = 0.0;     // log(||u(t)||^2 / ||u(0)||^2)
  double ray_log_amp = 0.0;  // l(t) - l(0)
};

struct PropagationReport {
  double h = 0.0;
  double sigma = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  Vec x0{}, xi0{};
  int dim = 1;
  double bound = 0.0;  // max(2 sigma, 0.1)
  double max_x_deviation = 0.0;
  double max_xi_deviation = 0.0;
  /// max_t |h log-mass(t) - (l(t) - l(0))|
  double decay_gap = 0.0;
  std::vector<PropagationSample> samples;
  std::string time_convention;
  std::string surrogate_note =
      "dynamical surrogate: i h du/dt = Op_h(p0) u stands in for solutions of P_h u_h = 0";
};

/// Evolves coherent_state(x0, xi0, h), tracks the Gabor centroid, integrates the
/// bicharacteristic from (x0, xi0) to the same times, and reports the largest
/// deviations and the gap between the field's log-mass decay (times h) and
/// 2 int Im p0 along the ray.
inline PropagationReport propagation_check(const SplitSymbol& p0, const Grid& grid, const Vec& x0, const Vec& xi0,
                                           double h, double t_end, const PropagationOptions& opt = {}) {
  const int n = grid.dim();
  const double dt = opt.dt > 0.0 ? opt.dt : t_end / 200.0;
  const Field u0 = coherent_state(grid, x0, xi0, h);
  const Evolution ev = evolve(p0, u0, h, t_end, dt);

  PropagationReport rep;
  rep.h = h;
  rep.sigma = opt.sigma > 0.0 ? opt.sigma : std::sqrt(h);
  rep.t_end = t_end;
  rep.dt = ev.dt;
  rep.x0 = x0;
  rep.xi0 = xi0;
  rep.dim = n;
  rep.bound = std::max(2.0 * rep.sigma, 0.1);
  rep.time_convention = ev.time_convention;

  GaborOptions gopt;
  gopt.sigma = rep.sigma;
  gopt.x_stride = opt.x_stride;

  const Symbol ray_symbol = to_symbol(p0, "split");
  FlowOptions fopt;
  fopt.dim = n;
  PhasePoint ray{x0, xi0};
  double ell = 0.0;
  double ray_time = 0.0;
  const double mass0 = ev.snapshots.front().norm_squared();

  const std::size_t every = std::max<std::size_t>(1, opt.snapshot_every);
  for (std::size_t s = 0; s < ev.snapshots.size(); ++s) {
    if (s % every != 0 && s + 1 != ev.snapshots.size()) continue;
    const double t = ev.times[s];
    if (t > ray_time) {
      fopt.initial_log_amplitude = ell;
      const Trajectory seg = flow(ray_symbol, ray, t - ray_time, opt.tol, fopt);
      if (!seg.completed()) throw GuardError("propagation_check: bicharacteristic aborted: " + seg.message);
      ray = seg.points.back();
      ell = seg.log_amplitude.back();
      ray_time = t;
    }
    PropagationSample sample;
    sample.t = t;
    sample.centroid = density_centroid(gabor_transform(ev.snapshots[s], h, gopt));
    sample.ray = ray;
    sample.log_mass = std::log(ev.snapshots[s].norm_squared() / mass0);
    sample.ray_log_amp = ell;
    Vec dx{}, dk{};
    for (int i = 0; i < n; ++i) {
      dx[i] = sample.centroid.x[i] - ray.x[i];
      dk[i] = sample.centroid.xi[i] - ray.xi[i];
    }
    rep.max_x_deviation = std::max(rep.max_x_deviation, norm(dx, n));
    rep.max_xi_deviation = std::max(rep.max_xi_deviation, norm(dk, n));
    rep.decay_gap = std::max(rep.decay_gap, std::abs(h * sample.log_mass - ell));
    rep.samples.push_back(sample);
  }
  return rep;
}

inline void to_json(nlohmann::json& j, const PropagationReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"t", s.t},
                       {"centroid_x", s.centroid.x},
                       {"centroid_xi", s.centroid.xi},
                       {"ray_x", s.ray.x},
                       {"ray_xi", s.ray.xi},
                       {"log_mass", s.log_mass},
                       {"ray_log_amplitude", s.ray_log_amp}});
  j = nlohmann::json{{"h", r.h},
                     {"sigma", r.sigma},
                     {"t_end", r.t_end},
                     {"dt", r.dt},
                     {"dim", r.dim},
                     {"x0", r.x0},
                     {"xi0", r.xi0},
                     {"deviation_bound", r.bound},
                     {"max_x_deviation", r.max_x_deviation},
                     {"max_xi_deviation", r.max_xi_deviation},
                     {"decay_gap", r.decay_gap},
                     {"time_convention", r.time_convention},
                     {"surrogate_note", r.surrogate_note},
                     {"samples", samples}};
}

}  // namespace microloc
