#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "microloc/symbol.hpp"

namespace microloc {

// ---------------------------------------------------------------------------
// Empirical S^m membership

struct DerivativeDecay {
  std::array<int, 2> alpha{};  // x multi-index
  std::array<int, 2> beta{};   // xi multi-index
  /// Fitted exponent p in max|d^alpha_x d^beta_xi a| ~ C (1 + |xi|)^p; -inf when the derivative vanishes.
  double exponent = -std::numeric_limits<double>::infinity();
  double constant = 0.0;
  double allowed = 0.0;  // m - |beta|
  bool vanishes = false;
  bool pass = true;
};

struct SymbolClassReport {
  std::string symbol;
  double claimed_order = 0.0;
  double fit_tolerance = 0.15;
  int max_derivative_order = 2;
  std::vector<double> radii;
  int directions = 0;
  std::vector<DerivativeDecay> entries;
  bool pass = true;
};

struct SymbolClassOptions {
  int dim = 1;
  double fit_tolerance = 0.15;
  double relative_step = 1e-4;
  /// Spatial sample points; C_{alpha,beta} must bound the derivative uniformly in x.
  std::vector<Vec> x_samples = {Vec{0.0, 0.0}, Vec{0.7, -0.4}, Vec{-1.3, 1.1}};
};

namespace detail {

// Coordinates z = (x_0..x_{n-1}, xi_0..xi_{n-1}).
struct PhaseCoords {
  int dim;
  std::array<double, 4> z{};
  Vec x() const { return dim == 1 ? Vec{z[0], 0.0} : Vec{z[0], z[1]}; }
  Vec xi() const { return dim == 1 ? Vec{z[1], 0.0} : Vec{z[2], z[3]}; }
};

inline PhaseCoords make_coords(int dim, const Vec& x, const Vec& xi) {
  PhaseCoords c{dim};
  for (int i = 0; i < dim; ++i) {
    c.z[i] = x[i];
    c.z[dim + i] = xi[i];
  }
  return c;
}

template <typename Fn>
double partial(const Fn& fn, PhaseCoords c, int i, int j, double rel_step) {
  auto step = [&](int k) { return rel_step * std::max(1.0, std::abs(c.z[k])); };
  auto at = [&](double di, double dj) {
    PhaseCoords p = c;
    if (i >= 0) p.z[i] += di;
    if (j >= 0) p.z[j] += dj;
    return fn(p);
  };
  if (i < 0) return at(0, 0);
  const double si = step(i);
  if (j < 0) return (at(si, 0) - at(-si, 0)) / (2 * si);
  if (i == j) {
    PhaseCoords p = c, q = c;
    p.z[i] += si;
    q.z[i] -= si;
    return (fn(p) - 2 * fn(c) + fn(q)) / (si * si);
  }
  const double sj = step(j);
  return (at(si, sj) - at(si, -sj) - at(-si, sj) + at(-si, -sj)) / (4 * si * sj);
}

inline Vec direction(int dim, int d, int directions) {
  if (dim == 1) return Vec{(d % 2 == 0) ? 1.0 : -1.0, 0.0};
  const double t = 2.0 * pi * d / directions;
  return Vec{std::cos(t), std::sin(t)};
}

}  // namespace detail

/// Samples |d^alpha_x d^beta_xi a| for |alpha| + |beta| <= 2 on spheres |xi| = r,
/// takes the max over directions and x samples, and fits log-magnitude against
/// log(1 + r) by least squares. A term passes when its exponent is at most
/// m - |beta| + fit_tolerance.
inline SymbolClassReport verify_symbol_class(const Symbol& a, double m, const std::vector<double>& radii,
                                             int directions, const SymbolClassOptions& opt = {}) {
  if (radii.size() < 4) throw ValidationError("verify_symbol_class: need at least 4 radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ValidationError("verify_symbol_class: radii must be strictly increasing");
  if (!(radii.front() > 0.0) || radii.back() / radii.front() < 16.0)
    throw ValidationError("verify_symbol_class: radii must be positive with max/min >= 16");
  if (directions < 8) throw ValidationError("verify_symbol_class: need at least 8 directions");
  const int n = opt.dim;
  if (n != 1 && n != 2) throw ValidationError("verify_symbol_class: dim must be 1 or 2");

  SymbolClassReport report;
  report.symbol = a.name;
  report.claimed_order = m;
  report.fit_tolerance = opt.fit_tolerance;
  report.radii = radii;
  report.directions = directions;

  auto magnitude = [&](const detail::PhaseCoords& c) {
    cplx v = a(c.x(), c.xi());
    if (!is_finite(v))
      throw ValidationError("verify_symbol_class: non-finite symbol value at x=" + vec_to_string(c.x(), n) +
                            " xi=" + vec_to_string(c.xi(), n));
    return v;
  };
  auto re_part = [&](const detail::PhaseCoords& c) { return magnitude(c).real(); };
  auto im_part = [&](const detail::PhaseCoords& c) { return magnitude(c).imag(); };

  // Enumerate derivative pairs (i, j) over the 2n phase coordinates, i <= j, order <= 2.
  std::vector<std::pair<int, int>> pairs = {{-1, -1}};
  for (int i = 0; i < 2 * n; ++i) pairs.emplace_back(i, -1);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i; j < 2 * n; ++j) pairs.emplace_back(i, j);

  for (auto [i, j] : pairs) {
    DerivativeDecay entry;
    for (int k : {i, j}) {
      if (k < 0) continue;
      if (k < n) entry.alpha[k] += 1;
      else entry.beta[k - n] += 1;
    }
    const int beta_order = entry.beta[0] + entry.beta[1];
    entry.allowed = m - beta_order;

    std::vector<double> lx, ly;
    for (double r : radii) {
      double peak = 0.0;
      for (int d = 0; d < directions; ++d) {
        Vec w = detail::direction(n, d, directions);
        for (const Vec& x : opt.x_samples) {
          auto c = detail::make_coords(n, x, Vec{r * w[0], r * w[1]});
          double re = detail::partial(re_part, c, i, j, opt.relative_step);
          double im = detail::partial(im_part, c, i, j, opt.relative_step);
          peak = std::max(peak, std::hypot(re, im));
        }
      }
      // Below this level finite differences are roundoff, not signal.
      if (peak > 1e-13) {
        lx.push_back(std::log1p(r));
        ly.push_back(std::log(peak));
      }
    }
    if (lx.size() < 2) {
      entry.vanishes = true;
      entry.pass = true;
    } else {
      double mx = 0, my = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k];
        my += ly[k];
      }
      mx /= lx.size();
      my /= lx.size();
      double sxy = 0, sxx = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
      }
      entry.exponent = sxy / sxx;
      entry.constant = std::exp(my - entry.exponent * mx);
      entry.pass = entry.exponent <= entry.allowed + opt.fit_tolerance;
    }
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sampled principal-type and dissipativity checks

/// Axis-aligned box in phase space (x, xi).
struct PhaseBox {
  int dim = 1;
  Vec x_lo{}, x_hi{}, xi_lo{}, xi_hi{};
};

struct PrincipalTypeViolation {
  Vec x{}, xi{};
  double gradient_norm = 0.0;
};

struct PrincipalTypeReport {
  std::string symbol;
  std::size_t samples = 0;
  double scale = 0.0;
  std::size_t zero_points = 0;
  double min_gradient_norm = std::numeric_limits<double>::infinity();
  std::vector<PrincipalTypeViolation> violations;
  bool zero_set_empty = true;
  bool pass = true;
};

struct DissipativityReport {
  std::string symbol;
  std::size_t samples = 0;
  double max_imag = -std::numeric_limits<double>::infinity();
  Vec argmax_x{}, argmax_xi{};
  bool pass = true;
};

namespace detail {

// Odd number of points per axis so symmetric boxes include their centre.
inline int lattice_points_per_axis(int dim, std::size_t samples) {
  int q = static_cast<int>(std::ceil(std::pow(double(samples), 1.0 / (2 * dim)) - 1e-9));
  q = std::max(q, 3);
  if (q % 2 == 0) ++q;
  return q;
}

inline void check_box(const PhaseBox& box, const char* context) {
  if (box.dim != 1 && box.dim != 2) throw ValidationError(std::string(context) + ": box dim must be 1 or 2");
  for (int i = 0; i < box.dim; ++i)
    if (!(box.x_hi[i] >= box.x_lo[i]) || !(box.xi_hi[i] >= box.xi_lo[i]))
      throw ValidationError(std::string(context) + ": box bounds must satisfy lo <= hi");
}

template <typename Fn>
void for_each_lattice_point(const PhaseBox& box, int q, Fn&& fn) {
  const int n = box.dim;
  const int coords = 2 * n;
  std::array<double, 4> lo{}, hi{};
  for (int i = 0; i < n; ++i) {
    lo[i] = box.x_lo[i];
    hi[i] = box.x_hi[i];
    lo[n + i] = box.xi_lo[i];
    hi[n + i] = box.xi_hi[i];
  }
  std::size_t total = 1;
  for (int c = 0; c < coords; ++c) total *= q;
  for (std::size_t flat = 0; flat < total; ++flat) {
    PhaseCoords p{n};
    std::array<int, 4> idx{};
    std::size_t rem = flat;
    for (int c = coords - 1; c >= 0; --c) {
      idx[c] = static_cast<int>(rem % q);
      rem /= q;
      p.z[c] = q == 1 ? lo[c] : lo[c] + (hi[c] - lo[c]) * idx[c] / double(q - 1);
    }
    fn(flat, idx, p);
  }
}

}  // namespace detail

/// Locates sampled zeros of p0 (lattice points with |p0| < 1e-6 scale plus
/// bisected sign changes of Re p0 along lattice edges) and checks that the
/// finite-difference gradient of Re p0 does not vanish there.
inline PrincipalTypeReport validate_principal_type(const Symbol& p0, const PhaseBox& box, std::size_t samples) {
  if (samples < 1000) throw ValidationError("validate_principal_type: need at least 1000 samples");
  detail::check_box(box, "validate_principal_type");
  const int n = box.dim;
  const int q = detail::lattice_points_per_axis(n, samples);

  PrincipalTypeReport report;
  report.symbol = p0.name;

  std::vector<cplx> values;
  std::vector<detail::PhaseCoords> points;
  detail::for_each_lattice_point(box, q, [&](std::size_t, const std::array<int, 4>&, const detail::PhaseCoords& p) {
    values.push_back(p0(p.x(), p.xi()));
    points.push_back(p);
  });
  report.samples = values.size();
  double scale = 0.0;
  for (const auto& v : values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  report.scale = scale;
  const double zero_tol = 1e-6 * scale;

  auto re_p0 = [&](const detail::PhaseCoords& c) { return p0(c.x(), c.xi()).real(); };
  auto inspect = [&](const detail::PhaseCoords& c) {
    ++report.zero_points;
    double g2 = 0.0;
    for (int k = 0; k < 2 * n; ++k) {
      detail::PhaseCoords a = c, b = c;
      const double s = 1e-6 * std::max(1.0, std::abs(c.z[k]));
      a.z[k] += s;
      b.z[k] -= s;
      const double d = (re_p0(a) - re_p0(b)) / (2 * s);
      g2 += d * d;
    }
    const double gnorm = std::sqrt(g2);
    report.min_gradient_norm = std::min(report.min_gradient_norm, gnorm);
    if (!(gnorm > 1e-6 * scale)) report.violations.push_back({c.x(), c.xi(), gnorm});
  };

  for (std::size_t k = 0; k < values.size(); ++k)
    if (std::abs(values[k]) < zero_tol) inspect(points[k]);

  // Sign changes of Re p0 between lattice neighbours along each coordinate.
  std::size_t stride = 1;
  for (int c = 2 * n - 1; c >= 0; --c) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const int idx = static_cast<int>((k / stride) % q);
      if (idx + 1 >= q) continue;
      const std::size_t nb = k + stride;
      const double va = values[k].real(), vb = values[nb].real();
      if (!(va * vb < 0.0)) continue;
      if (std::abs(values[k]) < zero_tol || std::abs(values[nb]) < zero_tol) continue;
      detail::PhaseCoords lo = points[k], hi = points[nb];
      double flo = va;
      for (int it = 0; it < 80; ++it) {
        detail::PhaseCoords mid = lo;
        mid.z[c] = 0.5 * (lo.z[c] + hi.z[c]);
        const double fm = re_p0(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      detail::PhaseCoords root = lo;
      root.z[c] = 0.5 * (lo.z[c] + hi.z[c]);
      if (std::abs(p0(root.x(), root.xi())) < zero_tol) inspect(root);
    }
    stride *= q;
  }
  report.zero_set_empty = report.zero_points == 0;
  report.pass = report.violations.empty();
  return report;
}

/// Max of sampled Im p0 over the box; passes iff it is <= 1e-12.
inline DissipativityReport validate_dissipativity(const Symbol& p0, const PhaseBox& box, std::size_t samples) {
  if (samples < 1000) throw ValidationError("validate_dissipativity: need at least 1000 samples");
  detail::check_box(box, "validate_dissipativity");
  const int q = detail::lattice_points_per_axis(box.dim, samples);
  DissipativityReport report;
  report.symbol = p0.name;
  detail::for_each_lattice_point(box, q, [&](std::size_t, const std::array<int, 4>&, const detail::PhaseCoords& p) {
    ++report.samples;
    const double im = p0(p.x(), p.xi()).imag();
    if (im > report.max_imag) {
      report.max_imag = im;
      report.argmax_x = p.x();
      report.argmax_xi = p.xi();
    }
  });
  report.pass = report.max_imag <= 1e-12;
  return report;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const DerivativeDecay& e) {
  j = nlohmann::json{{"alpha", e.alpha},
                     {"beta", e.beta},
                     {"vanishes", e.vanishes},
                     {"allowed_exponent", e.allowed},
                     {"pass", e.pass}};
  if (e.vanishes) {
    j["exponent"] = nullptr;
    j["constant"] = 0.0;
  } else {
    j["exponent"] = e.exponent;
    j["constant"] = e.constant;
  }
}

inline void to_json(nlohmann::json& j, const SymbolClassReport& r) {
  j = nlohmann::json{{"symbol", r.symbol},
                     {"claimed_order", r.claimed_order},
                     {"fit_tolerance", r.fit_tolerance},
                     {"max_derivative_order", r.max_derivative_order},
                     {"radii", r.radii},
                     {"directions", r.directions},
                     {"entries", r.entries},
                     {"verdict", r.pass ? "pass" : "fail"}};
}

inline void to_json(nlohmann::json& j, const PrincipalTypeReport& r) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : r.violations)
    violations.push_back({{"x", v.x}, {"xi", v.xi}, {"gradient_norm", v.gradient_norm}});
  j = nlohmann::json{{"symbol", r.symbol},
                     {"samples", r.samples},
                     {"scale", r.scale},
                     {"zero_points", r.zero_points},
                     {"zero_set_empty", r.zero_set_empty},
                     {"violations", violations},
                     {"verdict", r.pass ? "pass" : "fail"}};
  if (std::isfinite(r.min_gradient_norm)) j["min_gradient_norm"] = r.min_gradient_norm;
}

inline void to_json(nlohmann::json& j, const DissipativityReport& r) {
  j = nlohmann::json{{"symbol", r.symbol},
                     {"samples", r.samples},
                     {"max_imag", r.max_imag},
                     {"argmax_x", r.argmax_x},
                     {"argmax_xi", r.argmax_xi},
                     {"verdict", r.pass ? "pass" : "fail"}};
}

}  // namespace microloc
