#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>
#include <json.hpp>

#include "microloc/symbol.hpp"

namespace microloc {

struct PhasePoint {
  Vec x{};
  Vec xi{};
};

enum class FlowStatus { completed, blow_up, step_underflow, step_limit };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::completed: return "completed";
    case FlowStatus::blow_up: return "blow_up";
    case FlowStatus::step_underflow: return "step_underflow";
    case FlowStatus::step_limit: return "step_limit";
  }
  return "unknown";
}

/// Time-sampled bicharacteristic with log-amplitude l = log |u|^2 along it.
/// Times are strictly monotone in the direction of integration.
struct Trajectory {
  int dim = 1;
  std::vector<double> times;
  std::vector<PhasePoint> points;
  std::vector<double> log_amplitude;
  /// Accepted step sizes and their embedded error estimates (scaled norm, <= 1 means within tol).
  std::vector<double> step_sizes;
  std::vector<double> error_estimates;
  std::size_t rejected_steps = 0;
  FlowStatus status = FlowStatus::completed;
  std::string message;

  bool completed() const { return status == FlowStatus::completed; }
  std::size_t size() const { return times.size(); }
};

enum class GradientMode { automatic, analytic, finite_difference };

struct FlowOptions {
  int dim = 1;
  double initial_log_amplitude = 0.0;
  GradientMode gradient = GradientMode::automatic;
  std::size_t max_steps = 1'000'000;
  double blow_up_radius = 1e6;
};

/// Gradient of Re p0 by central differences with step 1e-6 max(1, |coordinate|).
inline PhaseGradient finite_difference_gradient(const Symbol& p0, const Vec& x, const Vec& xi, int dim) {
  PhaseGradient g;
  auto re = [&](const Vec& a, const Vec& b) { return p0(a, b).real(); };
  for (int i = 0; i < dim; ++i) {
    const double sx = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += sx;
    xm[i] -= sx;
    g.dx[i] = (re(xp, xi) - re(xm, xi)) / (2 * sx);
    const double sk = 1e-6 * std::max(1.0, std::abs(xi[i]));
    Vec kp = xi, km = xi;
    kp[i] += sk;
    km[i] -= sk;
    g.dxi[i] = (re(x, kp) - re(x, km)) / (2 * sk);
  }
  return g;
}

namespace detail {

// State layout: x0, x1, xi0, xi1, l.
using FlowState = std::array<double, 5>;

struct HamiltonianSystem {
  const Symbol* p0;
  int dim;
  bool analytic;

  void operator()(const FlowState& s, FlowState& ds, double /*t*/) const {
    const Vec x{s[0], s[1]};
    const Vec xi{s[2], s[3]};
    const PhaseGradient g = analytic ? p0->re_gradient(x, xi) : finite_difference_gradient(*p0, x, xi, dim);
    ds = {};
    for (int i = 0; i < dim; ++i) {
      ds[i] = g.dxi[i];
      ds[2 + i] = -g.dx[i];
    }
    ds[4] = 2.0 * p0->evaluate(x, xi).imag();
  }
};

}  // namespace detail

/// Integrates dx/dt = d_xi Re p0, dxi/dt = -d_x Re p0, dl/dt = 2 Im p0 with an
/// adaptive Dormand-Prince 5(4) pair. A step is accepted when every component
/// of the embedded error estimate is within tol * max(1, |y_i|). Negative
/// t_end integrates backwards.
inline Trajectory flow(const Symbol& p0, const PhasePoint& start, double t_end, double tol, const FlowOptions& opt = {}) {
  if (!(tol >= 1e-12 && tol <= 1e-4)) throw ValidationError("flow: tol must lie in [1e-12, 1e-4]");
  if (opt.dim != 1 && opt.dim != 2) throw ValidationError("flow: dim must be 1 or 2");
  if (!std::isfinite(t_end)) throw ValidationError("flow: t_end must be finite");
  bool analytic = false;
  switch (opt.gradient) {
    case GradientMode::analytic:
      if (!p0.re_gradient) throw ValidationError("flow: symbol '" + p0.name + "' has no analytic gradient");
      analytic = true;
      break;
    case GradientMode::finite_difference: analytic = false; break;
    case GradientMode::automatic: analytic = static_cast<bool>(p0.re_gradient); break;
  }
  for (int i = 0; i < opt.dim; ++i)
    if (!std::isfinite(start.x[i]) || !std::isfinite(start.xi[i])) throw ValidationError("flow: start point must be finite");

  detail::HamiltonianSystem system{&p0, opt.dim, analytic};
  boost::numeric::odeint::runge_kutta_dopri5<detail::FlowState> stepper;

  Trajectory traj;
  traj.dim = opt.dim;
  detail::FlowState state{start.x[0], start.x[1], start.xi[0], start.xi[1], opt.initial_log_amplitude};
  if (opt.dim == 1) {
    state[1] = 0.0;
    state[3] = 0.0;
  }
  auto record = [&](double t, const detail::FlowState& s) {
    traj.times.push_back(t);
    traj.points.push_back({Vec{s[0], s[1]}, Vec{s[2], s[3]}});
    traj.log_amplitude.push_back(s[4]);
  };
  record(0.0, state);
  if (t_end == 0.0) return traj;

  const double direction = t_end > 0 ? 1.0 : -1.0;
  const double span = std::abs(t_end);
  detail::FlowState dxdt{}, dxdt_out{}, next{}, err{};
  system(state, dxdt, 0.0);
  double t = 0.0;
  double dt = direction * std::min(span, 0.01 * std::max(1.0, span) * std::pow(tol / 1e-4, 0.2));
  const double min_step = 1e-14 * std::max(1.0, span);

  while (direction * (t_end - t) > 0.0) {
    if (traj.step_sizes.size() >= opt.max_steps) {
      traj.status = FlowStatus::step_limit;
      traj.message = "step limit reached at t=" + std::to_string(t);
      return traj;
    }
    if (direction * (t + dt - t_end) > 0.0) dt = t_end - t;
    stepper.do_step(system, state, dxdt, t, next, dxdt_out, dt, err);

    double ratio = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (!std::isfinite(next[i]) || !std::isfinite(err[i])) finite = false;
      const double scale = tol * std::max({1.0, std::abs(state[i]), std::abs(next[i])});
      ratio = std::max(ratio, std::abs(err[i]) / scale);
    }
    if (!finite) ratio = 1e10;

    if (ratio <= 1.0) {
      t = direction * (t_end - (t + dt)) <= 0.0 ? t_end : t + dt;
      state = next;
      dxdt = dxdt_out;
      traj.step_sizes.push_back(std::abs(dt));
      traj.error_estimates.push_back(ratio);
      record(t, state);
      double radius = 0.0;
      for (int i = 0; i < opt.dim; ++i) radius += std::abs(state[i]) + std::abs(state[2 + i]);
      if (radius > opt.blow_up_radius) {
        traj.status = FlowStatus::blow_up;
        traj.message = "|x| + |xi| exceeded " + std::to_string(opt.blow_up_radius) + " at t=" + std::to_string(t);
        return traj;
      }
      const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
      dt *= grow;
    } else {
      ++traj.rejected_steps;
      dt *= std::clamp(0.9 * std::pow(ratio, -0.25), 0.1, 0.5);
    }
    if (std::abs(dt) < min_step) {
      traj.status = FlowStatus::step_underflow;
      traj.message = "step size underflow at t=" + std::to_string(t) + " (dt=" + std::to_string(dt) + ")";
      return traj;
    }
  }
  return traj;
}

/// max_t |Re p0(x(t), xi(t)) - Re p0(x(0), xi(0))|.
inline double conserve_check(const Symbol& p0, const Trajectory& traj) {
  if (traj.points.empty()) return 0.0;
  const double e0 = p0(traj.points.front().x, traj.points.front().xi).real();
  double drift = 0.0;
  for (const auto& p : traj.points) drift = std::max(drift, std::abs(p0(p.x, p.xi).real() - e0));
  return drift;
}

inline nlohmann::json trajectory_summary(const Trajectory& traj) {
  const auto& last = traj.points.back();
  return nlohmann::json{{"status", to_string(traj.status)},
                        {"message", traj.message},
                        {"samples", traj.size()},
                        {"rejected_steps", traj.rejected_steps},
                        {"t_final", traj.times.back()},
                        {"x_final", last.x},
                        {"xi_final", last.xi},
                        {"log_amplitude_final", traj.log_amplitude.back()}};
}

}  // namespace microloc
