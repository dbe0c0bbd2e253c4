#include <gtest/gtest.h>

#include "microloc/bichar.hpp"
#include "oracles.hpp"

using namespace microloc;
using nlohmann::json;

namespace {

Symbol unflagged_gradient(Symbol a) {
  a.re_gradient = nullptr;
  return a;
}

// Cubic Hermite interpolation of x(t) from samples and their velocities.
double hermite(const Trajectory& tr, const std::vector<double>& velocity, double t) {
  auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
  std::size_t k = std::clamp<std::size_t>(it - tr.times.begin(), 1, tr.times.size() - 1) - 1;
  const double t0 = tr.times[k], t1 = tr.times[k + 1], dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
  const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
  return h00 * tr.points[k].x[0] + h10 * dt * velocity[k] + h01 * tr.points[k + 1].x[0] + h11 * dt * velocity[k + 1];
}

}  // namespace

TEST(Flow, FreeParticleMovesLinearly) {
  auto tr = flow(builtin("free"), PhasePoint{Vec{0, 0}, Vec{1, 0}}, 2.0, 1e-10);
  EXPECT_EQ(tr.status, FlowStatus::completed);
  EXPECT_EQ(tr.times.back(), 2.0);
  EXPECT_NEAR(tr.points.back().x[0], 2.0, 1e-8);
  EXPECT_EQ(tr.points.back().xi[0], 1.0);
}

TEST(Flow, HarmonicReturnsAfterFullPeriod) {
  for (int dim : {1, 2}) {
    FlowOptions opt;
    opt.dim = dim;
    PhasePoint start{Vec{1.0, dim == 2 ? -0.5 : 0.0}, Vec{0.3, dim == 2 ? 0.7 : 0.0}};
    auto tr = flow(builtin("harmonic"), start, 2 * pi, 1e-10, opt);
    for (int i = 0; i < dim; ++i) {
      EXPECT_NEAR(tr.points.back().x[i], start.x[i], 1e-6);
      EXPECT_NEAR(tr.points.back().xi[i], start.xi[i], 1e-6);
    }
    // Quarter period rotates (x, xi) -> (xi, -x).
    auto quarter = flow(builtin("harmonic"), start, pi / 2, 1e-10, opt);
    EXPECT_NEAR(quarter.points.back().x[0], start.xi[0], 1e-8);
    EXPECT_NEAR(quarter.points.back().xi[0], -start.x[0], 1e-8);
  }
}

TEST(Flow, ConstantDampingDecaysLinearly) {
  auto tr = flow(builtin("damped_free", json{{"gamma", 0.5}}), PhasePoint{Vec{}, Vec{1, 0}}, 3.0, 1e-10);
  EXPECT_NEAR(tr.log_amplitude.back(), -3.0, 1e-10);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr.log_amplitude[i], tr.log_amplitude[i - 1]);
}

TEST(Flow, TanhDampingMatchesClosedFormAndQuadrature) {
  // gamma(x) = 0.5 (1 + tanh x), x(t) = t, so l(t) = -(t + ln cosh t).
  Symbol p0 = builtin("damped_free", json{{"gamma", 0.5}, {"profile", "tanh"}});
  auto tr = flow(p0, PhasePoint{Vec{}, Vec{1, 0}}, 4.0, 1e-10);
  ASSERT_EQ(tr.status, FlowStatus::completed);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    EXPECT_NEAR(tr.log_amplitude[i], -(t + std::log(std::cosh(t))), 1e-8);
  }
  // Independent check: integrate 2 Im p0 along the interpolated ray.
  std::vector<double> velocity(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) velocity[i] = tr.points[i].xi[0];
  const double quad = oracle::simpson(
      [&](double t) { return 2.0 * p0(Vec{hermite(tr, velocity, t), 0}, Vec{1, 0}).imag(); }, 0.0, 4.0, 1e-12);
  EXPECT_NEAR(tr.log_amplitude.back(), quad, 1e-7);
}

TEST(Flow, ConservesRealPartOfSymbol) {
  auto harmonic = flow(builtin("harmonic"), PhasePoint{Vec{0.4, 0}, Vec{-1.1, 0}}, 10.0, 1e-10);
  EXPECT_LE(conserve_check(builtin("harmonic"), harmonic), 1e-8);
  auto free = flow(builtin("free"), PhasePoint{Vec{0.4, 0}, Vec{-1.1, 0}}, 10.0, 1e-10);
  EXPECT_LE(conserve_check(builtin("free"), free), 1e-12);
  // The potential well (Gaussian bump) needs finite-difference gradients.
  Symbol well = to_symbol(SplitSymbol{[](const Vec& xi) { return cplx(0.5 * xi[0] * xi[0], 0); },
                                      [](const Vec& x) { return cplx(-std::exp(-x[0] * x[0]), 0); }},
                          "well");
  auto bound = flow(well, PhasePoint{Vec{0.5, 0}, Vec{0.2, 0}}, 10.0, 1e-10);
  EXPECT_EQ(bound.status, FlowStatus::completed);
  EXPECT_LE(conserve_check(well, bound), 1e-8);
}

TEST(Flow, TimeReversalReturnsToStart) {
  const double tol = 1e-9;
  Symbol p0 = builtin("harmonic");
  PhasePoint start{Vec{0.8, 0}, Vec{0.1, 0}};
  auto fwd = flow(p0, start, 5.0, tol);
  auto back = flow(p0, fwd.points.back(), -5.0, tol);
  EXPECT_EQ(back.times.back(), -5.0);
  for (std::size_t i = 1; i < back.size(); ++i) EXPECT_LT(back.times[i], back.times[i - 1]);
  EXPECT_NEAR(back.points.back().x[0], start.x[0], 10 * tol);
  EXPECT_NEAR(back.points.back().xi[0], start.xi[0], 10 * tol);
}

TEST(Flow, AnalyticAndFiniteDifferenceGradientsAgree) {
  for (const char* name : {"free", "harmonic"}) {
    Symbol a = builtin(name);
    FlowOptions fd;
    fd.gradient = GradientMode::finite_difference;
    PhasePoint start{Vec{0.3, 0}, Vec{1.2, 0}};
    auto exact = flow(a, start, 3.0, 1e-10);
    auto approx = flow(a, start, 3.0, 1e-10, fd);
    EXPECT_NEAR(exact.points.back().x[0], approx.points.back().x[0], 1e-5) << name;
    EXPECT_NEAR(exact.points.back().xi[0], approx.points.back().xi[0], 1e-5) << name;
    const auto ga = a.re_gradient(Vec{0.3, 0}, Vec{1.2, 0});
    const auto gf = finite_difference_gradient(a, Vec{0.3, 0}, Vec{1.2, 0}, 1);
    EXPECT_NEAR(ga.dx[0], gf.dx[0], 1e-8);
    EXPECT_NEAR(ga.dxi[0], gf.dxi[0], 1e-8);
  }
  FlowOptions analytic;
  analytic.gradient = GradientMode::analytic;
  EXPECT_THROW(flow(unflagged_gradient(builtin("free")), PhasePoint{}, 1.0, 1e-8, analytic), ValidationError);
}

TEST(Flow, BlowUpReturnsPartialTrajectory) {
  // dxi/dt = x^3 escapes in finite time.
  Symbol p0;
  p0.name = "quartic";
  p0.evaluate = [](const Vec& x, const Vec& xi) { return cplx(0.5 * xi[0] * xi[0] - 0.25 * std::pow(x[0], 4), 0); };
  auto tr = flow(p0, PhasePoint{Vec{1, 0}, Vec{1, 0}}, 10.0, 1e-8);
  EXPECT_EQ(tr.status, FlowStatus::blow_up);
  EXPECT_LT(tr.times.back(), 10.0);
  EXPECT_FALSE(tr.message.empty());
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
  EXPECT_EQ(trajectory_summary(tr)["status"], "blow_up");
}

TEST(Flow, StepLimitAndValidation) {
  FlowOptions opt;
  opt.max_steps = 3;
  auto tr = flow(builtin("harmonic"), PhasePoint{Vec{1, 0}, Vec{}}, 100.0, 1e-10, opt);
  EXPECT_EQ(tr.status, FlowStatus::step_limit);
  EXPECT_EQ(tr.size(), 4u);
  EXPECT_THROW(flow(builtin("free"), PhasePoint{}, 1.0, 1e-3), ValidationError);
  EXPECT_THROW(flow(builtin("free"), PhasePoint{}, 1.0, 1e-13), ValidationError);
  EXPECT_THROW(flow(builtin("free"), PhasePoint{}, INFINITY, 1e-8), ValidationError);
  auto zero = flow(builtin("free"), PhasePoint{}, 0.0, 1e-8);
  EXPECT_EQ(zero.size(), 1u);
}

TEST(Flow, AcceptedStepsRespectTolerance) {
  auto tr = flow(builtin("harmonic"), PhasePoint{Vec{2, 0}, Vec{}}, 20.0, 1e-7);
  ASSERT_EQ(tr.step_sizes.size() + 1, tr.size());
  for (double r : tr.error_estimates) EXPECT_LE(r, 1.0);
  for (double s : tr.step_sizes) EXPECT_GT(s, 0.0);
}
