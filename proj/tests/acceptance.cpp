// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "microloc/microloc.hpp"
#include "oracles.hpp"

#ifndef MICROLOC_CLI_PATH
#error "MICROLOC_CLI_PATH must point at the microloc-cli executable"
#endif

using namespace microloc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

Symbol lorentzian() { return builtin("multiplier", json{{"form", "lorentzian"}}); }

Outcome quantization_identities() {
  const double h = 0.1;
  Grid g(1, 256, 3.0);
  Field u = oracle::random_bandlimited(g, 101, 20);

  const double identity = oracle::relative_l2(apply(builtin("constant"), u, h).values(), u.values());

  Symbol potential = builtin("potential", json{{"form", "gaussian"}, {"width", 0.6}});
  std::vector<cplx> multiplied(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) multiplied[i] = potential(g.point(i), Vec{}) * u[i];
  const double pointwise = oracle::relative_l2(apply(potential, u, h).values(), multiplied);

  // -i h u' through direct DFT sums.
  auto v = oracle::direct_forward(u, h);
  for (std::size_t m = 0; m < v.size(); ++m) v[m] *= g.dual_coordinate(static_cast<int>(m), h);
  const auto derivative = oracle::direct_inverse(g, v, h);
  const double linear = oracle::relative_l2(apply(builtin("multiplier", json{{"form", "linear"}}), u, h).values(), derivative);

  return {identity <= 1e-12 && pointwise <= 1e-12 && linear <= 1e-10,
          "identity " + fmt(identity) + " (<=1e-12), potential " + fmt(pointwise) + " (<=1e-12), xi_1 " +
              fmt(linear) + " (<=1e-10)"};
}

struct OracleCase {
  Symbol symbol;
  Field field;
};

std::vector<OracleCase> oracle_cases() {
  Grid g(1, 64, 2.0);
  std::vector<OracleCase> cases;
  cases.push_back({lorentzian(), oracle::random_bandlimited(g, 1, 8)});
  cases.push_back({builtin("bessel_decay", json{{"m", -1}}), oracle::random_bandlimited(g, 2, 10)});
  cases.push_back({builtin("damped_free", json{{"gamma", 0.5}, {"profile", "tanh"}}), oracle::random_bandlimited(g, 3, 6)});
  cases.push_back({builtin("harmonic"), oracle::gaussian(g, Vec{0.3, 0}, 0.4)});
  Symbol mixed = Symbol::from_factors(
      "cos(x)/(1+xi^2)", -2, [](const Vec& x) { return cplx(1.0 + 0.5 * std::cos(x[0]), 0.0); },
      [](const Vec& xi) { return cplx(1.0 / (1.0 + xi[0] * xi[0]), 0.0); });
  mixed.separable.reset();
  cases.push_back({mixed, oracle::random_bandlimited(g, 5, 12)});
  return cases;
}

Outcome kernel_equivalence() {
  double worst = 0.0;
  for (double h : {0.1, 0.2})
    for (const auto& c : oracle_cases()) {
      const double fast = dissipation_rate(c.symbol, c.field, h);
      const double brute = kernel_oracle(c.symbol, c.field, h).value;
      worst = std::max(worst, std::abs(fast - brute) / std::abs(fast));
    }
  return {worst <= 1e-8, "max rel diff " + fmt(worst) + " over 5 pairs x 2 h (<=1e-8)"};
}

Outcome partition_identity() {
  double worst = 0.0;
  for (double h : {0.1, 0.2})
    for (const auto& c : oracle_cases()) {
      const double total = dissipation_rate(c.symbol, c.field, h);
      for (int patches : {1, 4, 16}) {
        const auto parts = localized_dissipation(c.symbol, c.field, h, build_uniform(c.field.grid(), patches, 0.3));
        double s = 0.0;
        for (double p : parts) s += p;
        worst = std::max(worst, std::abs(s - total) / std::abs(total));
      }
    }
  return {worst <= 1e-12, "max rel diff " + fmt(worst) + " for 1/4/16 patches (<=1e-12)"};
}

Outcome frequency_sampling() {
  Grid g(1, 512, 10.0);
  const Vec xi0{2.0, 0};
  StateFamily states = [&](double h) { return coherent_state(g, Vec{}, xi0, h); };
  const auto table = h_sweep(lorentzian(), states, {0.4, 0.2, 0.1, 0.05}, build_uniform(g, 4, 0.3), SweepOptions{xi0});
  bool monotone = true;
  std::string gaps;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (i > 0) monotone = monotone && table.rows[i].gap_frozen < table.rows[i - 1].gap_frozen;
    gaps += (i ? "," : "") + fmt(table.rows[i].gap_frozen);
  }
  const double last = table.rows.back().gap_frozen;
  return {monotone && last <= 0.05, "frozen gaps [" + gaps + "] monotone=" + (monotone ? "yes" : "no") +
                                        " final<=5e-2; phase-space functional gap at h=0.05 " +
                                        fmt(table.rows.back().gap_paper) + " (reported only)"};
}

Outcome bicharacteristics() {
  Symbol harmonic = builtin("harmonic");
  const PhasePoint start{Vec{1.0, 0}, Vec{0.25, 0}};
  auto period = flow(harmonic, start, 2 * pi, 1e-10);
  const double ret = std::max(std::abs(period.points.back().x[0] - start.x[0]),
                              std::abs(period.points.back().xi[0] - start.xi[0]));
  const double drift = conserve_check(harmonic, flow(harmonic, start, 10.0, 1e-10));
  auto damped = flow(builtin("damped_free", json{{"gamma", 0.5}}), PhasePoint{Vec{}, Vec{1, 0}}, 3.0, 1e-10);
  const double ell = std::abs(damped.log_amplitude.back() + 3.0);
  const double tol = 1e-9;
  auto fwd = flow(harmonic, start, 5.0, tol);
  auto back = flow(harmonic, fwd.points.back(), -5.0, tol);
  const double closure = std::max(std::abs(back.points.back().x[0] - start.x[0]),
                                  std::abs(back.points.back().xi[0] - start.xi[0]));
  return {ret <= 1e-6 && drift <= 1e-8 && ell <= 1e-8 && closure <= 10 * tol,
          "return " + fmt(ret) + " (<=1e-6), drift " + fmt(drift) + " (<=1e-8), |l(3)+3| " + fmt(ell) +
              " (<=1e-8), reversal " + fmt(closure) + " (<=1e-8)"};
}

Outcome amplitude_law() {
  Symbol p0 = builtin("damped_free", json{{"gamma", 0.5}, {"profile", "tanh"}});
  auto tr = flow(p0, PhasePoint{Vec{}, Vec{1, 0}}, 3.0, 1e-10);
  // Cubic Hermite path through the samples (dx/dt = xi), then adaptive Simpson of 2 Im p0.
  auto x_at = [&](double t) {
    auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
    std::size_t k = std::clamp<std::size_t>(it - tr.times.begin(), 1, tr.size() - 1) - 1;
    const double t0 = tr.times[k], dt = tr.times[k + 1] - t0, s = (t - t0) / dt;
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    return h00 * tr.points[k].x[0] + h10 * dt * tr.points[k].xi[0] + h01 * tr.points[k + 1].x[0] +
           h11 * dt * tr.points[k + 1].xi[0];
  };
  double worst = 0.0;
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    const double integral =
        oracle::simpson([&](double s) { return 2.0 * p0(Vec{x_at(s), 0}, Vec{1, 0}).imag(); }, 0.0, t, 1e-12);
    auto it = std::lower_bound(tr.times.begin(), tr.times.end(), t - 1e-12);
    double ell;
    if (it != tr.times.end() && std::abs(*it - t) < 1e-12) {
      ell = tr.log_amplitude[it - tr.times.begin()];
    } else {
      ell = flow(p0, PhasePoint{Vec{}, Vec{1, 0}}, t, 1e-10).log_amplitude.back();
    }
    worst = std::max(worst, std::abs(ell - integral));
  }
  return {worst <= 1e-6, "max |l(t) - 2 int Im p0| " + fmt(worst) + " on t in {0.5,1,2,3} (<=1e-6)"};
}

Outcome propagation_tracking() {
  Grid g(1, 1024, 10.0);
  const double h = 0.05;
  auto free = propagation_check(builtin_split("free"), g, Vec{-2.0, 0}, Vec{1.0, 0}, h, 1.0);
  auto osc = propagation_check(builtin_split("harmonic"), g, Vec{1.0, 0}, Vec{0.0, 0}, h, pi / 2);
  const bool ok = free.max_x_deviation <= free.bound && osc.max_xi_deviation <= osc.bound && free.decay_gap <= 1e-6 &&
                  osc.decay_gap <= 1e-6;
  return {ok, "free x-dev " + fmt(free.max_x_deviation) + ", harmonic xi-dev " + fmt(osc.max_xi_deviation) +
                  " (<=" + fmt(free.bound) + "), decay gaps " + fmt(free.decay_gap) + "/" + fmt(osc.decay_gap) +
                  " (<=1e-6)"};
}

Outcome dissipative_decay() {
  const double h = 0.1, gamma = 0.05;
  Grid g(1, 512, 10.0);
  SplitSymbol constant{[](const Vec& xi) { return cplx(0.5 * xi[0] * xi[0], 0.0); },
                       [gamma](const Vec&) { return cplx(0.0, -gamma); }};
  auto ev = evolve(constant, coherent_state(g, Vec{}, Vec{1.0, 0}, h), h, 1.0, 0.01);
  auto m = ev.masses();
  const double slope = (std::log(m.back()) - std::log(m.front())) / ev.times.back();
  const double exact = -2.0 * gamma / h;
  const double rel = std::abs(slope - exact) / std::abs(exact);

  bool monotone = true;
  auto check = [&](const std::vector<double>& masses) {
    for (std::size_t i = 1; i < masses.size(); ++i) monotone = monotone && masses[i] <= masses[i - 1];
  };
  check(m);
  Grid fine(1, 1024, 10.0);
  for (double gam : {0.02, 0.1, 0.5})
    check(evolve(builtin_split("damped_free", json{{"gamma", gam}, {"profile", "tanh"}}),
                 coherent_state(fine, Vec{-2.0, 0}, Vec{1.0, 0}, 0.05), 0.05, 2.0, 0.01)
              .masses());
  return {rel <= 0.01 && monotone, "slope rel err " + fmt(rel) + " (<=1e-2), mass monotone over 4 runs: " +
                                       (monotone ? "yes" : "no")};
}

Outcome symbol_classes() {
  const std::vector<double> radii = {4, 8, 16, 32, 64, 128};
  const bool lor = verify_symbol_class(lorentzian(), -2.0, radii, 8).pass;
  const bool lin = verify_symbol_class(builtin("multiplier", json{{"form", "linear"}}), -1.0, radii, 8).pass;
  const bool con = verify_symbol_class(builtin("constant"), 0.0, radii, 8).pass;
  return {lor && !lin && con, std::string("lorentzian@-2 ") + (lor ? "pass" : "fail") + ", xi_1@-1 " +
                                  (lin ? "pass" : "fail") + ", constant@0 " + (con ? "pass" : "fail")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "microloc-acceptance-a10";
  fs::remove_all(root);
  fs::create_directories(root);
  const json cfg{{"grid", {{"dim", 1}, {"N", 256}, {"L", 4.0}}},
                 {"symbol", {{"name", "damped_free"}, {"params", {{"gamma", 0.3}, {"profile", "tanh"}}}}},
                 {"states", {{"kind", "random"}, {"kmax", 10}, {"modes", 7}}},
                 {"sweep", {{"h_list", {0.4, 0.2, 0.1, 0.05}}}},
                 {"partition", {{"patches", 4}}},
                 {"bichar", {{"t_end", 2.0}, {"fan", {{"x", {0.0}}, {"xi_norm", 1.0}, {"count", 3}}}}}};
  std::ofstream(root / "config.json") << cfg.dump(2);
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"dissipation-sweep", {"convergence.csv"}},
      {"partition-report", {"partition.csv"}},
      {"bichar", {"trajectory_0.csv", "trajectory_1.csv", "trajectory_2.csv"}}};
  std::size_t compared = 0;
  bool identical = true;
  for (const auto& [sub, files] : runs) {
    for (const char* tag : {"first", "second"}) {
      const std::string threads = std::string(tag) == "first" ? "1" : "4";
      const std::string cmd = std::string("\"") + MICROLOC_CLI_PATH + "\" --config \"" + (root / "config.json").string() +
                              "\" --out \"" + (root / tag / sub).string() + "\" --seed 42 --threads " + threads + " " +
                              sub + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + sub};
    }
    for (const auto& f : files) {
      identical = identical && slurp(root / "first" / sub / f) == slurp(root / "second" / sub / f) &&
                  !slurp(root / "first" / sub / f).empty();
      ++compared;
    }
  }
  fs::remove_all(root);
  return {identical, std::to_string(compared) + " CSVs byte-identical across two runs (threads 1 vs 4): " +
                         (identical ? "yes" : "no")};
}

}  // namespace

int main() {
  set_worker_threads(0);
  const std::vector<Criterion> criteria = {
      {"A1", "quantization identities", 1.0, quantization_identities},
      {"A2", "kernel-oracle equivalence", 30.0, kernel_equivalence},
      {"A3", "partition identity", 30.0, partition_identity},
      {"A4", "semiclassical frequency sampling", 10.0, frequency_sampling},
      {"A5", "bicharacteristics", 5.0, bicharacteristics},
      {"A6", "amplitude law", 5.0, amplitude_law},
      {"A7", "propagation tracking", 60.0, propagation_tracking},
      {"A8", "dissipative decay", 60.0, dissipative_decay},
      {"A9", "symbol-class verification", 5.0, symbol_classes},
      {"A10", "determinism", 60.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %-4s %-34s %s; %.2fs (budget %.0fs)\n", pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                o.detail.c_str(), seconds, c.budget_seconds);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
