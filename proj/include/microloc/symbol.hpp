#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "microloc/core.hpp"

namespace microloc {

/// Gradient of Re a with respect to x and xi.
struct PhaseGradient {
  Vec dx{};
  Vec dxi{};
};

/// A symbol a(x, xi): an opaque evaluation rule plus the metadata the
/// quantizer and the validators rely on.
///
/// Evaluators must be pure. When `separable` is set, evaluate(x, xi) equals
/// f(x) * g(xi) and the quantizer takes the FFT fast path. `dissipative`
/// asserts Im a <= 0 everywhere; validate_dissipativity checks it empirically.
struct Symbol {
  using Evaluator = std::function<cplx(const Vec& x, const Vec& xi)>;
  using SpatialFactor = std::function<cplx(const Vec& x)>;
  using FrequencyFactor = std::function<cplx(const Vec& xi)>;
  using GradientRule = std::function<PhaseGradient(const Vec& x, const Vec& xi)>;

  struct Separable {
    SpatialFactor f;
    FrequencyFactor g;
  };

  std::string name;
  double order = 0.0;
  Evaluator evaluate;
  std::optional<Separable> separable;
  bool dissipative = false;
  /// Analytic gradient of Re a, when known.
  GradientRule re_gradient;

  cplx operator()(const Vec& x, const Vec& xi) const { return evaluate(x, xi); }

  static Symbol from_factors(std::string name, double order, SpatialFactor f, FrequencyFactor g) {
    Symbol s;
    s.name = std::move(name);
    s.order = order;
    s.evaluate = [f, g](const Vec& x, const Vec& xi) { return f(x) * g(xi); };
    s.separable = Separable{std::move(f), std::move(g)};
    return s;
  }
};

/// Truncated expansion a ~ sum_k h^k a_k, with a_k of order <= m - k.
struct SymbolExpansion {
  std::vector<Symbol> terms;

  void validate() const {
    if (terms.empty()) throw ValidationError("symbol expansion: no terms");
    const double m = terms.front().order;
    for (std::size_t k = 0; k < terms.size(); ++k)
      if (terms[k].order > m - double(k) + 1e-12)
        throw ValidationError("symbol expansion: term " + std::to_string(k) + " declares order " +
                              std::to_string(terms[k].order) + " > m - k = " + std::to_string(m - double(k)));
  }
};

/// p0 = g(xi) + f(x), the form the split-step evolution can integrate exactly per factor.
struct SplitSymbol {
  Symbol::FrequencyFactor kinetic;
  Symbol::SpatialFactor potential;
  /// Optional analytic derivatives of Re g and Re f.
  std::function<Vec(const Vec& xi)> kinetic_gradient;
  std::function<Vec(const Vec& x)> potential_gradient;
};

inline Symbol to_symbol(const SplitSymbol& split, std::string name = "split") {
  Symbol s;
  s.name = std::move(name);
  s.order = 0.0;
  s.evaluate = [g = split.kinetic, f = split.potential](const Vec& x, const Vec& xi) { return g(xi) + f(x); };
  if (split.kinetic_gradient && split.potential_gradient) {
    s.re_gradient = [dg = split.kinetic_gradient, df = split.potential_gradient](const Vec& x, const Vec& xi) {
      return PhaseGradient{df(x), dg(xi)};
    };
  }
  return s;
}

namespace detail {

inline double param(const nlohmann::json& params, const char* key, double fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ValidationError(std::string("symbol params: '") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(std::string("symbol params: '") + key + "' must be finite");
  return d;
}

inline std::string text_param(const nlohmann::json& params, const char* key, const std::string& fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_string()) throw ValidationError(std::string("symbol params: '") + key + "' must be a string");
  return v.get<std::string>();
}

inline Vec vec_param(const nlohmann::json& params, const char* key) {
  Vec out{};
  if (!params.is_object() || !params.contains(key)) return out;
  const auto& v = params.at(key);
  if (v.is_number()) return Vec{v.get<double>(), 0.0};
  if (!v.is_array() || v.size() > 2) throw ValidationError(std::string("symbol params: '") + key + "' must be 1 or 2 numbers");
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].get<double>();
  return out;
}

inline double sq(const Vec& v) { return v[0] * v[0] + v[1] * v[1]; }

// Damping profiles gamma(x) >= 0 for damped_free.
inline std::function<double(const Vec&)> damping_profile(const nlohmann::json& params) {
  const double gamma = param(params, "gamma", 0.5);
  if (gamma < 0.0) throw ValidationError("damped_free: gamma must be >= 0");
  const std::string profile = text_param(params, "profile", "constant");
  if (profile == "constant") return [gamma](const Vec&) { return gamma; };
  if (profile == "tanh") return [gamma](const Vec& x) { return gamma * (1.0 + std::tanh(x[0])); };
  throw ValidationError("damped_free: unknown profile '" + profile + "' (expected constant or tanh)");
}

}  // namespace detail

/// Names accepted by builtin().
inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"constant", "bessel_decay", "multiplier", "potential",
                                                 "free",     "harmonic",     "damped_free"};
  return names;
}

/// Library of canonical symbols, addressable by name and JSON parameters.
///
///   constant      a = value (default 1), m = 0
///   bessel_decay  a = (1 + |xi|^2)^{m/2}
///   multiplier    a = g(xi); form "linear" (xi_axis, m = 1) or "lorentzian" ((1 + |xi|^2)^{-1}, m = -2)
///   potential     a = f(x); form "gaussian" (amplitude * exp(-|x - center|^2 / (2 width^2))) or "cosine"
///   free          a = |xi|^2 / 2
///   harmonic      a = (|x|^2 + |xi|^2) / 2 - energy
///   damped_free   a = |xi|^2 / 2 - i gamma(x), gamma >= 0; profile "constant" or "tanh"
inline Symbol builtin(const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  using detail::param;
  using detail::sq;
  const auto one = [](const Vec&) { return cplx(1.0, 0.0); };

  if (name == "constant") {
    const double value = param(params, "value", 1.0);
    Symbol s = Symbol::from_factors("constant", 0.0, one, [value](const Vec&) { return cplx(value, 0.0); });
    s.re_gradient = [](const Vec&, const Vec&) { return PhaseGradient{}; };
    return s;
  }
  if (name == "bessel_decay") {
    const double m = param(params, "m", -2.0);
    return Symbol::from_factors("bessel_decay", m, one,
                                [m](const Vec& xi) { return cplx(std::pow(1.0 + sq(xi), 0.5 * m), 0.0); });
  }
  if (name == "multiplier") {
    const std::string form = detail::text_param(params, "form", "lorentzian");
    if (form == "linear") {
      const int axis = static_cast<int>(param(params, "axis", 0.0));
      if (axis != 0 && axis != 1) throw ValidationError("multiplier: axis must be 0 or 1");
      Symbol s = Symbol::from_factors("multiplier:linear", 1.0, one, [axis](const Vec& xi) { return cplx(xi[axis], 0.0); });
      s.re_gradient = [axis](const Vec&, const Vec&) {
        PhaseGradient g;
        g.dxi[axis] = 1.0;
        return g;
      };
      return s;
    }
    if (form == "lorentzian") {
      return Symbol::from_factors("multiplier:lorentzian", -2.0, one,
                                  [](const Vec& xi) { return cplx(1.0 / (1.0 + sq(xi)), 0.0); });
    }
    throw ValidationError("multiplier: unknown form '" + form + "' (expected linear or lorentzian)");
  }
  if (name == "potential") {
    const std::string form = detail::text_param(params, "form", "gaussian");
    const double amplitude = param(params, "amplitude", 1.0);
    if (form == "gaussian") {
      const double width = param(params, "width", 1.0);
      if (!(width > 0.0)) throw ValidationError("potential: width must be > 0");
      const Vec center = detail::vec_param(params, "center");
      return Symbol::from_factors("potential:gaussian", 0.0,
                                  [=](const Vec& x) {
                                    Vec d{x[0] - center[0], x[1] - center[1]};
                                    return cplx(amplitude * std::exp(-sq(d) / (2.0 * width * width)), 0.0);
                                  },
                                  [](const Vec&) { return cplx(1.0, 0.0); });
    }
    if (form == "cosine") {
      const double wavenumber = param(params, "wavenumber", 1.0);
      return Symbol::from_factors("potential:cosine", 0.0,
                                  [=](const Vec& x) { return cplx(1.0 + amplitude * std::cos(wavenumber * x[0]), 0.0); },
                                  [](const Vec&) { return cplx(1.0, 0.0); });
    }
    throw ValidationError("potential: unknown form '" + form + "' (expected gaussian or cosine)");
  }
  if (name == "free") {
    Symbol s = Symbol::from_factors("free", 2.0, one, [](const Vec& xi) { return cplx(0.5 * sq(xi), 0.0); });
    s.re_gradient = [](const Vec&, const Vec& xi) { return PhaseGradient{{}, xi}; };
    return s;
  }
  if (name == "harmonic") {
    const double energy = param(params, "energy", 0.0);
    Symbol s;
    s.name = "harmonic";
    s.order = 2.0;
    s.evaluate = [energy](const Vec& x, const Vec& xi) { return cplx(0.5 * (sq(x) + sq(xi)) - energy, 0.0); };
    s.re_gradient = [](const Vec& x, const Vec& xi) { return PhaseGradient{x, xi}; };
    return s;
  }
  if (name == "damped_free") {
    auto gamma = detail::damping_profile(params);
    Symbol s;
    s.name = "damped_free";
    s.order = 2.0;
    s.evaluate = [gamma](const Vec& x, const Vec& xi) { return cplx(0.5 * sq(xi), -gamma(x)); };
    s.dissipative = true;
    s.re_gradient = [](const Vec&, const Vec& xi) { return PhaseGradient{{}, xi}; };
    return s;
  }
  throw ValidationError("unknown builtin symbol '" + name + "'");
}

/// Split form g(xi) + f(x) of the builtins that have one (free, harmonic, damped_free).
inline SplitSymbol builtin_split(const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  using detail::sq;
  SplitSymbol split;
  split.kinetic = [](const Vec& xi) { return cplx(0.5 * sq(xi), 0.0); };
  split.kinetic_gradient = [](const Vec& xi) { return xi; };
  if (name == "free") {
    split.potential = [](const Vec&) { return cplx(0.0, 0.0); };
    split.potential_gradient = [](const Vec&) { return Vec{}; };
    return split;
  }
  if (name == "harmonic") {
    const double energy = detail::param(params, "energy", 0.0);
    split.potential = [energy](const Vec& x) { return cplx(0.5 * sq(x) - energy, 0.0); };
    split.potential_gradient = [](const Vec& x) { return x; };
    return split;
  }
  if (name == "damped_free") {
    auto gamma = detail::damping_profile(params);
    split.potential = [gamma](const Vec& x) { return cplx(0.0, -gamma(x)); };
    split.potential_gradient = [](const Vec&) { return Vec{}; };
    return split;
  }
  throw ValidationError("builtin '" + name + "' has no split g(xi) + f(x) form");
}

}  // namespace microloc
