#include <gtest/gtest.h>

#include "microloc/quantize.hpp"
#include "oracles.hpp"

using namespace microloc;
using nlohmann::json;

namespace {

// Op_h(a) for a = a(xi) via direct sums, no FFT involved.
std::vector<cplx> direct_multiplier(const Symbol& a, const Field& u, double h) {
  const Grid& g = u.grid();
  auto v = oracle::direct_forward(u, h);
  for (std::size_t m = 0; m < v.size(); ++m) v[m] *= a(Vec{}, g.dual_point(m, h));
  return oracle::direct_inverse(g, v, h);
}

Symbol mixed_symbol() {
  return Symbol::from_factors(
      "mixed", -2.0, [](const Vec& x) { return cplx(1.0 + 0.5 * std::cos(x[0] + 0.3 * x[1]), 0.2 * std::sin(x[0])); },
      [](const Vec& xi) { return cplx(1.0 / (1.0 + xi[0] * xi[0] + 2.0 * xi[1] * xi[1]), 0.1 * xi[0]); });
}

Symbol unflagged(Symbol a) {
  a.separable.reset();
  return a;
}

}  // namespace

TEST(Quantize, IdentitySymbolIsIdentity) {
  for (int dim : {1, 2}) {
    Grid g(dim, dim == 1 ? 128 : 32, 2.0);
    Field u = oracle::random_bandlimited(g, 4, 10);
    for (auto path : {QuantizationPath::separable, QuantizationPath::dense}) {
      Field out = apply(builtin("constant"), u, 0.07, path);
      EXPECT_LE(oracle::relative_l2(out.values(), u.values()), 1e-12);
    }
  }
}

TEST(Quantize, PotentialIsPointwiseMultiplication) {
  Grid g(1, 128, 4.0);
  Symbol a = builtin("potential", json{{"form", "gaussian"}, {"width", 0.8}});
  Field u = oracle::random_bandlimited(g, 8);
  for (auto path : {QuantizationPath::separable, QuantizationPath::dense}) {
    Field out = apply(a, u, 0.1, path);
    std::vector<cplx> expected(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) expected[i] = a(g.point(i), Vec{}) * u[i];
    EXPECT_LE(oracle::relative_l2(out.values(), expected), 1e-12);
  }
}

TEST(Quantize, LinearSymbolIsScaledDerivative) {
  const double h = 0.1;
  Grid g(1, 256, 3.0);
  Field u = oracle::random_bandlimited(g, 21, 12);
  Symbol a = builtin("multiplier", json{{"form", "linear"}});
  const auto expected = direct_multiplier(a, u, h);
  EXPECT_LE(oracle::relative_l2(apply(a, u, h).values(), expected), 1e-10);

  // -i h d/dx of the analytic modes.
  Field deriv = Field::sample(g, [](const Vec&) { return cplx{}; });
  auto grad = spectral_gradient(u);
  for (std::size_t i = 0; i < g.size(); ++i) deriv[i] = cplx(0, -h) * grad[0][i];
  EXPECT_LE(oracle::relative_l2(apply(a, u, h).values(), deriv.values()), 1e-10);
}

TEST(Quantize, ExpansionCombinesOrders) {
  const double h = 0.2;
  Grid g(1, 64, 2.0);
  Field u = oracle::random_bandlimited(g, 2);

  SymbolExpansion single{{builtin("free")}};
  EXPECT_LE(oracle::relative_l2(apply_expansion(single, u, h).values(), apply(builtin("free"), u, h).values()), 1e-15);

  SymbolExpansion shifted{{builtin("constant"), builtin("constant", json{{"value", 1.0}})}};
  shifted.terms[1].order = -1.0;
  std::vector<cplx> expected(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) expected[i] = (1.0 + h) * u[i];
  EXPECT_LE(oracle::relative_l2(apply_expansion(shifted, u, h).values(), expected), 1e-12);

  Symbol f = builtin("potential", json{{"form", "cosine"}, {"amplitude", 0.3}});
  f.order = 1.0;
  SymbolExpansion mixed{{builtin("free"), f}};
  Field gu = apply(builtin("free"), u, h);
  for (std::size_t i = 0; i < g.size(); ++i) expected[i] = gu[i] + h * f(g.point(i), Vec{}) * u[i];
  EXPECT_LE(oracle::relative_l2(apply_expansion(mixed, u, h).values(), expected), 1e-12);
}

TEST(Quantize, Linearity) {
  const double h = 0.15;
  Grid g(2, 32, 1.5);
  Field a = oracle::random_bandlimited(g, 31), b = oracle::random_bandlimited(g, 32);
  const cplx alpha(0.3, 2.0), beta(-1.1, 0.0);
  Field combo(g);
  for (std::size_t i = 0; i < g.size(); ++i) combo[i] = alpha * a[i] + beta * b[i];
  for (auto path : {QuantizationPath::separable, QuantizationPath::dense}) {
    Field pa = apply(mixed_symbol(), a, h, path), pb = apply(mixed_symbol(), b, h, path);
    std::vector<cplx> expected(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) expected[i] = alpha * pa[i] + beta * pb[i];
    EXPECT_LE(oracle::relative_l2(apply(mixed_symbol(), combo, h, path).values(), expected), 1e-12);
  }
}

TEST(Quantize, NegativeOrderMultiplierDampsHighModes) {
  const double h = 0.1;
  Grid g(1, 128, 2.0);
  Symbol a = builtin("bessel_decay", json{{"m", -2}});
  for (int k : {0, 3, 20, 60}) {
    Field mode = Field::sample(g, [&](const Vec& x) { return std::polar(1.0, pi * k * x[0] / g.half_length()); });
    const double xi = h * pi * k / g.half_length();
    const double expected = 1.0 / (1.0 + xi * xi);
    Field out = apply(a, mode, h);
    for (std::size_t i = 0; i < g.size(); i += 17) EXPECT_NEAR(std::abs(out[i] - expected * mode[i]), 0.0, 1e-12);
    EXPECT_LE(out.norm_squared(), mode.norm_squared() * (1 + 1e-12));
  }
}

TEST(Quantize, DenseAndSeparablePathsAgree) {
  for (int dim : {1, 2}) {
    Grid g(dim, dim == 1 ? 256 : 32, 2.5);
    Field u = oracle::random_bandlimited(g, 40 + dim, 9);
    const double h = 0.12;
    Field fast = apply(mixed_symbol(), u, h, QuantizationPath::separable);
    Field dense = apply(unflagged(mixed_symbol()), u, h);
    EXPECT_LE(oracle::relative_l2(dense.values(), fast.values()), 1e-10) << "dim " << dim;
  }
}

TEST(Quantize, DenseGuardNamesTheLimit) {
  Grid g(2, 128, 1.0);
  Field u(g);
  try {
    apply(unflagged(builtin("constant")), u, 0.1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("at most 64"), std::string::npos) << e.what();
  }
  // Separable symbols are not subject to the guard.
  EXPECT_NO_THROW(apply(builtin("constant"), u, 0.1));
}

TEST(Quantize, RejectsBadInputs) {
  Grid g(1, 32, 1.0);
  Field u = oracle::random_bandlimited(g, 1);
  EXPECT_THROW(apply(builtin("constant"), u, 0.0), ValidationError);
  EXPECT_THROW(apply(unflagged(builtin("free")), u, 0.1, QuantizationPath::separable), ValidationError);
  Symbol blow = Symbol::from_factors("blow", 0, [](const Vec&) { return cplx(1, 0); },
                                     [](const Vec& xi) { return cplx(1.0 / xi[0], 0); });
  EXPECT_THROW(apply(blow, u, 0.1), ValidationError);
  u[4] = cplx(INFINITY, 0);
  EXPECT_THROW(apply(builtin("constant"), u, 0.1), ValidationError);
}
