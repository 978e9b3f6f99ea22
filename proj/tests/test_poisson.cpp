#include <doctest.h>

#include "helpers.hpp"
#include "occlab/errors.hpp"
#include "occlab/poisson.hpp"

using namespace occlab;
using testing::kPi;

namespace {

struct Setup {
  GeneratorOperator L;
  InvariantMeasure mu;
};

Setup setup(const DriftSpec& b, const DiffusivitySpec& s) {
  return {assemble(b, s), solve_invariant(assemble_adjoint(b, s), 1e-11)};
}

}  // namespace

TEST_CASE("zero drift single modes") {
  const Grid g = make_grid(2, 32);
  const Setup S = setup(zero_drift(g), scaled_identity_diffusivity(g));
  for (const Wavevector& k : {wavevector({1, 0}), wavevector({2, 3}), wavevector({-4, 1}), wavevector({0, 7})}) {
    const PoissonSolution sol = solve_poisson(S.L, cos_mode(g, k), S.mu);
    const double k2 = k.squaredNorm();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const Point x = g.node(i);
      const double want = -std::cos(2 * kPi * (k[0] * x[0] + k[1] * x[1])) / (2 * kPi * kPi * k2);
      CHECK(std::abs(sol.u.values()[i] - want) <= 1e-10);
    }
    CHECK(std::abs(sol.u.mean()) <= 1e-12);
  }
  const PoissonSolution z = solve_poisson(S.L, PeriodicField::zero(g), S.mu);
  CHECK(max_abs(z.u) == 0.0);
}

TEST_CASE("zero drift: Fourier-diagonal formula mode by mode") {
  const Grid g = make_grid(3, 16);
  const Setup S = setup(zero_drift(g), scaled_identity_diffusivity(g));
  std::mt19937_64 rng(21);
  const PeriodicField f = testing::random_field(rng, g, 4, 12, false);
  const PoissonSolution sol = solve_poisson(S.L, f, S.mu);
  const GridTables& t = tables(g);
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    const std::complex<double> want = f.coeffs()[i] / (-2 * kPi * kPi * double(t.k2[i]));
    CHECK(std::abs(sol.u.coeffs()[i] - want) <= 1e-10);
  }
}

TEST_CASE("center_mu") {
  const Grid g = make_grid(1, 64);
  const PeriodicField f = cos_mode(g, wavevector({1}));
  CHECK(max_abs(center_mu(PeriodicField::constant(g, 4.2), uniform_measure(g))) <= 1e-15);
  CHECK(max_abs(center_mu(f, uniform_measure(g)) - f) <= 1e-15);
  const PeriodicField B = synthesize({Mode{wavevector({1}), 0.0, 0.5}}, g);
  const Setup S = setup(gradient_drift(B), scaled_identity_diffusivity(g));
  // Independent quadrature of ∫ cos(2πx) e^{sin 2πx} dx / I0(1) (odd about x = 1/4 shift: 0).
  double q = 0.0;
  for (int j = 0; j < 4096; ++j) {
    const double x = j / 4096.0;
    q += std::cos(2 * kPi * x) * std::exp(std::sin(2 * kPi * x)) / 4096.0;
  }
  q /= std::cyl_bessel_i(0.0, 1.0);
  const PeriodicField c = center_mu(f, S.mu);
  CHECK(max_abs(c - (f - q)) <= 1e-10);
  CHECK(std::abs(inner(c, S.mu.density)) <= 1e-10);
}

TEST_CASE("gradient preset d = 1: residual and dense oracle") {
  const Grid g = make_grid(1, 64);
  const PeriodicField B = synthesize({Mode{wavevector({1}), 0.0, 0.5}}, g);
  const Setup S = setup(gradient_drift(B), scaled_identity_diffusivity(g));
  const PeriodicField f = center_mu(cos_mode(g, wavevector({1})), S.mu);
  const PoissonSolution sol = solve_poisson(S.L, f, S.mu);
  CHECK(sol.residual <= 1e-9);
  const PoissonSolution dense = solve_poisson_dense(S.L, f);
  CHECK(max_abs(sol.u - dense.u) <= 1e-8);
}

TEST_CASE("dense cross-check d = 2, n = 32") {
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(22);
  const Setup S = setup(shear_drift(g), modulated_diffusivity(g));
  const PeriodicField f = center_mu(testing::random_field(rng, g, 5), S.mu);
  const PoissonSolution sol = solve_poisson(S.L, f, S.mu);
  const PoissonSolution dense = solve_poisson_dense(S.L, f);
  CHECK(dense.residual <= 1e-9);
  CHECK(max_abs(sol.u - dense.u) <= 1e-8);
}

TEST_CASE("uncentered right-hand side is an error") {
  const Grid g = make_grid(2, 16);
  const Setup S = setup(zero_drift(g), scaled_identity_diffusivity(g));
  CHECK_THROWS_AS(solve_poisson(S.L, cos_mode(g, wavevector({1, 0})) + 0.1, S.mu), InvalidArgument);
}

TEST_CASE("inverse property and linearity over presets") {
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(23);
  const PeriodicField B = testing::random_field(rng, g, 2, 4, false);
  const Setup setups[] = {setup(zero_drift(g), scaled_identity_diffusivity(g)),
                          setup(gradient_drift(0.3 * B), scaled_identity_diffusivity(g)),
                          setup(shear_drift(g), modulated_diffusivity(g))};
  for (const Setup& S : setups) {
    for (int t = 0; t < 50; ++t) {
      const PeriodicField f = center_mu(testing::random_field(rng, g, g.cutoff()), S.mu);
      const PoissonSolution sol = solve_poisson(S.L, f, S.mu);
      CHECK(l2_norm(S.L.apply(sol.u) - f) <= 1e-9);
    }
    const PeriodicField f = center_mu(testing::random_field(rng, g, 6), S.mu);
    const PeriodicField h = center_mu(testing::random_field(rng, g, 6), S.mu);
    const PeriodicField uf = solve_poisson(S.L, f, S.mu).u;
    const PeriodicField uh = solve_poisson(S.L, h, S.mu).u;
    const PeriodicField ufh = solve_poisson(S.L, f + h, S.mu).u;
    CHECK(max_abs(ufh - uf - uh) <= 1e-8);
  }
}

TEST_CASE("smoothing ratio examples") {
  const Grid g = make_grid(2, 32);
  const Setup S = setup(zero_drift(g), scaled_identity_diffusivity(g));
  const BesovIndex h2{2.0, 2.0, 2.0};
  CHECK(smoothing_ratio(S.L, cos_mode(g, wavevector({1, 0})), S.mu, h2) ==
        doctest::Approx(1.0 / (kPi * kPi)).epsilon(1e-9));
  for (const Wavevector& k : {wavevector({2, 0}), wavevector({3, 4}), wavevector({1, 9})}) {
    const double k2 = k.squaredNorm();
    CHECK(smoothing_ratio(S.L, sin_mode(g, k), S.mu, h2) ==
          doctest::Approx((1 + k2) / (2 * kPi * kPi * k2)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(smoothing_ratio(S.L, PeriodicField::zero(g), S.mu, h2), InvalidArgument);
  // |k| = 3 sits in block j = 2, so the ratio is 2^{2j} / (2π²|k|²).
  const double r = smoothing_ratio(S.L, cos_mode(g, wavevector({3, 0})), S.mu, {1.5, kInf, kInf});
  CHECK(r == doctest::Approx(16.0 / (2 * kPi * kPi * 9)).epsilon(1e-9));
}

TEST_CASE("multiplier lower bound") {
  const Grid g = make_grid(2, 16);
  std::mt19937_64 rng(24);
  const GeneratorOperator L = assemble(zero_drift(g), scaled_identity_diffusivity(g));
  CHECK(multiplier_lower_bound_check(L, testing::random_field(rng, g, 5, 10, false)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const GeneratorOperator La = assemble(zero_drift(g), diagonal_diffusivity(g, {0.5, 1.0}));
  CHECK(multiplier_lower_bound_check(La, cos_mode(g, wavevector({1, 0}))) == doctest::Approx(1.0));
  CHECK(multiplier_lower_bound_check(La, cos_mode(g, wavevector({0, 1}))) == doctest::Approx(2.0));
  CHECK_THROWS_AS(multiplier_lower_bound_check(La, PeriodicField::zero(g)), InvalidArgument);
  // Variable coefficients: the mode-wise bound is checked on single modes.
  const GeneratorOperator Lm = assemble(zero_drift(g), modulated_diffusivity(g, 0.2));
  for (const Wavevector& k : {wavevector({1, 0}), wavevector({0, 2}), wavevector({2, -1})})
    CHECK(multiplier_lower_bound_check(Lm, cos_mode(g, k)) >= 1 - 1e-6);
}
