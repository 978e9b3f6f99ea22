#include <doctest.h>

#include "helpers.hpp"
#include "occlab/errors.hpp"
#include "occlab/invariant.hpp"

#include <chrono>
#include <cmath>

using namespace occlab;
using testing::kPi;

TEST_CASE("zero drift, identity: uniform density") {
  const Grid g = make_grid(2, 32);
  const InvariantMeasure mu =
      solve_invariant(assemble_adjoint(zero_drift(g), scaled_identity_diffusivity(g)), 1e-10);
  CHECK((mu.density.values().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(mu.mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("d = 1 gradient preset: density e^{2B}/I0(1)") {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g = make_grid(1, 64);
  const PeriodicField B = synthesize({Mode{wavevector({1}), 0.0, 0.5}}, g);
  const InvariantMeasure mu =
      solve_invariant(assemble_adjoint(gradient_drift(B), scaled_identity_diffusivity(g)), 1e-10);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // ∫_0^1 e^{sin 2πx} dx = I_0(1).
  const double Z = std::cyl_bessel_i(0.0, 1.0);
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(mu.density.values()[i] - std::exp(std::sin(2 * kPi * g.node(i)[0])) / Z));
  CHECK(err <= 1e-6);
  CHECK(secs < 10.0);
  CHECK(std::abs(mu.mass - 1.0) <= 1e-10);
  CHECK(mu.residual <= 1e-10);
  CHECK(mu.uniqueness_gap <= 1e-9);
  CHECK(mu.min_density == doctest::Approx(std::exp(-1.0) / Z).epsilon(1e-6));
  CHECK(mu.lipschitz_surrogate > 0.0);
}

TEST_CASE("d = 2 non-gradient preset: residual and positivity") {
  const Grid g = make_grid(2, 32);
  const DriftSpec b = shear_drift(g);
  const DiffusivitySpec s = scaled_identity_diffusivity(g);
  const InvariantMeasure mu = solve_invariant(assemble_adjoint(b, s), 1e-10);
  CHECK(mu.residual <= 1e-10);
  CHECK(mu.min_density > 0.0);
  CHECK(mu.max_density / mu.min_density > 1.05);  // genuinely non-uniform
  // Independent application of a freshly assembled adjoint.
  CHECK(l2_norm(assemble_adjoint(b, s).apply(mu.density)) <= 1e-10);
}

TEST_CASE("ergodic pairing check") {
  const Grid g = make_grid(1, 64);
  const PeriodicField B = synthesize({Mode{wavevector({1}), 0.0, 0.5}}, g);
  const DriftSpec b = gradient_drift(B);
  const DiffusivitySpec s = scaled_identity_diffusivity(g);
  const InvariantMeasure mu = solve_invariant(assemble_adjoint(b, s), 1e-10);
  const GeneratorOperator L = assemble(b, s);
  CHECK(ergodic_pairing_check(mu, L, {PeriodicField::constant(g, 2.0)}) == 0.0);
  std::vector<PeriodicField> phis;
  for (int k = 1; k <= 10; ++k) {
    phis.push_back(cos_mode(g, wavevector({k})));
    phis.push_back(sin_mode(g, wavevector({k})));
  }
  CHECK(ergodic_pairing_check(mu, L, phis) <= 1e-8);

  // Closed-form density as the weight.
  Eigen::VectorXd exact(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    exact[i] = std::exp(std::sin(2 * kPi * g.node(i)[0])) / std::cyl_bessel_i(0.0, 1.0);
  InvariantMeasure closed;
  closed.density = PeriodicField::from_values(g, exact);
  CHECK(ergodic_pairing_check(closed, L, phis) <= 1e-8);

  const Grid g2 = make_grid(2, 16);
  const GeneratorOperator L0 = assemble(zero_drift(g2), scaled_identity_diffusivity(g2));
  CHECK(ergodic_pairing_check(uniform_measure(g2), L0, {cos_mode(g2, wavevector({1, 0}))}) < 1e-14);
}

TEST_CASE("restart and resolution stability") {
  std::vector<InvariantMeasure> mus;
  for (int n : {64, 128}) {
    const Grid g = make_grid(2, n);
    mus.push_back(solve_invariant(assemble_adjoint(shear_drift(g), modulated_diffusivity(g)), 1e-10));
  }
  const PeriodicField up = resample(mus[0].density, 128);
  CHECK(l2_norm(up - mus[1].density) <= 1e-9);
  const double r0 = mus[0].max_density / mus[0].min_density;
  const double r1 = mus[1].max_density / mus[1].min_density;
  CHECK(std::abs(r0 - r1) <= 0.05 * r1);
  CHECK(mus[0].uniqueness_gap <= 1e-9);
}

TEST_CASE("failure modes") {
  const Grid g = make_grid(2, 16);
  CHECK_THROWS_AS(solve_invariant(assemble(shear_drift(g), scaled_identity_diffusivity(g))), InvalidArgument);
  InvariantOptions opt;
  opt.max_outer = 1;
  opt.max_inner = 2;
  try {
    solve_invariant(assemble_adjoint(shear_drift(g), scaled_identity_diffusivity(g)), 1e-14, opt);
    FAIL("expected non-convergence");
  } catch (const NumericalFailure& e) {
    CHECK(std::string(e.what()).find("residual history") != std::string::npos);
  }
}
