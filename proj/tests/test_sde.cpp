#include <doctest.h>

#include "helpers.hpp"
#include "occlab/errors.hpp"
#include "occlab/rng.hpp"
#include "occlab/sde.hpp"
#include "occlab/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

using namespace occlab;
using testing::kPi;
using testing::point;

namespace {

DiffusivitySpec zero_sigma(const Grid& g) {
  std::vector<PeriodicField> s(std::size_t(g.dim) * g.dim, PeriodicField::zero(g));
  return make_diffusivity(std::move(s));
}

void check_confined(const DiffusionPath& p) {
  for (double v : p.states) REQUIRE((v >= 0.0 && v < 1.0));
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams: determinism, independence, moments") {
  PhiloxStream a(42, 3), b(42, 3), c(42, 4);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    differ |= x != c.next_u64();
  }
  CHECK(differ);
  CHECK(derive_seed(1, "clt", 0) == derive_seed(1, "clt", 0));
  CHECK(derive_seed(1, "clt", 0) != derive_seed(1, "clt", 1));
  CHECK(derive_seed(1, "clt", 0) != derive_seed(2, "clt", 0));

  PhiloxStream r(5, 0);
  const int n = 200000;
  double m1 = 0, m2 = 0, u1 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m1 += z;
    m2 += z * z;
    const double u = r.uniform();
    REQUIRE((u >= 0.0 && u < 1.0));
    u1 += u;
  }
  CHECK(std::abs(m1 / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(u1 / n - 0.5) < 4.0 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("degenerate dynamics") {
  const Grid g = make_grid(2, 16);
  const DiffusionPath still = simulate_path(zero_drift(g), zero_sigma(g), point({0.3, 0.7}), 1.0, 0.1, 1);
  CHECK(still.steps == 10);
  CHECK(still.states.size() == 22);
  for (Eigen::Index k = 0; k <= still.steps; ++k) CHECK(still.state(k) == point({0.3, 0.7}));
  const PeriodicField f = synthesize({Mode{wavevector({1, 2}), 0.4, -1.1}}, g);
  CHECK(occupation_average(still, f) == doctest::Approx(f(point({0.3, 0.7}))).epsilon(1e-14));
  const DiscreteMeasure h = occupation_histogram(still, 5);
  CHECK(h.weights.maxCoeff() == 1.0);
  CHECK(h.weights.sum() == 1.0);

  const DriftSpec b = make_drift({PeriodicField::constant(g, 1.0), PeriodicField::zero(g)});
  const DiffusionPath tr = simulate_path(b, zero_sigma(g), point({0.0, 0.0}), 1.0, 0.25, 1);
  const double want[] = {0.0, 0.25, 0.5, 0.75, 0.0};
  REQUIRE(tr.steps == 4);
  for (int k = 0; k <= 4; ++k) {
    CHECK(tr.state(k)[0] == want[k]);
    CHECK(tr.state(k)[1] == 0.0);
  }
  const DiscreteMeasure th = occupation_histogram(tr, 4);
  for (int c : {0, 4, 8, 12}) CHECK(th.weights[c] == 0.25);
  CHECK(th.weights.sum() == 1.0);
  check_confined(tr);
}

TEST_CASE("constant integrand and linearity") {
  const Grid g = make_grid(2, 16);
  const DiffusionPath p =
      simulate_path(shear_drift(g), modulated_diffusivity(g), point({0.0, 0.0}), 20.0, 0.01, 9);
  check_confined(p);
  CHECK(occupation_average(p, PeriodicField::constant(g, 0.3)) == 0.3);
  std::mt19937_64 rng(3);
  const PeriodicField f = testing::random_field(rng, g, 4);
  const PeriodicField h = testing::random_field(rng, g, 4);
  const double lhs = occupation_average(p, 2.0 * f - 0.5 * h);
  CHECK(lhs == doctest::Approx(2.0 * occupation_average(p, f) - 0.5 * occupation_average(p, h)).epsilon(1e-12));
  CHECK(std::abs(occupation_average(p, f)) <= sup_norm(f) + 1e-12);

  // Direct oracle for the Riemann sum.
  const ModeList modes = to_modes(f);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.steps; ++k) acc += testing::eval_modes(modes, p.state(k));
  CHECK(occupation_average(p, f) == doctest::Approx(acc / p.steps).epsilon(1e-11));
}

TEST_CASE("replay determinism and coupled refinement") {
  const Grid g = make_grid(2, 16);
  const SdeModel model(shear_drift(g), modulated_diffusivity(g));
  const DiffusionPath p = simulate_path(model, point({0.1, 0.9}), 5.0, 0.01, 77, 2);
  const DiffusionPath q = simulate_path(model, point({0.1, 0.9}), 5.0, 0.01, 77, 2);
  CHECK(p.states == q.states);
  CHECK(p.noise == q.noise);
  CHECK(replay(model, p).states == p.states);
  CHECK(p.noise == brownian_increments(2, p.steps, 0.01, 77, 2));
  const DiffusionPath r = simulate_path(model, point({0.1, 0.9}), 5.0, 0.01, 77, 3);
  CHECK(r.states != p.states);

  const std::vector<double> coarse = coarsen_noise(p.noise, 2, 2);
  CHECK(coarse.size() == p.noise.size() / 2);
  CHECK(coarse[0] == p.noise[0] + p.noise[2]);
  const DiffusionPath pc = simulate_with_noise(model, p.x0, 0.02, coarse);
  CHECK(pc.steps == p.steps / 2);
  check_confined(pc);

  DiffusionPath stripped = p;
  stripped.noise.clear();
  CHECK_THROWS_AS(replay(model, stripped), InvalidArgument);
}

TEST_CASE("errors") {
  const Grid g = make_grid(1, 16);
  const DiffusivitySpec s = scaled_identity_diffusivity(g);
  CHECK_THROWS_AS(simulate_path(zero_drift(g), s, point({0.0}), 0.001, 0.01, 1), InvalidArgument);
  CHECK_THROWS_AS(simulate_path(zero_drift(g), s, point({0.0}), 1.0, 0.0, 1), InvalidArgument);
  const DriftSpec big = make_drift({PeriodicField::constant(g, 1e308)});
  try {
    simulate_path(big, s, point({0.0}), 20.0, 10.0, 1);
    FAIL("expected failure");
  } catch (const NumericalFailure& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
  const DiffusionPath p = simulate_path(zero_drift(g), s, point({0.0}), 1.0, 0.1, 1);
  CHECK_THROWS_AS(occupation_histogram(p, 1), InvalidArgument);
}

TEST_CASE("zero drift, identity: occupation is uniform") {
  const Grid g = make_grid(2, 16);
  const DiffusionPath p = simulate_path(zero_drift(g), scaled_identity_diffusivity(g), point({0.0, 0.0}), 1e4, 0.01, 2024);
  check_confined(p);
  // States one time unit apart are nearly independent (spectral gap 2π²).
  const int m = 8;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(m * m);
  for (Eigen::Index k = 0; k < p.steps; k += 100) counts[cell_index(p.state_ptr(k), 2, m)] += 1.0;
  const TestReport chi = chi2_uniform(counts);
  CHECK(chi.p_value > 0.01);

  // Same 99% bound transferred to the time-weighted histogram.
  const DiscreteMeasure h = occupation_histogram(p, m);
  const double q99 = boost::math::quantile(boost::math::chi_squared(m * m - 1), 0.99);
  const double E = counts.sum() / (m * m);
  const double bound = std::sqrt(q99 * E) / counts.sum();
  CHECK((h.weights.array() - 1.0 / 64).abs().maxCoeff() <= bound);
  CHECK(std::abs(h.weights.sum() - 1.0) <= 1e-12);

  const double sd = std::sqrt(1.0 / (2 * kPi * kPi) / 1e4);
  CHECK(std::abs(occupation_average(p, cos_mode(g, wavevector({1, 0})))) <= 4 * sd);
}

TEST_CASE("weak order against the heat semigroup") {
  const Grid g = make_grid(2, 8);
  const SdeModel model(zero_drift(g), scaled_identity_diffusivity(g));
  const Point x0 = point({0.1, 0.0});
  for (double T : {0.1, 0.5}) {
    const int n = 2000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const DiffusionPath p = simulate_path(model, x0, T, 1e-3, 31, i, false);
      const double v = std::cos(2 * kPi * p.terminal()[0]);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::exp(-2 * kPi * kPi * T) * std::cos(2 * kPi * 0.1)) <= 3 * se);
  }
}
