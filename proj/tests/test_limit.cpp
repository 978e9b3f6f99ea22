#include <doctest.h>

#include "helpers.hpp"
#include "occlab/errors.hpp"
#include "occlab/limit.hpp"
#include "occlab/stats.hpp"

#include <Eigen/Eigenvalues>

using namespace occlab;
using testing::kPi;
using testing::point;

namespace {

struct Model {
  DriftSpec b;
  DiffusivitySpec s;
  GeneratorOperator L;
  InvariantMeasure mu;
};

Model model(const DriftSpec& b, const DiffusivitySpec& s) {
  return {b, s, assemble(b, s), solve_invariant(assemble_adjoint(b, s), 1e-11)};
}

}  // namespace

TEST_CASE("empirical process") {
  const Grid g = make_grid(2, 16);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  const DiffusionPath p = simulate_path(Z.b, Z.s, point({0.0, 0.0}), 50.0, 0.01, 4);
  const PeriodicField c1 = cos_mode(g, wavevector({1, 0}));
  const EmpiricalProcessSample e = empirical_process(p, {PeriodicField::constant(g, 3.0), c1}, Z.mu);
  CHECK(e.values[0] == 0.0);
  CHECK(e.values[1] == doctest::Approx(std::sqrt(50.0) * occupation_average(p, c1)).epsilon(1e-12));
  CHECK(e.T == doctest::Approx(50.0));

  // Gradient preset: recompute from the stored path with an independent evaluator.
  const Grid g1 = make_grid(1, 64);
  const PeriodicField B = synthesize({Mode{wavevector({1}), 0.0, 0.5}}, g1);
  const Model G = model(gradient_drift(B), scaled_identity_diffusivity(g1));
  const DiffusionPath q = simulate_path(G.b, G.s, point({0.0}), 100.0, 0.01, 5);
  const ModeList fm{Mode{wavevector({1}), 1.0, 0.0}, Mode{wavevector({3}), 0.0, 0.7}};
  const PeriodicField f = synthesize(fm, g1);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < q.steps; ++k) acc += testing::eval_modes(fm, q.state(k));
  // μ(f) by fine quadrature of the closed-form density.
  double muf = 0.0;
  const int M = 8192;
  for (int j = 0; j < M; ++j) {
    const double x = double(j) / M;
    muf += testing::eval_modes(fm, point({x})) * std::exp(std::sin(2 * kPi * x));
  }
  muf /= M * std::cyl_bessel_i(0.0, 1.0);
  const double want = std::sqrt(100.0) * (acc / q.steps - muf);
  CHECK(empirical_process(q, {f}, G.mu).values[0] == doctest::Approx(want).epsilon(1e-9));

  // Linearity in f.
  const PeriodicField h = sin_mode(g1, wavevector({2}));
  const Eigen::VectorXd v = empirical_process(q, {f, h, 2.0 * f - 3.0 * h}, G.mu).values;
  CHECK(v[2] == doctest::Approx(2 * v[0] - 3 * v[1]).epsilon(1e-10));
}

TEST_CASE("covariance examples") {
  const Grid g = make_grid(2, 32);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  const PeriodicField c1 = cos_mode(g, wavevector({1, 0}));
  const PeriodicField c2 = cos_mode(g, wavevector({0, 1}));
  CHECK(covariance(c1, c1, Z.L, Z.mu, Z.s) == doctest::Approx(1.0 / (2 * kPi * kPi)).epsilon(1e-10));
  CHECK(std::abs(covariance(PeriodicField::constant(g, 2.0), c1, Z.L, Z.mu, Z.s)) <= 1e-15);
  CHECK(std::abs(covariance(c1, c2, Z.L, Z.mu, Z.s)) <= 1e-14);
  // Var of √2 cos is 1/π².
  CHECK(covariance(std::sqrt(2.0) * c1, std::sqrt(2.0) * c1, Z.L, Z.mu, Z.s) ==
        doctest::Approx(1.0 / (kPi * kPi)).epsilon(1e-10));
}

TEST_CASE("covariance against the energy identity Γ(f,g) = −⟨u_f, ḡ⟩_μ − ⟨u_g, f̄⟩_μ") {
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(31);
  for (const Model& M : {model(shear_drift(g), modulated_diffusivity(g)),
                         model(gradient_drift(0.3 * testing::random_field(rng, g, 2, 4)), modulated_diffusivity(g, 0.15))}) {
    for (int t = 0; t < 5; ++t) {
      const PeriodicField f = testing::random_field(rng, g, 4, 6);
      const PeriodicField h = testing::random_field(rng, g, 4, 6);
      const PeriodicField fb = center_mu(f, M.mu), hb = center_mu(h, M.mu);
      const PeriodicField uf = solve_poisson(M.L, fb, M.mu, 1e-11).u;
      const PeriodicField uh = solve_poisson(M.L, hb, M.mu, 1e-11).u;
      // ∫ u ḡ μ dx with an upsampled exact quadrature.
      const double want = -(integrate_product({&uf, &hb, &M.mu.density}) + integrate_product({&uh, &fb, &M.mu.density}));
      const double cov = covariance(f, h, M.L, M.mu, M.s);
      CHECK(cov == doctest::Approx(want).epsilon(1e-7));
      CHECK(cov == doctest::Approx(covariance(h, f, M.L, M.mu, M.s)).epsilon(1e-12));
      CHECK(covariance(f, f, M.L, M.mu, M.s) >= 0.0);
      const double lin = covariance(2.0 * f + h, h, M.L, M.mu, M.s);
      CHECK(lin == doctest::Approx(2 * cov + covariance(h, h, M.L, M.mu, M.s)).epsilon(1e-8));
    }
  }
}

TEST_CASE("gram") {
  const Grid g = make_grid(2, 32);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  std::vector<PeriodicField> modes;
  for (const Wavevector& k : {wavevector({1, 0}), wavevector({0, 2}), wavevector({1, 1}), wavevector({3, -1})})
    modes.push_back(std::sqrt(2.0) * cos_mode(g, k));
  const CovarianceGram C = gram(modes, Z.L, Z.mu, Z.s);
  for (int i = 0; i < 4; ++i) {
    const Wavevector k = to_modes(modes[i]).front().k;
    CHECK(C.gram(i, i) == doctest::Approx(1.0 / (kPi * kPi * k.squaredNorm())).epsilon(1e-10));
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(C.gram(i, j)) <= 1e-14);
  }
  const CovarianceGram one = gram({modes[0]}, Z.L, Z.mu, Z.s);
  CHECK(one.gram(0, 0) == doctest::Approx(covariance(modes[0], modes[0], Z.L, Z.mu, Z.s)).epsilon(1e-12));

  // Arbitrary family on a non-gradient preset: symmetric, PSD, diagonal = covariance.
  const Model S = model(shear_drift(g), modulated_diffusivity(g));
  std::mt19937_64 rng(32);
  std::vector<PeriodicField> fam;
  for (int i = 0; i < 6; ++i) fam.push_back(testing::random_field(rng, g, 5, 8));
  fam.push_back(fam[0] + fam[1]);  // rank deficiency
  const CovarianceGram CS = gram(fam, S.L, S.mu, S.s);
  CHECK((CS.gram - CS.gram.transpose()).norm() == 0.0);
  CHECK(CS.eigen_floor >= -1e-10);
  CHECK(CS.gram(2, 2) == doctest::Approx(covariance(fam[2], fam[2], S.L, S.mu, S.s)).epsilon(1e-10));
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(CS.gram).eigenvalues().minCoeff() >= -1e-10);

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1e-3;
  CHECK_THROWS_AS(make_gram({modes[0], modes[1]}, bad), NumericalFailure);
  bad(1, 1) = -1e-12;
  const CovarianceGram fixed = make_gram({modes[0], modes[1]}, bad);
  CHECK(fixed.eigen_floor == doctest::Approx(-1e-12));
  CHECK(fixed.gram(1, 1) >= 0.0);
}

TEST_CASE("sample_limit") {
  const Grid g = make_grid(1, 16);
  const std::vector<PeriodicField> fs{cos_mode(g, wavevector({1})), sin_mode(g, wavevector({1})),
                                      cos_mode(g, wavevector({2}))};
  CHECK(sample_limit(make_gram(fs, Eigen::MatrixXd::Zero(3, 3)), 1).isZero(0.0));
  Eigen::MatrixXd C(3, 3);
  C << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
  const CovarianceGram G = make_gram(fs, C);
  const int n = 100000;
  const Eigen::MatrixXd X = sample_limit(G, 99, n);
  CHECK(X.col(7) == sample_limit(G, 99, n).col(7));
  const Eigen::MatrixXd S = X * X.transpose() / n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      // se of a sample second moment of a Gaussian pair: √((C_ii C_jj + C_ij²)/n).
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / n);
      CHECK(std::abs(S(i, j) - C(i, j)) <= 3 * se);
    }
  Eigen::MatrixXd one(1, 1);
  one << 0.7;
  const Eigen::MatrixXd Y = sample_limit(make_gram({fs[0]}, one), 5, n);
  CHECK(std::abs(Y.squaredNorm() / n - 0.7) <= 0.05 * 0.7);
}

TEST_CASE("martingale decomposition under coupled h-refinement") {
  const Grid g = make_grid(2, 16);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  const SdeModel sde(Z.b, Z.s);
  const PeriodicField f = cos_mode(g, wavevector({1, 0}));
  const double T = 10.0, hf = 0.0025;
  double rms[3] = {0, 0, 0};
  const int paths = 1000;
  for (int p = 0; p < paths; ++p) {
    const std::vector<double> fine = brownian_increments(2, step_count(T, hf), hf, 17, p);
    const DiffusionPath p0 = simulate_with_noise(sde, point({0.0, 0.0}), 0.01, coarsen_noise(fine, 2, 4));
    const DiffusionPath p1 = simulate_with_noise(sde, point({0.0, 0.0}), 0.005, coarsen_noise(fine, 2, 2));
    const DiffusionPath p2 = simulate_with_noise(sde, point({0.0, 0.0}), 0.0025, fine);
    int i = 0;
    for (const DiffusionPath* q : {&p0, &p1, &p2}) {
      const MartingaleDecomposition md = martingale_decomposition(*q, f, Z.L, Z.mu, Z.s);
      rms[i++] += md.residual * md.residual;
    }
  }
  for (double& r : rms) r = std::sqrt(r / paths);
  MESSAGE("residual RMS " << rms[0] << " " << rms[1] << " " << rms[2]);
  CHECK(rms[1] / rms[0] >= 0.3);
  CHECK(rms[1] / rms[0] <= 0.8);
  CHECK(rms[2] / rms[1] >= 0.3);
  CHECK(rms[2] / rms[1] <= 0.8);

  const DiffusionPath q = simulate_path(Z.b, Z.s, point({0.0, 0.0}), 1.0, 0.01, 3);
  const MartingaleDecomposition zero = martingale_decomposition(q, PeriodicField::zero(g), Z.L, Z.mu, Z.s);
  CHECK(zero.boundary == 0.0);
  CHECK(zero.stochastic == 0.0);
  CHECK(zero.residual == 0.0);
  CHECK_THROWS_AS(martingale_decomposition(q, f + 1.0, Z.L, Z.mu, Z.s), InvalidArgument);
  DiffusionPath bare = q;
  bare.noise.clear();
  CHECK_THROWS_AS(martingale_decomposition(bare, f, Z.L, Z.mu, Z.s), InvalidArgument);
}

TEST_CASE("quadratic variation matches the covariance") {
  const Grid g = make_grid(2, 16);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  const PeriodicField f = cos_mode(g, wavevector({1, 0}));
  const DiffusionPath p = simulate_path(SdeModel(Z.b, Z.s), point({0.0, 0.0}), 1e4, 0.01, 6, 0, false);
  const BatchMean qv = batch_mean(quadratic_variation_series(p, f, Z.L, Z.mu, Z.s), 50);
  const double cov = covariance(f, f, Z.L, Z.mu, Z.s);
  CHECK(std::abs(qv.mean - cov) <= 3 * qv.se);
}

TEST_CASE("rho_L and rho_G") {
  const Grid g = make_grid(2, 32);
  const Model Z = model(zero_drift(g), scaled_identity_diffusivity(g));
  const PeriodicField c1 = cos_mode(g, wavevector({1, 0}));
  const PeriodicField zero = PeriodicField::zero(g);
  CHECK(rho_L(c1, zero, Z.L, Z.mu, Z.s) == doctest::Approx(std::sqrt(0.5) / kPi).epsilon(1e-9));
  CHECK(rho_L(c1, c1, Z.L, Z.mu, Z.s) == 0.0);

  const Model S = model(shear_drift(g), modulated_diffusivity(g));
  std::mt19937_64 rng(33);
  for (int t = 0; t < 10; ++t) {
    const PeriodicField f = testing::random_field(rng, g, 5, 8);
    const PeriodicField h = testing::random_field(rng, g, 5, 8);
    const PeriodicField k = testing::random_field(rng, g, 5, 8);
    const double fh = rho_L(f, h, S.L, S.mu, S.s);
    CHECK(fh == doctest::Approx(rho_L(h, f, S.L, S.mu, S.s)).epsilon(1e-9));
    CHECK(fh == doctest::Approx(rho_L(f + k, h + k, S.L, S.mu, S.s)).epsilon(1e-9));
    CHECK(fh <= rho_L(f, k, S.L, S.mu, S.s) + rho_L(k, h, S.L, S.mu, S.s) + 1e-10);
    const double rg = rho_G(f, h, S.L, S.mu, S.s);
    CHECK(rg <= std::sqrt(S.mu.max_density) * fh);
  }
}

TEST_CASE("Besov bound ratio") {
  const Grid g = make_grid(2, 32);
  const Model S = model(shear_drift(g), modulated_diffusivity(g));
  std::mt19937_64 rng(34);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const PeriodicField f = testing::random_field(rng, g, 6, 6);
    const PeriodicField h = testing::random_field(rng, g, 6, 6);
    const double r = besov_bound_ratio(f, h, 0.5, S.L, S.mu, S.s);
    REQUIRE(std::isfinite(r));
    worst = std::max(worst, r);
    if (t < 5) {
      const PeriodicField k = testing::random_field(rng, g, 3, 4);
      CHECK(besov_bound_ratio(f + k, h + k, 0.5, S.L, S.mu, S.s) == doctest::Approx(r).epsilon(1e-9));
      CHECK(besov_bound_ratio(3.0 * f, 3.0 * h, 0.5, S.L, S.mu, S.s) == doctest::Approx(r).epsilon(1e-9));
    }
  }
  MESSAGE("max ratio over 100 pairs " << worst);
  CHECK(worst < 10.0);
  const PeriodicField f = testing::random_field(rng, g, 4, 4);
  CHECK_THROWS_AS(besov_bound_ratio(f, f, 0.5, S.L, S.mu, S.s), InvalidArgument);
}
