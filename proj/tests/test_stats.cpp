#include <doctest.h>

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"
#include "occlab/stats.hpp"

#include <cmath>

using namespace occlab;

TEST_CASE("Kolmogorov tail against tabulated values") {
  // Reference values of P(K > x) from an independent implementation.
  const std::pair<double, double> table[] = {
      {0.3, 0.9999906941986655}, {0.5, 0.9639452436648751}, {0.8, 0.5441424115741981},
      {1.0, 0.26999967167735456}, {1.18, 0.1234538094297657}, {1.36, 0.049485876755377876},
      {1.6, 0.011952043239196616}, {2.0, 0.0006709252557796953}};
  for (auto [x, p] : table) CHECK(kolmogorov_sf(x) == doctest::Approx(p).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(1.1799999) == doctest::Approx(kolmogorov_sf(1.18)).epsilon(1e-6));
}

TEST_CASE("one-sample KS") {
  PhiloxStream rng(7, 0);
  std::vector<double> s(10000);
  for (double& v : s) v = rng.normal();
  const TestReport r = ks_one_sample(s, [](double x) { return normal_cdf(x); });
  CHECK(r.p_value > 0.01);
  CHECK(r.p_value <= 1.0);
  CHECK(r.n[0] == 10000);

  std::vector<double> shifted = s;
  for (double& v : shifted) v += 0.2;
  CHECK(ks_one_sample(shifted, [](double x) { return normal_cdf(x); }).p_value < 1e-6);

  // All samples at the median: the jump of F_n is 1 at F = 1/2.
  const TestReport deg = ks_one_sample(std::vector<double>(100, 0.0), [](double x) { return normal_cdf(x); });
  CHECK(deg.statistic == doctest::Approx(0.5));

  CHECK_THROWS_AS(ks_one_sample(std::vector<double>(19, 0.0), [](double) { return 0.5; }), InvalidArgument);

  std::vector<double> perm(s.rbegin(), s.rend());
  CHECK(ks_one_sample(perm, [](double x) { return normal_cdf(x); }).statistic == r.statistic);
}

TEST_CASE("two-sample KS") {
  std::vector<double> a, b;
  for (int i = 0; i < 25; ++i) a.push_back(0.1 * i);
  for (int i = 0; i < 30; ++i) b.push_back(0.13 * i + 0.05);
  CHECK(ks_two_sample(a, b).statistic == doctest::Approx(0.36666666666666664).epsilon(1e-12));
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == 1.0);
  CHECK(ks_two_sample(a, b).statistic == ks_two_sample(b, a).statistic);

  PhiloxStream rng(8, 0);
  std::vector<double> x(2000), y(2000);
  for (double& v : x) v = rng.normal();
  for (double& v : y) v = rng.normal();
  CHECK(ks_two_sample(x, y).p_value > 0.01);
}

TEST_CASE("chi-squared uniformity") {
  Eigen::VectorXd c(6);
  c << 10, 10, 10, 10, 10, 10;
  CHECK(chi2_uniform(c).statistic == 0.0);
  CHECK(chi2_uniform(c).p_value == doctest::Approx(1.0));
  c << 15, 5, 10, 10, 10, 10;
  CHECK(chi2_uniform(c).statistic == doctest::Approx(5.0));
  Eigen::VectorXd c2(6);
  c2 << 20, 10, 10, 10, 10, 0;
  CHECK(chi2_uniform(c2).statistic == doctest::Approx(20.0));
  CHECK_THROWS_AS(chi2_uniform(Eigen::VectorXd::Zero(4)), InvalidArgument);
}

TEST_CASE("chi-squared tail value") {
  // Cells arranged so that Σ(O−E)²/E = 10 exactly with 5 degrees of freedom.
  Eigen::VectorXd d(6);
  d << 15, 5, 15, 5, 10, 10;  // statistic 10
  const TestReport r = chi2_uniform(d);
  CHECK(r.statistic == doctest::Approx(10.0));
  CHECK(r.p_value == doctest::Approx(0.07523524614651217).epsilon(1e-10));
}

TEST_CASE("rate fit") {
  std::vector<double> T, y;
  for (double t = 32; t <= 2048; t *= 2) {
    T.push_back(t);
    y.push_back(std::pow(t, -0.5));
  }
  RateFit f = fit_rate(T, y);
  CHECK(std::abs(f.slope + 0.5) <= 1e-10);
  CHECK(std::abs(f.intercept) <= 1e-10);
  f = fit_rate(T, std::vector<double>(T.size(), 3.0));
  CHECK(std::abs(f.slope) <= 1e-12);
  CHECK_THROWS_AS(fit_rate({1.0, 2.0}, {1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(fit_line({1.0, 1.0}, {1.0, 2.0}), InvalidArgument);

  // Coverage of the 95% interval under the fitted model itself.
  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    PhiloxStream rng(100, trial);
    std::vector<double> noisy;
    for (double t : T) noisy.push_back(2.0 * std::pow(t, -0.5) * std::exp(0.1 * rng.normal()));
    const RateFit g = fit_rate(T, noisy);
    if (std::abs(g.slope + 0.5) <= g.ci) ++covered;
  }
  CHECK(covered >= 90);
}
