#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace occlab {

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<std::size_t> n;
  std::string null_description;
};

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_sf(double x);
double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// sup |F_n − F| with the asymptotic Kolmogorov p-value (Stephens' small-n correction).
TestReport ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                         std::string null_description = "continuous null");
TestReport ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Σ(O−E)²/E against equal cell masses; `counts` are raw occurrence counts.
TestReport chi2_uniform(const Eigen::VectorXd& counts);

/// Mean of a correlated series with a batch-means standard error.
struct BatchMean {
  double mean = 0.0;
  double se = 0.0;
  int batches = 0;
};
BatchMean batch_mean(const std::vector<double>& series, int batches = 50);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci = 0.0;  // 95% half-width for the slope
  double slope_se = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope·x.
RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
/// OLS on (log x, log y).
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace occlab
