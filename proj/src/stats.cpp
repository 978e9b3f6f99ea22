#include "occlab/stats.hpp"

#include "occlab/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace occlab {

namespace {

constexpr double kPi = std::numbers::pi;

double ks_p_value(double D, double ne) {
  const double rn = std::sqrt(ne);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * D);
}

void require_finite(const std::vector<double>& v, const char* who) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(who) + ": samples must be finite");
}

}  // namespace

double kolmogorov_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // Theta-function form, fast for small x.
    const double y = std::exp(-kPi * kPi / (8.0 * x * x));
    double s = 0.0;
    for (int k = 1; k <= 50; k += 2) {
      const double t = std::pow(y, double(k) * k);
      s += t;
      if (t < 1e-18) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * kPi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

TestReport ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                         std::string null_description) {
  if (samples.size() < 20) throw InvalidArgument("ks_one_sample: at least 20 samples are required");
  require_finite(samples, "ks_one_sample");
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  TestReport r;
  r.statistic = D;
  r.p_value = ks_p_value(D, n);
  r.n = {samples.size()};
  r.null_description = std::move(null_description);
  return r;
}

TestReport ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 20 || b.size() < 20) throw InvalidArgument("ks_two_sample: at least 20 samples per group are required");
  require_finite(a, "ks_two_sample");
  require_finite(b, "ks_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    D = std::max(D, std::abs(i / na - j / nb));
  }
  TestReport r;
  r.statistic = D;
  r.p_value = ks_p_value(D, na * nb / (na + nb));
  r.n = {a.size(), b.size()};
  r.null_description = "samples share one continuous distribution";
  return r;
}

TestReport chi2_uniform(const Eigen::VectorXd& counts) {
  if (counts.size() < 2) throw InvalidArgument("chi2_uniform: at least 2 cells are required");
  if ((counts.array() < 0.0).any() || !counts.allFinite())
    throw InvalidArgument("chi2_uniform: counts must be finite and nonnegative");
  const double total = counts.sum();
  if (!(total > 0.0)) throw InvalidArgument("chi2_uniform: empty histogram");
  const double E = total / double(counts.size());
  const double stat = (counts.array() - E).square().sum() / E;
  const boost::math::chi_squared dist(double(counts.size() - 1));
  TestReport r;
  r.statistic = stat;
  r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  r.n = {static_cast<std::size_t>(std::llround(total))};
  r.null_description = "equal cell masses";
  return r;
}

BatchMean batch_mean(const std::vector<double>& series, int batches) {
  if (batches < 2) throw InvalidArgument("batch_mean: at least 2 batches are required");
  const std::size_t len = series.size() / std::size_t(batches);
  if (len == 0) throw InvalidArgument("batch_mean: series shorter than the batch count");
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += series[b * len + i];
    means[b] /= double(len);
  }
  BatchMean r;
  r.batches = batches;
  for (double m : means) r.mean += m;
  r.mean /= batches;
  double v = 0.0;
  for (double m : means) v += (m - r.mean) * (m - r.mean);
  r.se = std::sqrt(v / double(batches - 1) / batches);
  return r;
}

RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_line: x and y differ in length");
  if (x.size() < 2) throw InvalidArgument("fit_line: at least 2 points are required");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_line: x values are all equal");
  RateFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      sse += e * e;
    }
    f.slope_se = std::sqrt(sse / double(n - 2) / sxx);
    const boost::math::students_t t(double(n - 2));
    f.ci = boost::math::quantile(boost::math::complement(t, 0.025)) * f.slope_se;
  }
  return f;
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw InvalidArgument("fit_rate: x values must be positive");
    lx[i] = std::log(x[i]);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw InvalidArgument("fit_rate: y values must be positive");
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace occlab
