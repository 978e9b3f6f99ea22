#pragma once

#include "occlab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace testing {

inline constexpr double kPi = std::numbers::pi;

/// Random real trigonometric polynomial with all |k_a| <= kmax.
inline occlab::ModeList random_modes(std::mt19937_64& rng, int dim, int kmax, int count,
                                     bool with_mean = true) {
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  std::normal_distribution<double> nd;
  occlab::ModeList modes;
  if (with_mean) modes.push_back({occlab::Wavevector::Zero(dim), nd(rng), 0.0});
  for (int i = 0; i < count; ++i) {
    occlab::Wavevector k(dim);
    for (int a = 0; a < dim; ++a) k[a] = kd(rng);
    if (k.isZero()) continue;
    modes.push_back({k, nd(rng), nd(rng)});
  }
  return modes;
}

inline occlab::PeriodicField random_field(std::mt19937_64& rng, const occlab::Grid& g, int kmax,
                                          int count = 12, bool with_mean = true) {
  return occlab::synthesize(random_modes(rng, g.dim, kmax, count, with_mean), g);
}

/// Direct evaluation of a mode list at x, independent of the FFT path.
inline double eval_modes(const occlab::ModeList& modes, const occlab::Point& x) {
  double acc = 0.0;
  for (const auto& m : modes) {
    double ph = 0.0;
    for (int a = 0; a < x.size(); ++a) ph += m.k[a] * x[a];
    acc += m.a * std::cos(2 * kPi * ph) + m.b * std::sin(2 * kPi * ph);
  }
  return acc;
}

inline occlab::Point point(std::initializer_list<double> v) {
  occlab::Point p(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

}  // namespace testing
