#pragma once

#include "occlab/generator.hpp"

#include <cstdint>
#include <vector>

namespace occlab {

/// Off-grid evaluator for b and σ by direct Fourier synthesis. Constant
/// coefficients skip synthesis entirely.
class SdeModel {
 public:
  SdeModel(const DriftSpec& drift, const DiffusivitySpec& diffusivity);

  int dim() const { return dim_; }
  /// b(x) into b[0..d), σ(x) row-major into s[0..d²).
  void evaluate(const Point& x, double* b, double* s) const;

 private:
  int dim_ = 0;
  FieldEvaluator drift_, sigma_;
  bool drift_constant_ = false, sigma_constant_ = false;
  std::vector<double> b0_, s0_;
};

/// Euler-Maruyama trajectory on [0,1)^d with its Brownian increments.
struct DiffusionPath {
  int dim = 0;
  Point x0;
  double h = 0.0;
  double T = 0.0;
  Eigen::Index steps = 0;        // number of completed steps N = floor(T/h)
  std::vector<double> states;    // (N+1)·d, row k is X_k
  std::vector<double> noise;     // N·d, row k is ξ_k ~ Normal(0, hI); empty if not kept
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  const double* state_ptr(Eigen::Index k) const { return states.data() + k * dim; }
  Point state(Eigen::Index k) const { return Eigen::Map<const Eigen::VectorXd>(state_ptr(k), dim); }
  Point terminal() const { return state(steps); }
};

/// Nonnegative weights summing to 1 on the m^d cell centers (axis 0 slowest).
struct DiscreteMeasure {
  int dim = 0;
  int m = 0;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
  Point center(Eigen::Index cell) const;
};

DiscreteMeasure make_discrete_measure(int dim, int m, Eigen::VectorXd weights);
Eigen::Index cell_index(const double* x, int dim, int m);

Eigen::Index step_count(double T, double h);

DiffusionPath simulate_path(const SdeModel& model, const Point& x0, double T, double h,
                            std::uint64_t seed, std::uint64_t stream = 0, bool keep_noise = true);
DiffusionPath simulate_path(const DriftSpec& drift, const DiffusivitySpec& diffusivity,
                            const Point& x0, double T, double h, std::uint64_t seed,
                            std::uint64_t stream = 0);
/// Runs the scheme with prescribed increments (N·d values).
DiffusionPath simulate_with_noise(const SdeModel& model, const Point& x0, double h,
                                  std::vector<double> noise);
/// Recomputes the states of `path` from x0 and its stored increments.
DiffusionPath replay(const SdeModel& model, const DiffusionPath& path);
/// Sums consecutive blocks of `factor` increments: the Brownian path seen at step factor·h.
std::vector<double> coarsen_noise(const std::vector<double>& noise, int dim, int factor);

/// Brownian increments for N steps of size h drawn from stream (seed, stream).
std::vector<double> brownian_increments(int dim, Eigen::Index steps, double h, std::uint64_t seed,
                                        std::uint64_t stream);

/// Left-endpoint Riemann sum (1/(N h)) Σ_{k<N} f(X_k) h.
double occupation_average(const DiffusionPath& path, const PeriodicField& f);
std::vector<double> occupation_averages(const DiffusionPath& path, const std::vector<PeriodicField>& fs);
/// Fraction of left-endpoint states X_0..X_{N-1} in each of the m^d cells.
DiscreteMeasure occupation_histogram(const DiffusionPath& path, int m);

}  // namespace occlab
