#pragma once

#include "occlab/generator.hpp"

#include <vector>

namespace occlab {

/// Invariant probability density μ of the diffusion: L*μ = 0, ∫μ = 1.
struct InvariantMeasure {
  PeriodicField density;
  double mass = 1.0;
  double min_density = 1.0;
  double max_density = 1.0;
  double residual = 0.0;              // ‖L*μ‖_{L²}
  int iterations = 0;                 // outer inverse-iteration steps
  double uniqueness_gap = 0.0;        // ‖μ − μ'‖_{L²} for a second start, when probed
  double lipschitz_surrogate = 0.0;   // max |∇μ| on a 2x refined grid
  std::vector<double> residual_history;

  const Grid& grid() const { return density.grid(); }
};

struct InvariantOptions {
  int max_outer = 60;
  int max_inner = 600;
  /// Shift c = shift_factor·(2π)²·(mean diffusion) for (L* − c)μ_{k+1} = −cμ_k.
  double shift_factor = 0.05;
  bool probe_uniqueness = true;
};

/// Uniform density on the grid (the exact answer for divergence-free drift with constant a).
InvariantMeasure uniform_measure(const Grid& g);

InvariantMeasure solve_invariant(const GeneratorOperator& adjoint, double tol = 1e-10,
                                 const InvariantOptions& opt = {});

/// max over φ of |⟨Lφ, μ⟩|, the weak-form residual.
double ergodic_pairing_check(const InvariantMeasure& mu, const GeneratorOperator& L,
                             const std::vector<PeriodicField>& test_fields);

}  // namespace occlab
