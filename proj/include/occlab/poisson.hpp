#pragma once

#include "occlab/generator.hpp"
#include "occlab/invariant.hpp"

namespace occlab {

/// u = L⁻¹[f] normalized to ∫u dx = 0.
struct PoissonSolution {
  PeriodicField u;
  PeriodicField rhs;
  double residual = 0.0;  // ‖Lu − f‖_{L²}
  int iterations = 0;
};

/// f − ∫f dμ.
PeriodicField center_mu(const PeriodicField& f, const InvariantMeasure& mu);

PoissonSolution solve_poisson(const GeneratorOperator& L, const PeriodicField& f,
                              const InvariantMeasure& mu, double tol = 1e-9);

/// Dense oracle: applies L to every real in-band Fourier basis function and solves
/// the resulting least-squares system by QR. Limited to n ≤ 64 (d ≤ 2) and n ≤ 16 (d = 3).
PoissonSolution solve_poisson_dense(const GeneratorOperator& L, const PeriodicField& f);

/// ‖L⁻¹f‖_{B^s_pq} / ‖f‖_{B^{s−2}_pq}; Sobolev weights (1+|k|²)^s when p = q = 2.
double smoothing_ratio(const GeneratorOperator& L, const PeriodicField& f,
                       const InvariantMeasure& mu, const BesovIndex& idx, double tol = 1e-9);

/// min over active k ≠ 0 of |(Au)_k| / ((2π)² λ |k|² |u_k|) with A = Σ a_ij ∂_i∂_j.
double multiplier_lower_bound_check(const GeneratorOperator& L, const PeriodicField& u);

}  // namespace occlab
