#pragma once

#include "occlab/poisson.hpp"
#include "occlab/sde.hpp"

#include <cstdint>
#include <vector>

namespace occlab {

/// G_T(f_i) = √T (μ̂_T(f_i) − μ(f_i)) on one path.
struct EmpiricalProcessSample {
  std::vector<PeriodicField> test_functions;
  Eigen::VectorXd values;
  double T = 0.0;
  std::uint64_t path_seed = 0;
  std::uint64_t path_stream = 0;
};

/// ∫ f dμ for a mass-normalized μ.
double mu_expectation(const PeriodicField& f, const InvariantMeasure& mu);

EmpiricalProcessSample empirical_process(const DiffusionPath& path, const std::vector<PeriodicField>& fs,
                                         const InvariantMeasure& mu);

/// Poisson solution u = L⁻¹[f̄] together with the flux σᵀ∇u sampled on the
/// doubled grid, where products of it with μ integrate exactly.
struct PoissonFlux {
  PeriodicField u;
  std::vector<Eigen::VectorXd> flux;  // d components on the 2n grid
};

PoissonFlux poisson_flux(const PeriodicField& f, const GeneratorOperator& L, const InvariantMeasure& mu,
                         const DiffusivitySpec& diffusivity, double tol = 1e-10);
/// ⟨σᵀ∇u_f, σᵀ∇u_g⟩_μ from precomputed fluxes.
double flux_inner(const PoissonFlux& a, const PoissonFlux& b, const InvariantMeasure& mu);

/// Limit covariance ⟨σᵀ∇L⁻¹[f̄], σᵀ∇L⁻¹[ḡ]⟩_μ; centering is applied internally.
double covariance(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
                  const InvariantMeasure& mu, const DiffusivitySpec& diffusivity);

struct CovarianceGram {
  std::vector<PeriodicField> test_functions;
  Eigen::MatrixXd gram;
  double eigen_floor = 0.0;  // smallest eigenvalue of the symmetrized matrix, before clamping
};

CovarianceGram gram(const std::vector<PeriodicField>& fs, const GeneratorOperator& L,
                    const InvariantMeasure& mu, const DiffusivitySpec& diffusivity);
/// Symmetrizes and clamps eigenvalues in (−1e−10, 0) to zero; lower eigenvalues are an error.
CovarianceGram make_gram(std::vector<PeriodicField> fs, Eigen::MatrixXd C);

/// One draw of N(0, C) via the symmetric square root of C.
Eigen::VectorXd sample_limit(const CovarianceGram& C, std::uint64_t seed);
/// `draws` columns; column j uses stream j of `seed`.
Eigen::MatrixXd sample_limit(const CovarianceGram& C, std::uint64_t seed, int draws);

struct MartingaleDecomposition {
  double empirical = 0.0;   // G_T(f)
  double boundary = 0.0;    // T^{-1/2}(u(X_T) − u(X_0))
  double stochastic = 0.0;  // T^{-1/2} Σ ∇u(X_k)ᵀσ(X_k)ξ_k
  double residual = 0.0;    // G_T − boundary + stochastic
};

/// f must already be centered under μ.
MartingaleDecomposition martingale_decomposition(const DiffusionPath& path, const PeriodicField& f,
                                                 const GeneratorOperator& L, const InvariantMeasure& mu,
                                                 const DiffusivitySpec& diffusivity);

/// Per-step values ‖σ(X_k)ᵀ∇u(X_k)‖², u = L⁻¹[f̄]; their time average estimates covariance(f, f).
std::vector<double> quadratic_variation_series(const DiffusionPath& path, const PeriodicField& f,
                                               const GeneratorOperator& L, const InvariantMeasure& mu,
                                               const DiffusivitySpec& diffusivity);

/// ρ_L(f, g) = (Λ Σ_i ‖∂_i L⁻¹[f − g]‖²_∞)^{1/2}, sup norms on a 4× refined grid.
double rho_L(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
             const InvariantMeasure& mu, const DiffusivitySpec& diffusivity);
/// ρ_G(f, g) = covariance(f − g, f − g)^{1/2}.
double rho_G(const PeriodicField& f, const PeriodicField& g, const GeneratorOperator& L,
             const InvariantMeasure& mu, const DiffusivitySpec& diffusivity);
/// ρ_L(f, g) / ‖f − g‖_{B^{−1+γ}_{∞∞}}.
double besov_bound_ratio(const PeriodicField& f, const PeriodicField& g, double gamma,
                         const GeneratorOperator& L, const InvariantMeasure& mu,
                         const DiffusivitySpec& diffusivity);

}  // namespace occlab
