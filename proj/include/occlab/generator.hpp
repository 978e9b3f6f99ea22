#pragma once

#include "occlab/spectral.hpp"

#include <string>
#include <vector>

namespace occlab {

/// Drift vector field b = (b_1, ..., b_d) plus its declared Hölder smoothness.
struct DriftSpec {
  std::vector<PeriodicField> components;
  double declared_smoothness = 1.0;

  int dim() const { return static_cast<int>(components.size()); }
  const Grid& grid() const { return components.front().grid(); }
};

DriftSpec make_drift(std::vector<PeriodicField> components, double declared_smoothness = 1.0);
DriftSpec zero_drift(const Grid& g);
/// b = ∇B.
DriftSpec gradient_drift(const PeriodicField& potential);
/// Built-in non-gradient, non-solenoidal field (d ≥ 2):
/// b_1 = sin(2πx_2) + ½ sin(2πx_1), b_2 = sin(2πx_3) for d = 3, other components 0.
DriftSpec shear_drift(const Grid& g);

/// Dispersion σ (row-major d×d fields) with a = ½σσᵀ and ellipticity bounds.
struct DiffusivitySpec {
  int d = 0;
  std::vector<PeriodicField> sigma;
  std::vector<PeriodicField> a;
  double lambda = 0.0;
  double Lambda = 0.0;
  Eigen::Index argmin_node = 0;  // grid node attaining lambda
  /// Mean over the grid of tr a(x) / d, the scale used by spectral preconditioners.
  double mean_diffusion = 0.0;

  int dim() const { return d; }
  const Grid& grid() const { return sigma.front().grid(); }
  const PeriodicField& sigma_at(int i, int j) const { return sigma[i * d + j]; }
  const PeriodicField& a_at(int i, int j) const { return a[i * d + j]; }
};

/// Builds a = ½σσᵀ and the nodewise eigenvalue bounds. Does not reject
/// degenerate σ; the ellipticity gate lives in assemble().
DiffusivitySpec make_diffusivity(std::vector<PeriodicField> sigma);
DiffusivitySpec scaled_identity_diffusivity(const Grid& g, double scale = 1.0);
/// σ_ii = 1 + amp·sin(2πx_i), σ_{i,i+1} = 0.8·amp·cos(2πx_{i+1}).
DiffusivitySpec modulated_diffusivity(const Grid& g, double amplitude = 0.25);
/// Constant diagonal σ = diag(√(2 a_ii)).
DiffusivitySpec diagonal_diffusivity(const Grid& g, const std::vector<double>& a_diag);

enum class OperatorKind { generator, adjoint };

/// Assembled L = Σ a_ij ∂_i∂_j + Σ b_i ∂_i, or its L² adjoint
/// L* = Σ_i ∂_i(Σ_j a_ij ∂_j ·) − Σ_i b̃_i ∂_i − (div b̃), with b̃_i = b_i − Σ_j ∂_j a_ij.
/// Coefficient products are formed on the grid with 2/3-rule dealiasing.
class GeneratorOperator {
 public:
  GeneratorOperator(DriftSpec drift, DiffusivitySpec diffusivity, OperatorKind kind);

  OperatorKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim; }
  const DriftSpec& drift() const { return drift_; }
  const DiffusivitySpec& diffusivity() const { return diffusivity_; }
  const std::vector<PeriodicField>& btilde() const { return btilde_; }
  const PeriodicField& div_btilde() const { return div_btilde_; }

  PeriodicField apply(const PeriodicField& u) const;
  /// Generator only: Σ_i ∂_i(Σ_j a_ij ∂_j u) + b̃·∇u.
  PeriodicField apply_divergence_form(const PeriodicField& u) const;
  /// A u = Σ a_ij ∂_i∂_j u.
  PeriodicField apply_second_order(const PeriodicField& u) const;
  /// Grid-vector form of apply() for Krylov solvers.
  Eigen::VectorXd apply_values(const Eigen::VectorXd& u) const;

 private:
  struct Coefficient {
    Eigen::VectorXd values;
    bool zero = true;
    bool constant = true;
    double value = 0.0;
  };
  static Coefficient classify(const PeriodicField& f);
  Eigen::VectorXcd nondivergence(const Eigen::VectorXcd& uhat, bool with_drift) const;
  Eigen::VectorXcd divergence(const Eigen::VectorXcd& vhat, double drift_sign,
                              bool with_potential) const;

  OperatorKind kind_;
  Grid grid_;
  DriftSpec drift_;
  DiffusivitySpec diffusivity_;
  std::vector<PeriodicField> btilde_;
  PeriodicField div_btilde_;
  std::vector<Coefficient> a_coef_, b_coef_, bt_coef_;
  Coefficient div_coef_;
};

GeneratorOperator assemble(const DriftSpec& drift, const DiffusivitySpec& diffusivity,
                           double ellipticity_tol = 1e-12);
GeneratorOperator assemble_adjoint(const DriftSpec& drift, const DiffusivitySpec& diffusivity,
                                   double ellipticity_tol = 1e-12);
inline PeriodicField apply(const GeneratorOperator& op, const PeriodicField& u) {
  return op.apply(u);
}

}  // namespace occlab
