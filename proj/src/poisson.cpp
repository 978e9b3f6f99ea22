#include "occlab/poisson.hpp"

#include "occlab/errors.hpp"
#include "occlab/krylov.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <sstream>

namespace occlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_centered(const PeriodicField& f, const InvariantMeasure& mu) {
  require_same_grid(f.grid(), mu.grid(), "solve_poisson");
  const double m = inner(f, mu.density);
  if (std::abs(m) > 1e-8 * std::max(1.0, l2_norm(f))) {
    std::ostringstream os;
    os << "right-hand side is not centered under mu (integral " << m << "); call center_mu first";
    throw InvalidArgument(os.str());
  }
  if (out_of_band_norm(f) > 1e-12 * std::max(1.0, l2_norm(f)))
    throw InvalidArgument("right-hand side has energy beyond the dealiased band |k_a| <= n/3");
}

}  // namespace

PeriodicField center_mu(const PeriodicField& f, const InvariantMeasure& mu) {
  require_same_grid(f.grid(), mu.grid(), "center_mu");
  return f - inner(f, mu.density) / mu.mass;
}

PoissonSolution solve_poisson(const GeneratorOperator& L, const PeriodicField& f,
                              const InvariantMeasure& mu, double tol) {
  if (L.kind() != OperatorKind::generator) throw InvalidArgument("solve_poisson expects L, not L*");
  require_same_grid(L.grid(), f.grid(), "solve_poisson");
  require_centered(f, mu);
  const Grid& g = L.grid();
  const double scale = L.diffusivity().mean_diffusion;
  const GridTables& t = tables(g);

  PoissonSolution out;
  out.rhs = f;
  if (f.coeffs().cwiseAbs().maxCoeff() == 0.0) {
    out.u = PeriodicField::zero(g);
    return out;
  }

  auto A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return L.apply_values(v); };
  auto M = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    Eigen::VectorXcd h = grid_to_coeffs(g, r);
    h[0] = 0.0;
    for (Eigen::Index i = 1; i < h.size(); ++i)
      h[i] = t.band[i] ? h[i] / (-kTwoPi * kTwoPi * scale * double(t.k2[i])) : 0.0;
    return coeffs_to_grid(g, h);
  };
  KrylovOptions ko;
  ko.tol = 0.5 * tol * std::sqrt(double(g.size()));
  ko.max_iterations = 3000;
  const KrylovResult kr = gmres(A, M, f.values(), Eigen::VectorXd::Zero(g.size()), ko);

  PeriodicField u = PeriodicField::from_values(g, kr.x);
  out.u = u - u.mean();
  out.iterations = kr.iterations;
  out.residual = l2_norm(L.apply(out.u) - f);
  if (!(out.residual <= tol)) {
    std::ostringstream os;
    os << "Poisson solve did not reach tol " << tol << " (residual " << out.residual << " after "
       << kr.iterations << " iterations)";
    throw NumericalFailure(os.str());
  }
  return out;
}

PoissonSolution solve_poisson_dense(const GeneratorOperator& L, const PeriodicField& f) {
  const Grid& g = L.grid();
  if ((g.dim <= 2 && g.n > 64) || (g.dim == 3 && g.n > 16) || g.dim > 3)
    throw InvalidArgument("dense Poisson oracle is limited to n <= 64 (d <= 2) and n <= 16 (d = 3)");
  require_same_grid(g, f.grid(), "solve_poisson_dense");

  // Real basis: cos and sin of each in-band k in a half space, k != 0.
  std::vector<PeriodicField> basis;
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    const Wavevector k = g.wavevector(i);
    if (!g.in_band(k)) continue;
    int first = 0;
    for (int a = 0; a < g.dim && first == 0; ++a) first = k[a];
    if (first < 0) continue;
    basis.push_back(cos_mode(g, k));
    basis.push_back(sin_mode(g, k));
  }
  Eigen::MatrixXd A(g.size(), basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) A.col(j) = L.apply(basis[j]).values();
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(f.values());

  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.size());
  for (std::size_t j = 0; j < basis.size(); ++j) u += c[j] * basis[j].values();
  PoissonSolution out;
  out.u = PeriodicField::from_values(g, u);
  out.rhs = f;
  out.residual = l2_norm(L.apply(out.u) - f);
  return out;
}

double smoothing_ratio(const GeneratorOperator& L, const PeriodicField& f,
                       const InvariantMeasure& mu, const BesovIndex& idx, double tol) {
  validate(idx);
  if (f.coeffs().cwiseAbs().maxCoeff() == 0.0)
    throw InvalidArgument("smoothing_ratio is undefined for f = 0");
  const PoissonSolution sol = solve_poisson(L, f, mu, tol);
  if (idx.p == 2.0 && idx.q == 2.0) return sobolev_norm(sol.u, idx.s) / sobolev_norm(f, idx.s - 2.0);
  return besov_norm(sol.u, idx) / besov_norm(f, {idx.s - 2.0, idx.p, idx.q});
}

double multiplier_lower_bound_check(const GeneratorOperator& L, const PeriodicField& u) {
  const Grid& g = L.grid();
  require_same_grid(g, u.grid(), "multiplier_lower_bound_check");
  const PeriodicField Au = L.apply_second_order(u);
  const double lambda = L.diffusivity().lambda;
  const GridTables& t = tables(g);
  double worst = kInf;
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    const double uk = std::abs(u.coeffs()[i]);
    if (uk <= 1e-12 || !t.band[i]) continue;
    worst = std::min(worst, std::abs(Au.coeffs()[i]) / (kTwoPi * kTwoPi * lambda * t.k2[i] * uk));
  }
  if (std::isinf(worst)) throw InvalidArgument("multiplier check: u has no active modes");
  return worst;
}

}  // namespace occlab
